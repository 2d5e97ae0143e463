import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerated_pvalue

from dmelites.stats import Aggregate, Symbol, fev, summarize_runs, wilcoxon_rank_sum

samples = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=15)


def test_fev_examples():
    assert fev(3.0, 3.0) == 0.0
    assert fev(12.5, 2.5) == 10.0
    assert fev(-449.0, -450.0) == 1.0


def test_identical_samples():
    v = wilcoxon_rank_sum([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert v.symbol is Symbol.EQUALS and v.p_value == 1.0
    big = list(range(20))
    w = wilcoxon_rank_sum(big, big)
    assert w.symbol is Symbol.EQUALS and w.p_value == 1.0


def test_separated_samples():
    a, b = list(range(1, 11)), list(range(11, 21))
    v = wilcoxon_rank_sum(a, b)
    assert v.symbol is Symbol.PLUS and v.statistic == 0.0
    # exact two-sided tail is 2 / C(20, 10); the approximation should be of the same order
    assert v.p_value < 0.05
    assert v.p_value == pytest.approx(2 / math.comb(20, 10), rel=1.0, abs=1e-3)
    assert wilcoxon_rank_sum(a, b, larger_is_better=True).symbol is Symbol.MINUS


def test_exact_path_small_separated():
    v = wilcoxon_rank_sum([1, 2, 3, 4, 5], [6, 7, 8, 9, 10])
    assert v.p_value == 2 / math.comb(10, 5)
    assert v.symbol is Symbol.PLUS


def test_matches_enumeration_for_small_samples():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        n_a, n_b = rng.integers(1, 9, size=2)
        # a coarse grid gives plenty of ties
        values = rng.integers(0, 6, size=n_a + n_b).astype(float) if rng.random() < 0.5 \
            else rng.normal(size=n_a + n_b)
        a, b = values[:n_a], values[n_a:]
        assert wilcoxon_rank_sum(a, b).p_value == enumerated_pvalue(a, b)


def test_normal_approximation_close_to_enumeration():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=9), rng.normal(0.8, 1.0, size=9)
    assert wilcoxon_rank_sum(a, b).p_value == pytest.approx(enumerated_pvalue(a, b), abs=0.01)


@pytest.mark.parametrize("a, b", [([], [1.0]), ([1.0], [])])
def test_empty_sample(a, b):
    with pytest.raises(ValueError):
        wilcoxon_rank_sum(a, b)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5])
def test_alpha_range(alpha):
    with pytest.raises(ValueError):
        wilcoxon_rank_sum([1.0], [2.0], alpha)


flip = {Symbol.PLUS: Symbol.MINUS, Symbol.MINUS: Symbol.PLUS, Symbol.EQUALS: Symbol.EQUALS}


@settings(max_examples=300, deadline=None)
@given(a=samples, b=samples)
def test_antisymmetry_and_range(a, b):
    ab, ba = wilcoxon_rank_sum(a, b), wilcoxon_rank_sum(b, a)
    assert ba.symbol is flip[ab.symbol]
    assert ab.p_value == pytest.approx(ba.p_value, rel=1e-12, abs=0)
    assert 0.0 <= ab.p_value <= 1.0
    if ab.symbol is not Symbol.EQUALS:
        assert ab.p_value < 0.05


@settings(max_examples=200, deadline=None)
@given(a=st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=12),
       b=st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=12))
def test_monotone_transform_invariance(a, b):
    # strictly increasing map that stays strict in floating point: value -> exp(rank among distinct values)
    levels = {v: math.exp(i) for i, v in enumerate(sorted(set(a) | set(b)))}
    before = wilcoxon_rank_sum(a, b)
    after = wilcoxon_rank_sum([levels[v] for v in a], [levels[v] for v in b])
    assert after.symbol is before.symbol
    assert after.p_value == before.p_value


def test_aggregate_small_set():
    agg = Aggregate.of([1, 2, 3, 4, 5])
    assert (agg.median, agg.q25, agg.q75) == (3.0, 2.0, 4.0)
    assert agg.mean == 3.0 and agg.std == pytest.approx(math.sqrt(2.0))


def record(history):
    return SimpleNamespace(history=history)


def test_summarize_single_run():
    s = summarize_runs([record([(10, 4.0, 0.1), (20, 2.5, 0.3)])])
    assert s.runs == 1
    assert s.fev.mean == s.fev.median == 2.5 and s.fev.std == 0.0
    assert s.coverage.mean == 0.3
    assert s.evaluations == [10, 20]


def test_summarize_synthetic_gaussian():
    rng = np.random.default_rng(7)
    finals = rng.normal(100.0, 15.0, size=30)
    s = summarize_runs([record([(1, 200.0, 0.0), (2, f, 0.5)]) for f in finals])
    assert s.fev.mean == pytest.approx(finals.mean(), rel=1e-12)
    assert s.fev.std == pytest.approx(math.sqrt(np.mean((finals - finals.mean()) ** 2)), rel=1e-12)
    # sample moments sit near the generating ones
    assert abs(s.fev.mean - 100.0) < 4 * 15.0 / math.sqrt(30)
    assert s.fev_median == [200.0, float(np.median(finals))]
    assert s.coverage_median == [0.0, 0.5]


def test_summarize_errors():
    with pytest.raises(ValueError):
        summarize_runs([])
    with pytest.raises(ValueError):
        summarize_runs([record([(1, 1.0, 0.0)]), record([(2, 1.0, 0.0)])])
