"""Run the desk preset and print the summary table.

    python scripts/run_desk.py [--config desk.config] [--parallelism 4] [--output-dir DIR]
"""
import argparse
import sys
from pathlib import Path

from dmelites.experiment import load_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=str(ROOT / "desk.config"))
    parser.add_argument("--parallelism", type=int, default=1)
    parser.add_argument("--output-dir")
    args = parser.parse_args()

    config = load_config(args.config, output_dir_override=args.output_dir)
    config.parallelism = args.parallelism
    report = run_experiment(config)
    print((report.output_dir / "summary.md").read_text(), end="")
    if report.errors:
        print(f"{len(report.errors)} failed runs, see errors.json", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
