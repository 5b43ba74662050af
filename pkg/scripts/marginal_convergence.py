"""Normalized window probabilities approaching their limiting rate.

Runs the exact marginal scan for the exponential and the superexponential
scaling configs and prints, per horizon, the normalized value and its gap
to the limit -a.

Usage: python scripts/marginal_convergence.py
"""

import sys
from pathlib import Path

from bdlab.harness import ExperimentConfig, run_marginal_ldp_scan

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def scan(name: str) -> None:
    config = ExperimentConfig.load(str(CONFIG_DIR / name))
    table = run_marginal_ldp_scan(config)
    print(f"{name}  (a = {config.a}, eps = {config.eps})")
    print("      T      normalized        gap to -a")
    for row in table.rows:
        T, normalized, predicted = row[0], row[4], row[5]
        if normalized == float("-inf"):
            print(f"  {T:5.1f}    empty window")
            continue
        print(f"  {T:5.1f}  {normalized:+.6f}   {abs(normalized - predicted):.6f}")
    print()


def main() -> int:
    scan("marginal_exp.json")
    scan("marginal_superexp.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
