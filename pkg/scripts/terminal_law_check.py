"""Empirical terminal histograms against the closed-form law.

Usage: python scripts/terminal_law_check.py [--threads N]
"""

import sys
from pathlib import Path

from bdlab.harness import ExperimentConfig, emit_results, run_poisson_check

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "poisson_check.json"


def main() -> int:
    config = ExperimentConfig.load(str(CONFIG))
    if "--threads" in sys.argv:
        import dataclasses

        config = dataclasses.replace(
            config, threads=int(sys.argv[sys.argv.index("--threads") + 1])
        )
    table = run_poisson_check(config)
    sys.stdout.write(emit_results(table, "csv"))
    worst = max(row[3] for row in table.rows)
    print(f"# worst total-variation distance: {worst:.5f}")
    return 0 if worst < 0.01 else 1


if __name__ == "__main__":
    sys.exit(main())
