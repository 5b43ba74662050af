"""Direct vs importance estimators on one event, small horizons.

Thin wrapper over the consistency-check subcommand; exits nonzero if any
row carries a failing verdict flag.

Usage: python scripts/estimator_agreement.py
"""

import sys
from pathlib import Path

from bdlab.harness import ExperimentConfig, emit_results, run_consistency_check

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "consistency_small_T.json"


def main() -> int:
    table = run_consistency_check(ExperimentConfig.load(str(CONFIG)))
    sys.stdout.write(emit_results(table, "csv"))
    bad = [row for row in table.rows if row[-1].endswith("_fail")]
    print(f"# failing verdicts: {len(bad)}")
    return 0 if not bad else 1


if __name__ == "__main__":
    sys.exit(main())
