"""Calibration run for the energy-preservation thresholds.

Runs imsverk1 and eeuler on Henon-Heiles over [0, 100] with h = 1/30 and
writes the measured statistics plus the frozen thresholds to
tests/golden/energy_calibration.json.
"""

import json
import math
import sys
from pathlib import Path

from crerk.bench import RunConfig, run_energy


def _round_up(x):
    """Round up to one significant digit."""
    scale = 10.0 ** math.floor(math.log10(x))
    return math.ceil(x / scale) * scale


def main(out=None):
    cfg = RunConfig(problem="henon-heiles", schemes=["imsverk1", "eeuler"], t_end=100.0,
                    stepsizes=["1/30"], repeats=1)
    reports = {r.scheme: r for r in run_energy(cfg)}
    sym, euler = reports["imsverk1"], reports["eeuler"]
    measured = {name: {"max_abs_rgeh": r.max_abs_rgeh, "drift_rate": r.drift_rate}
                for name, r in reports.items()}
    ratio = abs(euler.drift_rate) / abs(sym.drift_rate)
    golden = {
        "setting": {"problem": "henon-heiles", "t_end": 100.0, "h": "1/30"},
        "measured": measured,
        "drift_ratio": ratio,
        "thresholds": {
            "imsverk1_max_drift_rate": 1e-6,
            "imsverk1_max_abs_rgeh": _round_up(5.0 * sym.max_abs_rgeh),
            "min_drift_ratio": 10.0,
        },
    }
    path = Path(out or Path(__file__).resolve().parents[1] / "tests" / "golden" / "energy_calibration.json")
    path.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    print(json.dumps(golden, indent=2, sort_keys=True))
    return golden


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
