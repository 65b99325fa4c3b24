"""Regenerate the frozen calibration values: python tests/golden/generate.py"""
import json
import pathlib
import sys
import time

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

import scenarios  # noqa: E402

OUTPUT = HERE / "calibration.json"


def main():
    started = time.time()
    eq = scenarios.equivalence_table(scenarios.CALIBRATION_SEED)
    collapse = scenarios.collapse_ratios(scenarios.CALIBRATION_SEED)
    pairs = scenarios.carleson_pairs()
    ladder = scenarios.geometric_ladder()
    golden = {
        "equivalence": {"seed": scenarios.CALIBRATION_SEED, "constant": eq["constant"], "ratios": eq["ratios"]},
        "collapse": {"seed": scenarios.CALIBRATION_SEED, "interval": [min(collapse), max(collapse)],
                     "ratios": collapse},
        "carleson": {"pairs": pairs, "factor": max(max(t / m, m / t) for t, m in pairs.values())},
        "geometric": {"growth": scenarios.geometric_growth(),
                      "ladder": [row["power_value"] for row in ladder.evidence], "verdict": ladder.verdict},
        "s_convergence": {"radii": [0.6, 0.4, 0.25], "errors": scenarios.s_convergence()},
        "distance_trend": {"truncations": [12, 16, 20, 24, 28, 32], "d2": scenarios.distance_trend()},
        "kernel_profile": {"radii": [0.0, 0.5, 0.9, 0.99], "values": scenarios.kernel_profile()},
    }
    OUTPUT.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUTPUT} in {time.time() - started:.0f}s")


if __name__ == "__main__":
    main()
