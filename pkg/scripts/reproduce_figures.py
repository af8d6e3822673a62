"""Run the three figure scenario files and print the ISM gains at the target BERs.

    python3 scripts/reproduce_figures.py [--out results] [--workers N]

CSV curves and JSON manifests land in ``<out>/<figure>/``.
"""

from __future__ import annotations

import argparse
import warnings
from pathlib import Path

from ismsim.montecarlo import gain_at_ber, resolve_workers, run_sweep
from ismsim.scenario_io import load_scenarios, write_csv

ROOT = Path(__file__).resolve().parents[1]

# figure -> (scenario file, target BER, ISM scenario, baselines)
FIGURES = {
    "fig2": ("fig2_6bps.yaml", 1e-4, "ism_4x4_a2_4qam", ["sm_4x4_16qam", "vblast_3x4_4qam"]),
    "fig3": ("fig3_8bps.yaml", 1e-4, "ism_4x4_a3_4qam", ["sm_4x4_64qam", "vblast_4x4_4qam"]),
    "fig4": ("fig4_12bps.yaml", 1e-3, "ism_8x4_a3_8qam",
             ["sm_8x4_512qam", "vblast_4x4_8qam", "ism_4x4_a2_32qam"]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--workers", type=int)
    ap.add_argument("--only", choices=sorted(FIGURES), action="append")
    args = ap.parse_args()
    workers = resolve_workers(args.workers)

    rows = []
    for fig in args.only or sorted(FIGURES):
        fname, target, ref, baselines = FIGURES[fig]
        curves = {}
        for sc in load_scenarios(ROOT / "scenarios" / fname):
            curves[sc.name] = curve = run_sweep(sc, workers=workers)
            write_csv(curve, Path(args.out) / fig / f"{sc.label}.csv")
            print(f"{fig}/{sc.label} done ({len(curve.points)} points)")
        for b in baselines:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rows.append((fig, b, target, gain_at_ber(curves[ref], curves[b], target)))

    print(f"\n{'figure':<6}  {'ISM vs':<18} {'BER':>7}  gain [dB]")
    for fig, b, target, g in rows:
        print(f"{fig:<6}  {b:<18} {target:7.0e}  {g:9.2f}")


if __name__ == "__main__":
    main()
