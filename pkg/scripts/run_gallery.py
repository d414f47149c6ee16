#!/usr/bin/env python3
"""Run the preset gallery and report verdicts against expectations.

Writes one JSON artifact with every record and, with --csv-dir, one CSV
of criterion profiles per preset.  Exit code 1 on any mismatch so CI
can gate on it.
"""

import argparse
import sys
from pathlib import Path

from torsio import artifacts
from torsio.gallery import preset_names, run_gallery


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="preset names (default: all)")
    ap.add_argument("--refine", action="store_true", help="halve h, double the box")
    ap.add_argument("--out", default="gallery.json")
    ap.add_argument("--csv-dir", help="write per-preset profile CSVs here")
    args = ap.parse_args()

    names = args.names or preset_names()
    result = run_gallery(names, refine=args.refine)
    artifacts.write_json(args.out, {"kind": "gallery_run", **result},
                         argv=["gallery", "run", *names] + (["--refine"] if args.refine else []))

    if args.csv_dir:
        outdir = Path(args.csv_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        for rec in result["records"]:
            rows = []
            for side in ("l2", "l1"):
                for rep in rec[side]["reports"]:
                    for r, v in zip(rep["radii"], rep["values"]):
                        rows.append((side, rep["criterion"], r, v))
            artifacts.write_csv(
                outdir / f"{rec['preset']['name']}.csv",
                ("embedding", "criterion", "radius", "value"),
                rows,
            )

    width = max(len(n) for n in names)
    for rec in result["records"]:
        name = rec["preset"]["name"]
        mark = "ok" if rec["ok"] else "MISMATCH"
        print(f"{name:<{width}}  L2 {rec['l2']['decision']:<12} "
              f"L1 {rec['l1']['decision']:<12} {mark}")
    print("all ok" if result["all_ok"] else "mismatches present")
    return 0 if result["all_ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
