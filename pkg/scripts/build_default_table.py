#!/usr/bin/env python3
"""Build the full-resolution (1 degree) collision table and report timing.

Usage: python scripts/build_default_table.py [out.coltab] [--step DEG]
"""

import argparse
import sys
import time

from birange.collision import BoundingBoxModel, default_grids, generate_table, write_table
from birange.config import FacilityConfig


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default="collision_1deg.coltab")
    ap.add_argument("--step", type=float, default=1.0)
    args = ap.parse_args()

    cfg = FacilityConfig()
    model = BoundingBoxModel.from_config(cfg)
    grids = default_grids(cfg, args.step)
    n = 1
    for g in grids.values():
        n *= g.n
    print(f"building {tuple(g.n for g in grids.values())} = {n} cells ...")
    t0 = time.time()
    table = generate_table(
        model, cfg, grids,
        progress=lambda i, m: print(f"  slice {i}/{m}", end="\r", file=sys.stderr),
    )
    dt = time.time() - t0
    write_table(table, args.out)
    print(f"\n{table.n_cells} cells, colliding fraction {table.colliding_fraction:.4f}, "
          f"{dt:.1f} s -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
