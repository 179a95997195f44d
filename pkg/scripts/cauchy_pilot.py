"""Pilot run fixing the Cauchy distance floor used by the necessity check.

Run once before the main study; the result is committed as
tests/fixtures/cauchy_floor.json.  The floor is half the smallest pilot
distance, far below the pilot minimum but far above the DKW half-width.
"""

import json
import sys

from kacwild import __version__
from kacwild.stats import rate_study

PILOT_SEED = 20240601
T_GRID = [2, 3, 4, 5, 6, 7, 8]
SIZE = 100_000


def main(path="tests/fixtures/cauchy_floor.json"):
    rep = rate_study("cauchy:1", T_GRID, SIZE, PILOT_SEED)
    out = {
        "law": rep.law,
        "seed": PILOT_SEED,
        "size": SIZE,
        "t_grid": T_GRID,
        "pilot_distances": rep.distances,
        "pilot_sigma_hat": rep.sigma_used,
        "dkw_half_width": rep.dkw_half_width,
        "floor": round(0.5 * min(rep.distances), 4),
        "version": __version__,
    }
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main(*sys.argv[1:])
