"""Map the competition plane with a coarse parameter sweep.

Every (a1, a2) pair is classified and simulated on a small grid.  The script
prints a table of regimes and how close each run came to its equilibrium.
Points where both coefficients reach 1 have no convergence guarantee, so
they are reported as unsupported and skipped.

The sweep writes one directory per point under ``$CHEMOFLUID_OUT/sweep``
(default ``./chemofluid_out/sweep``).
"""
import os
from pathlib import Path

from chemofluid.cli import DEFAULT_OUT, OUT_ENV, config_from_dict, sweep

values = [0.2, 0.6, 1.0, 1.4, 1.8]
base = config_from_dict({
    "model": {"a1": 0.5, "a2": 0.5},
    "domain": {"nx": 16, "ny": 16},
    "solver": {"t_end": 10.0},
})
root = Path(os.environ.get(OUT_ENV, DEFAULT_OUT)) / "sweep"
agg = sweep(base, values, values, jobs=os.cpu_count() or 1, out_root=root)

short = {"CoexistenceI": "I", "ExclusionII": "II", "ExclusionIII": "III", "Unsupported": "-"}
cells = {(r["a1"], r["a2"]): r for r in agg["points"]}

print("regime by (a1 down, a2 across)")
print("a1\\a2 " + "".join(f"{v:>9}" for v in values))
for a1 in values:
    print(f"{a1:<6}" + "".join(f"{short[cells[(a1, a2)]['regime']]:>9}" for a2 in values))

print("\nfinal distance to equilibrium (max norm) after t = 10")
for a1 in values:
    row = []
    for a2 in values:
        d = cells[(a1, a2)].get("final_distance")
        row.append(f"{d:>9.1e}" if d is not None else f"{'-':>9}")
    print(f"{a1:<6}" + "".join(row))
print(f"\nartifacts in {root}")
