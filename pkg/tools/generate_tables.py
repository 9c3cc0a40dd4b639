"""Regenerate the embedded parahydrogen property tables.

Requires CoolProp (not a runtime dependency of the package). The tables are
written to ``src/lh2transfer/data`` and are committed; run this only when the
grids change::

    python tools/generate_tables.py

Datum: saturated liquid at the normal boiling point (101325 Pa) has h = 0 and
s = 0.
"""

from __future__ import annotations

import pathlib

import numpy as np
import CoolProp.CoolProp as CP

FLUID = "ParaHydrogen"
OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "lh2transfer" / "data"

P_MIN = 0.1e5
P_MAX = 10.0e5
N_SAT = 901
N_ROWS = 397
N_THETA = 81
T_LIQ_FLOOR = 14.2
T_VAP_CEIL = 45.0


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    h0 = CP.PropsSI("H", "P", 101325.0, "Q", 0, FLUID)
    s0 = CP.PropsSI("S", "P", 101325.0, "Q", 0, FLUID)

    t_lo = CP.PropsSI("T", "P", P_MIN, "Q", 0, FLUID)
    t_hi = CP.PropsSI("T", "P", P_MAX, "Q", 0, FLUID)
    temps = np.linspace(t_lo, t_hi, N_SAT)
    rows = []
    for t in temps:
        p = CP.PropsSI("P", "T", t, "Q", 0, FLUID)
        rows.append((
            t,
            p,
            CP.PropsSI("D", "T", t, "Q", 0, FLUID),
            CP.PropsSI("D", "T", t, "Q", 1, FLUID),
            CP.PropsSI("H", "T", t, "Q", 0, FLUID) - h0,
            CP.PropsSI("H", "T", t, "Q", 1, FLUID) - h0,
            CP.PropsSI("S", "T", t, "Q", 0, FLUID) - s0,
            CP.PropsSI("S", "T", t, "Q", 1, FLUID) - s0,
            CP.PropsSI("V", "T", t, "Q", 0, FLUID),
            CP.PropsSI("V", "T", t, "Q", 1, FLUID),
        ))
    header = "T_K,P_Pa,rho_l,rho_v,h_l,h_v,s_l,s_v,mu_l,mu_v"
    np.savetxt(OUT / "parahydrogen_saturation.csv", np.array(rows), delimiter=",",
               header=header, comments="", fmt="%.12e")

    pressures = np.linspace(P_MIN, P_MAX, N_ROWS)
    theta = np.linspace(0.0, 1.0, N_THETA)
    liq = np.empty((3, N_ROWS, N_THETA))
    vap = np.empty((3, N_ROWS, N_THETA))
    for i, p in enumerate(pressures):
        tsat = CP.PropsSI("T", "P", p, "Q", 0, FLUID)
        hl = CP.PropsSI("H", "P", p, "Q", 0, FLUID)
        hv = CP.PropsSI("H", "P", p, "Q", 1, FLUID)
        dl = CP.PropsSI("D", "P", p, "Q", 0, FLUID)
        dv = CP.PropsSI("D", "P", p, "Q", 1, FLUID)
        sl = CP.PropsSI("S", "P", p, "Q", 0, FLUID)
        sv = CP.PropsSI("S", "P", p, "Q", 1, FLUID)
        for j, th in enumerate(theta):
            # liquid: theta = 1 at saturation, 0 at the floor temperature
            if j == N_THETA - 1:
                liq[:, i, j] = 0.0
            else:
                t = T_LIQ_FLOOR + th * (tsat - T_LIQ_FLOOR)
                liq[0, i, j] = CP.PropsSI("H", "P", p, "T", t, FLUID) - hl
                liq[1, i, j] = CP.PropsSI("D", "P", p, "T", t, FLUID) - dl
                liq[2, i, j] = CP.PropsSI("S", "P", p, "T", t, FLUID) - sl
            # vapor: theta = 0 at saturation, 1 at the ceiling temperature
            if j == 0:
                vap[:, i, j] = 0.0
            else:
                t = tsat + th * (T_VAP_CEIL - tsat)
                vap[0, i, j] = CP.PropsSI("H", "P", p, "T", t, FLUID) - hv
                vap[1, i, j] = CP.PropsSI("D", "P", p, "T", t, FLUID) - dv
                vap[2, i, j] = CP.PropsSI("S", "P", p, "T", t, FLUID) - sv
    np.savez_compressed(
        OUT / "parahydrogen_single_phase.npz",
        pressures=pressures,
        theta=theta,
        liquid=liq,
        vapor=vap,
        t_liquid_floor=T_LIQ_FLOOR,
        t_vapor_ceiling=T_VAP_CEIL,
    )


if __name__ == "__main__":
    main()
