#!/usr/bin/env python3
"""Compare detected blow-up times against the Riccati prediction t* = 1/(a m0).

For the quadratic mass reaction m' = a m^2 the exact solution
m(t) = m0 / (1 - a m0 t) leaves every horizon at t* = 1/(a m0).  The
solver never reaches t*: it stops at the last step whose total
variation stays under the configured threshold.  This script sweeps
initial masses and reports how close the stopping time gets.

Usage:
    python scripts/blowup_study.py [--alpha A] [--masses M1,M2,...]
"""
import argparse
import sys
import time

from mvt.measures import dirac
from mvt.reactions import builtin_reaction
from mvt.solver import SolverConfig, solve_maximal
from mvt.velocity import zero_field


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--alpha", type=float, default=1.0, help="growth coefficient")
    parser.add_argument(
        "--masses",
        default="4,8,16,32",
        help="comma-separated initial masses",
    )
    args = parser.parse_args()
    masses = [float(tok) for tok in args.masses.split(",")]

    header = (
        f"{'m0':>8} {'t*':>10} {'stop_t':>10} {'rel_gap':>9} "
        f"{'final_tv':>12} {'nodes':>6} {'secs':>6}"
    )
    print(header)
    print("-" * len(header))
    for m0 in masses:
        t_star = 1.0 / (args.alpha * m0)
        spec = builtin_reaction("mass_rate", [args.alpha])
        config = SolverConfig(
            quad_nodes=9,
            picard_tol=1e-9,
            delta=m0,
            tv_blowup_threshold=20.0 * m0,
        )
        start = time.perf_counter()
        traj = solve_maximal(
            spec, zero_field(1), dirac(0.0, m0), 0.0, 2.0 * t_star, config
        )
        secs = time.perf_counter() - start
        gap = abs(traj.final_time - t_star) / t_star
        print(
            f"{m0:>8.1f} {t_star:>10.5f} {traj.final_time:>10.5f} {gap:>9.2%} "
            f"{traj.tv_norm[-1]:>12.4f} {len(traj.times):>6} {secs:>6.2f}"
        )
        if not traj.blown_up:
            print(f"  warning: m0={m0} did not trip the blow-up threshold")
    return 0


if __name__ == "__main__":
    sys.exit(main())
