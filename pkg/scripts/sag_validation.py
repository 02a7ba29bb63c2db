"""Pendant cables against the catenary, and the stiff-light limit against straight-line FK."""
import argparse

import numpy as np
from scipy.optimize import brentq

from carosac.cable_sim import CableMaterial, build_scene, midpoint_sag, robot_position, settle, simulate_pendant
from carosac.kinematics import default_rig, forward_kinematics


def catenary_sag(span, arc_length):
    a = brentq(lambda a: 2 * a * np.sinh(span / (2 * a)) - arc_length, 0.05, 1e3)
    return a * (np.cosh(span / (2 * a)) - 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--poses", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("span  arc   sim_sag  catenary  rel_err")
    for span, arc in [(2.0, 2.2), (3.0, 3.1), (1.5, 2.0), (4.0, 4.05)]:
        sim, ref = midpoint_sag(simulate_pendant(span, arc)), catenary_sag(span, arc)
        print(f"{span:4.1f} {arc:5.2f}  {sim:.4f}   {ref:.4f}    {abs(sim - ref) / ref:.3f}")

    rig = default_rig()
    stiff = CableMaterial(linear_mass=1e-4, compliance=1e-9)
    errs = []
    for p in rig.sample_positions(np.random.default_rng(args.seed), args.poses):
        sc = build_scene(rig, material=stiff, initial_position=p)
        settle(sc)
        errs.append(np.linalg.norm(robot_position(sc) - forward_kinematics(sc.rest_length, rig)))
    print(f"stiff-light limit over {args.poses} poses: max {max(errs):.2e} m, mean {np.mean(errs):.2e} m")


if __name__ == "__main__":
    main()
