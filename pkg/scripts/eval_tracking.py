"""Compare the IK baseline and a trained agent on random spline trajectories in both environments."""
import argparse
import csv
from pathlib import Path

import numpy as np

from carosac.config import default_config_path, load_config
from carosac.envs import CarosimEnv, EnvConfig, NoSagEnv, Variant
from carosac.td3 import Td3Agent
from carosac.traj_eval import IkController, PolicyController, error_stats, random_trajectory, track


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=default_config_path())
    ap.add_argument("--checkpoint", type=Path, help="trained agent; IK only when omitted")
    ap.add_argument("--n-traj", type=int, default=20)
    ap.add_argument("--waypoints", type=int, default=4)
    ap.add_argument("--speed-max", type=float, default=1.0)
    ap.add_argument("--dt", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("runs/tracking.csv"))
    args = ap.parse_args()
    cfg = load_config(args.config)
    rig = cfg.rig

    controllers = {"ik": IkController(rig)}
    if args.checkpoint:
        controllers["rl"] = PolicyController(Td3Agent.load(args.checkpoint), rig)
    envs = {"no_sag": NoSagEnv(rig, EnvConfig(), cfg.fk),
            "carosim": CarosimEnv(rig, EnvConfig(variant=Variant.CAROSIM), cfg.sim, cfg.material)}
    seeds = np.random.SeedSequence(args.seed).spawn(args.n_traj)
    trajs = [random_trajectory(rig, args.waypoints, args.speed_max, args.dt, seed=np.random.default_rng(s))
             for s in seeds]

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["controller", "env", "trajectory", "rmse_x", "rmse_y", "rmse_z", "mean_euclidean"])
        for cname, ctrl in controllers.items():
            for ename, env in envs.items():
                means = []
                for i, traj in enumerate(trajs):
                    s = error_stats(track(ctrl, env, traj))
                    means.append(s.mean_euclidean)
                    writer.writerow([cname, ename, i, *map(repr, s.rmse_xyz), repr(s.mean_euclidean)])
                print(f"{cname:>3} in {ename:<8}: median position error {np.median(means):.4f} m")


if __name__ == "__main__":
    main()
