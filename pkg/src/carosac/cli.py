"""Command-line entry point: ``carosac <subcommand> [options]``.

Exit codes: 0 on success, 1 when the run itself fails (simulator divergence, FK
non-convergence and similar), 2 for usage, configuration or input-file errors.
Set ``CAROSAC_LOG`` to a logging level name (``DEBUG``, ``INFO``) for progress output.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .cable_sim import CableMaterial
from .config import RunConfig, default_config_path, load_config
from .envs import Variant, make_env
from .errors import (CarosacError, ConfigError, InfeasibleSpeed, InvalidCount, MalformedCsv)
from .kinematics import inverse_kinematics
from .rewards import reward_shapes_report
from .td3 import Td3Agent, train
from .traj_eval import (IkController, PolicyController, Trajectory, error_stats, random_trajectory,
                        replay_recorded_lengths, track, write_length_log)


EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

# errors caused by what the user passed in rather than by the computation
USAGE_ERRORS = (ConfigError, MalformedCsv, InfeasibleSpeed, InvalidCount, FileNotFoundError, ValueError)

# stiff, nearly massless cables: the straight-line limit of the simulator
STIFF_LIGHT = CableMaterial(linear_mass=1e-4, compliance=1e-9)


PER_TRAJECTORY_COLUMNS = ["trajectory", "samples", "aborted", "rmse_x", "rmse_y", "rmse_z",
                          "mae_x", "mae_y", "mae_z", "mean_euclidean", "final_error"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default .)")
    common.add_argument("--force", action="store_true", help="overwrite existing output files")

    parser = _Parser(prog="carosac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("validate-rig", parents=[common], help="check rig geometry against its invariants")

    p = sub.add_parser("replay", parents=[common], help="feed a recorded cable-length CSV into the simulator")
    p.add_argument("--log", type=Path, required=True, help="CSV with t,L1..L4[,x,y,z]")
    p.add_argument("--stiff-light", action="store_true", help="use stiff, nearly massless cables")

    p = sub.add_parser("train", parents=[common], help="train a TD3 agent")
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--episodes", type=int, help="override td3.n_episodes")
    p.add_argument("--steps", type=int, help="override td3.n_steps")
    p.add_argument("--random-episodes", type=int, help="override td3.random_episodes")
    p.add_argument("--init-checkpoint", type=Path, help="warm-start from a saved agent")
    p.add_argument("--episode-log", action="store_true", help="also write per-step episode_log.csv")

    p = sub.add_parser("eval", parents=[common], help="track trajectories with a controller")
    p.add_argument("--controller", choices=["ik", "rl"], default="ik")
    p.add_argument("--checkpoint", type=Path, help="agent checkpoint for --controller rl")
    p.add_argument("--env", choices=[v.value for v in Variant], help="override env.variant")
    p.add_argument("--traj", type=Path, help="trajectory CSV t,x,y,z; random splines when omitted")
    p.add_argument("--n-traj", type=int, default=1, help="number of random trajectories")
    _traj_args(p)

    p = sub.add_parser("gen-traj", parents=[common], help="write a random spline trajectory and its IK length log")
    _traj_args(p)

    sub.add_parser("reward-report", parents=[common], help="write reward component curves")
    return parser


def _traj_args(p) -> None:
    p.add_argument("--waypoints", type=int, default=4)
    p.add_argument("--speed-max", type=float, default=1.0, help="m/s")
    p.add_argument("--dt", type=float, default=0.1, help="sample interval in s")


def _configure_logging() -> None:
    level = os.environ.get("CAROSAC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _load(args) -> RunConfig:
    if args.config is None:
        if args.command != "reward-report":
            raise UsageError("--config is required")
        return load_config(default_config_path())
    return load_config(args.config)


def _outputs(args, *names) -> list[Path]:
    """Output paths under ``--out``; refuses to clobber existing files unless ``--force``."""
    paths = [args.out / n for n in names]
    existing = [str(p) for p in paths if p.exists()]
    if existing and not args.force:
        raise UsageError(f"refusing to overwrite {', '.join(existing)} (use --force)")
    args.out.mkdir(parents=True, exist_ok=True)
    return paths


def cmd_validate_rig(args, cfg: RunConfig) -> str:
    rig = cfg.rig
    lengths = np.array([inverse_kinematics(c, rig) for c in rig.corners()])
    lo, hi = rig.length_bounds
    return (f"rig OK: workspace {rig.workspace_min.tolist()} to {rig.workspace_max.tolist()}, "
            f"corner cable lengths {lengths.min():.4f} to {lengths.max():.4f} m within [{lo}, {hi}]")


def cmd_replay(args, cfg: RunConfig) -> str:
    record_path, stats_path = _outputs(args, "replay_record.csv", "replay_stats.json")
    material = STIFF_LIGHT if args.stiff_light else cfg.material
    rec = replay_recorded_lengths(args.log, cfg.rig, cfg.sim, material)
    rec.write_csv(record_path)
    if np.all(np.isfinite(rec.reference)):
        stats = error_stats(rec)
        stats.write_json(stats_path)
        rmse = ", ".join(f"{v:.4g}" for v in stats.rmse_xyz)
        return f"replayed {len(rec)} samples; RMSE xyz [{rmse}] m"
    return f"replayed {len(rec)} samples (no reference positions)"


def cmd_train(args, cfg: RunConfig) -> str:
    variant = Variant(args.variant) if args.variant else cfg.env.variant
    overrides = {k: v for k, v in (("n_episodes", args.episodes), ("n_steps", args.steps),
                                   ("random_episodes", args.random_episodes)) if v is not None}
    td3_cfg = dataclasses.replace(cfg.td3, **overrides)
    env_cfg = dataclasses.replace(cfg.env, variant=variant, seed=args.seed,
                                  max_steps_per_episode=td3_cfg.n_steps)
    names = ["train_log.csv", "checkpoint.npz"] + (["episode_log.csv"] if args.episode_log else [])
    paths = _outputs(args, *names)
    env = make_env(cfg.rig, env_cfg, cfg.sim, cfg.material)
    agent = Td3Agent.load(args.init_checkpoint) if args.init_checkpoint else None
    tlog, _ = train(env, td3_cfg, seed=args.seed, agent=agent, out_dir=args.out,
                    episode_log_path=paths[2] if args.episode_log else None, progress_every=50)
    rewards, success = tlog.rewards(), tlog.successes()
    tail = slice(-min(100, len(tlog)), None)
    return (f"trained {len(tlog)} episodes ({variant.value}); final-{len(rewards[tail])} mean reward "
            f"{rewards[tail].mean():.3f}, success {success[tail].mean():.2f}")


def _trajectories(args, cfg: RunConfig) -> list[Trajectory]:
    if args.traj is not None:
        return [Trajectory.read_csv(args.traj)]
    if args.n_traj < 1:
        raise InvalidCount(f"--n-traj must be positive (got {args.n_traj})")
    seeds = np.random.SeedSequence(args.seed).spawn(args.n_traj)
    return [random_trajectory(cfg.rig, args.waypoints, args.speed_max, args.dt,
                              seed=np.random.default_rng(s)) for s in seeds]


def cmd_eval(args, cfg: RunConfig) -> str:
    variant = Variant(args.env) if args.env else cfg.env.variant
    if args.controller == "rl":
        if args.checkpoint is None:
            raise UsageError("--controller rl needs --checkpoint")
        controller = PolicyController(Td3Agent.load(args.checkpoint), cfg.rig)
    else:
        controller = IkController(cfg.rig)
    trajs = _trajectories(args, cfg)
    record_path, per_traj_path, stats_path = _outputs(args, "eval_record.csv", "eval_per_trajectory.csv",
                                                      "eval_stats.json")
    env = make_env(cfg.rig, dataclasses.replace(cfg.env, variant=variant, seed=args.seed), cfg.sim, cfg.material)
    rows, aborted = [], 0
    for i, traj in enumerate(trajs):
        rec = track(controller, env, traj)
        aborted += rec.aborted
        if i == 0:
            rec.write_csv(record_path)
        if len(rec) == 0:
            continue
        s = error_stats(rec)
        rows.append([i, len(rec), int(rec.aborted), *s.rmse_xyz, *s.mae_xyz, s.mean_euclidean,
                     float(np.linalg.norm(s.errors[-1]))])
    with open(per_traj_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PER_TRAJECTORY_COLUMNS)
        for r in rows:
            writer.writerow(r[:3] + [repr(float(v)) for v in r[3:]])
    arr = np.array([r[3:] for r in rows]) if rows else np.full((1, 8), np.nan)
    summary = {"controller": args.controller, "env": variant.value, "trajectories": len(trajs),
               "aborted": aborted, "mean_rmse_xyz": arr[:, 0:3].mean(axis=0).tolist(),
               "mean_mae_xyz": arr[:, 3:6].mean(axis=0).tolist(),
               "median_mean_euclidean": float(np.median(arr[:, 6])),
               "median_final_error": float(np.median(arr[:, 7]))}
    with open(stats_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    rmse = ", ".join(f"{v:.4g}" for v in summary["mean_rmse_xyz"])
    return (f"evaluated {args.controller} on {len(trajs)} trajectories ({variant.value}); "
            f"mean RMSE xyz [{rmse}] m, {aborted} aborted")


def cmd_gen_traj(args, cfg: RunConfig) -> str:
    traj_path, log_path = _outputs(args, "trajectory.csv", "lengths.csv")
    traj = random_trajectory(cfg.rig, args.waypoints, args.speed_max, args.dt, seed=args.seed)
    traj.write_csv(traj_path)
    write_length_log(log_path, traj, cfg.rig)
    return f"wrote {len(traj)} samples over {traj.t[-1]:.2f} s, peak speed {traj.speeds().max():.3f} m/s"


def cmd_reward_report(args, cfg: RunConfig) -> str:
    (path,) = _outputs(args, "reward_shapes.csv")
    reward_shapes_report(path)
    return f"wrote {path}"


COMMANDS = {"validate-rig": cmd_validate_rig, "replay": cmd_replay, "train": cmd_train, "eval": cmd_eval,
            "gen-traj": cmd_gen_traj, "reward-report": cmd_reward_report}


def run(argv=None) -> int:
    """Parse ``argv``, dispatch, and map failures onto exit codes."""
    _configure_logging()
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        cfg = _load(args)
        print(COMMANDS[args.command](args, cfg))
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CarosacError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
