"""Train TD3 in the no-sag environment.

Defaults to the desk-scale run (800 episodes x 100 steps); ``--full`` switches to
5000 episodes x 200 steps.
"""
import argparse
import logging
from pathlib import Path

from carosac.config import default_config_path, load_config
from carosac.envs import EnvConfig, NoSagEnv
from carosac.td3 import Td3Config, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=default_config_path())
    ap.add_argument("--episodes", type=int, default=800)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--full", action="store_true", help="5000 x 200 preset")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("runs/no_sag"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = load_config(args.config)
    episodes, steps = (5000, 200) if args.full else (args.episodes, args.steps)
    td3 = Td3Config(**{**cfg.td3.__dict__, "n_episodes": episodes, "n_steps": steps})
    env = NoSagEnv(cfg.rig, EnvConfig(max_steps_per_episode=steps, seed=args.seed))
    log, _ = train(env, td3, seed=args.seed, out_dir=args.out, progress_every=50)
    r, s = log.rewards(), log.successes()
    k = min(100, len(r))
    print(f"random-phase mean {r[:td3.random_episodes].mean():.3f}; final-{k} mean {r[-k:].mean():.3f}, "
          f"success {s[-k:].mean():.2f}; outputs in {args.out}")


if __name__ == "__main__":
    main()
