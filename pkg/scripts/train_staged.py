"""Two-stage training: no-sag first, then continue the same agent in the sagging-cable env."""
import argparse
import logging
from pathlib import Path

from carosac.config import default_config_path, load_config
from carosac.envs import CarosimEnv, EnvConfig, NoSagEnv, Variant
from carosac.td3 import Td3Agent, Td3Config, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=default_config_path())
    ap.add_argument("--no-sag-episodes", type=int, default=800)
    ap.add_argument("--no-sag-steps", type=int, default=100)
    ap.add_argument("--carosim-episodes", type=int, default=300)
    ap.add_argument("--carosim-random", type=int, default=20,
                    help="random-action episodes that refill the buffer with sagging-cable data")
    ap.add_argument("--init-checkpoint", type=Path, help="skip stage one and start from this agent")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("runs/staged"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    cfg = load_config(args.config)

    if args.init_checkpoint:
        agent = Td3Agent.load(args.init_checkpoint)
    else:
        stage1 = Td3Config(**{**cfg.td3.__dict__, "n_episodes": args.no_sag_episodes,
                              "n_steps": args.no_sag_steps})
        env = NoSagEnv(cfg.rig, EnvConfig(max_steps_per_episode=args.no_sag_steps, seed=args.seed))
        log, agent = train(env, stage1, seed=args.seed, out_dir=args.out / "no_sag", progress_every=50)
        print(f"stage 1: final-100 success {log.successes()[-100:].mean():.2f}")

    stage2 = Td3Config.carosim(**{**cfg.td3.__dict__, "n_episodes": args.carosim_episodes, "n_steps": 30,
                                  "random_episodes": args.carosim_random})
    env = CarosimEnv(cfg.rig, EnvConfig(variant=Variant.CAROSIM, max_steps_per_episode=30, seed=args.seed),
                     cfg.sim, cfg.material)
    log, _ = train(env, stage2, seed=args.seed + 1, agent=agent, out_dir=args.out / "carosim", progress_every=25)
    r, s = log.rewards(), log.successes()
    print(f"stage 2: random-phase mean {r[:args.carosim_random].mean():.3f}, final-50 mean {r[-50:].mean():.3f}, "
          f"success {s[-50:].mean():.2f}")


if __name__ == "__main__":
    main()
