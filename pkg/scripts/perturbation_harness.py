"""Random admissible instances checked against the two perturbation bounds."""

import json
from dataclasses import dataclass

from _config import parse_config

from bsgaps.perturbation import run_harness


@dataclass
class HarnessConfig:
    trials: int = 500
    chain_trials: int = 100
    seed: int = 1
    max_dim: int = 40
    max_blocks: int = 5


def main(cfg: HarnessConfig):
    summary = run_harness(cfg.trials, cfg.seed, cfg.max_dim, cfg.max_blocks, cfg.chain_trials)
    print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main(parse_config(HarnessConfig, __doc__))
