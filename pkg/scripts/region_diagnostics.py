"""Resonance partition statistics and level-set volumes on the spectral annulus."""

import json
from dataclasses import dataclass

from _config import parse_config

from bsgaps.model import derive_spectral_window, identity_metric, make_potential, region_parameters
from bsgaps.regions import partition_diagnostics, volume_estimates


@dataclass
class RegionConfig:
    rho: float = 1e6
    samples: int = 10000
    seed: int = 1
    M: int = 3
    delta: float = 1.0
    volume_samples: int = 100000


def main(cfg: RegionConfig):
    pot = make_potential(2, {(1, 1): 0.5, (2, 0): 0.5})
    metric = identity_metric(2)
    window = derive_spectral_window(cfg.rho, pot, metric)
    params = region_parameters(2, cfg.rho, pot, M=cfg.M)
    diag = partition_diagnostics(window, params, metric, cfg.samples, cfg.seed)
    vol = volume_estimates(window, params, metric, cfg.delta, cfg.volume_samples, cfg.seed, split=True)
    print(json.dumps({"partition": diag.to_dict(), "volume": vol.to_dict()}, indent=2, sort_keys=True, default=str))


if __name__ == "__main__":
    main(parse_config(RegionConfig, __doc__))
