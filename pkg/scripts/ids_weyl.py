"""Integrated density of states against the free count and the cluster scaling."""

import math
from dataclasses import dataclass

from _config import parse_config

from bsgaps.bloch import ShellMargin
from bsgaps.model import cos_potential, identity_metric, zero_potential
from bsgaps.spectral import cluster_check, ids_curve


@dataclass
class IDSConfig:
    amplitude: float = 0.0
    kgrid: int = 64
    margin: float = 6.0
    cluster_power: int = 1


def main(cfg: IDSConfig):
    pot = cos_potential(2, cfg.amplitude) if cfg.amplitude else zero_potential(2)
    metric = identity_metric(2)
    lams = [10, 25, 50, 100]
    res = ids_curve(pot, metric, lams, cfg.kgrid, ShellMargin(cfg.margin))
    print("lambda,N,error,free_count")
    for lam, n, err in zip(lams, res.values, res.errors):
        print(f"{lam},{n!r},{err!r},{math.pi * lam!r}")
    table = cluster_check(pot, metric, [50, 100, 200], cfg.cluster_power, cfg.kgrid, ShellMargin(cfg.margin))
    print(f"# cluster counts {table.counts}, slope {table.slope} (predicted {table.predicted_slope})")


if __name__ == "__main__":
    main(parse_config(IDSConfig, __doc__))
