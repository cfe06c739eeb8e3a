"""Gap between the second-order formula and the fixed-point eigenvalue along a ray."""

import math
from dataclasses import dataclass

from _config import parse_config

from bsgaps.asymptotics import convergence_study
from bsgaps.model import cos_potential, identity_metric


@dataclass
class ConvergenceConfig:
    dim: int = 2
    amplitude: float = 1.0
    angle: float = math.pi / 5
    rho_min: float = 20.0
    doublings: int = 5
    M: int = 3


def main(cfg: ConvergenceConfig):
    direction = [math.cos(cfg.angle), math.sin(cfg.angle)] + [0.0] * (cfg.dim - 2)
    rhos = [cfg.rho_min * 2 ** i for i in range(cfg.doublings)]
    table = convergence_study(direction, rhos, cos_potential(cfg.dim, cfg.amplitude), identity_metric(cfg.dim),
                              cfg.M, compare_double_M=True)
    print("rho,error,g_full,shell_change")
    for row in zip(table.rhos, table.errors, table.g_full, table.shell_changes):
        print(",".join(repr(x) for x in row))
    for rho, why in table.skipped:
        print(f"# skipped rho={rho}: {why}")
    print(f"# log-log slope {table.slope}")


if __name__ == "__main__":
    main(parse_config(ConvergenceConfig, __doc__))
