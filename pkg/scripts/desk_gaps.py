"""Band intervals, gaps and overlap samples for the two-dimensional cos potential."""

import json
import time
from dataclasses import asdict, dataclass

from _config import parse_config

from bsgaps.bloch import ShellMargin
from bsgaps.model import cos_potential, identity_metric
from bsgaps.spectral import spectral_report


@dataclass
class DeskConfig:
    amplitude: float = 1.0
    window_lo: float = 0.0
    window_hi: float = 120.0
    margin: float = 6.0
    kgrid: int = 48
    threads: int = 1
    out: str = "desk_gaps.json"


def main(cfg: DeskConfig):
    start = time.perf_counter()
    rep = spectral_report(cos_potential(2, cfg.amplitude), identity_metric(2), (cfg.window_lo, cfg.window_hi),
                          ShellMargin(cfg.margin), cfg.kgrid, sample_lambdas=[20, 50, 100], threads=cfg.threads)
    for g in rep.gaps:
        print(f"gap ({g.lo:.4f}, {g.hi:.4f}) {'resolved' if g.resolved else 'unresolved'}")
    for lam, z in rep.zeta_samples:
        print(f"zeta({lam:g}) = {z:.4f}")
    print(f"{time.perf_counter() - start:.1f} s")
    with open(cfg.out, "w") as fh:
        json.dump({"config": asdict(cfg), "report": rep.to_dict()}, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main(parse_config(DeskConfig, __doc__))
