"""Distance of the Krein-Milman approximants to the target map, step by step."""
from dataclasses import dataclass

import numpy as np

from _config import dump, parse
from cstar.algebras import FiniteCStarAlgebra
from cstar.instances import random_ucp
from cstar.kmapprox import bw_distance_on, error_envelope, km_build, km_step


@dataclass
class Config:
    blocks: str = "3,2"
    ranks: str = "3,2"
    out_dim: int = 3
    maps: int = 5
    seed: int = 0
    out: str = ""


def run(cfg):
    rng = np.random.default_rng(cfg.seed)
    alg = FiniteCStarAlgebra(tuple(map(int, cfg.blocks.split(","))))
    ranks = list(map(int, cfg.ranks.split(",")))
    gens = alg.matrix_units()
    rows = []
    for m in range(cfg.maps):
        phi = random_ucp(rng, alg, cfg.out_dim, ranks)
        approx = km_build(phi)
        for n in range(approx.size + 1):
            psi = km_step(approx, n).map
            rows.append({"map": m, "step": n, "distance": bw_distance_on(phi, psi, gens),
                         "envelope": max(error_envelope(approx, n, g) for g in gens),
                         "B_norm": float(np.linalg.norm(approx.B[n], 2))})
    return rows


if __name__ == "__main__":
    cfg = parse(Config, __doc__)
    rows = run(cfg)
    print(f"{'map':>4} {'step':>5} {'distance':>10} {'envelope':>10} {'||B_N||':>10}")
    for r in rows:
        print(f"{r['map']:>4} {r['step']:>5} {r['distance']:>10.3e} {r['envelope']:>10.3e} {r['B_norm']:>10.3e}")
    dump(cfg, rows, cfg.out)
