"""Nest Cholesky residuals and membership over dimension and condition number."""
from dataclasses import dataclass

import numpy as np

from _config import dump, parse
from cstar.algebras import nest_cholesky_factor
from cstar.instances import random_nest, random_pd
from cstar.numerics import fro


@dataclass
class Config:
    dims: str = "4,8,16,32"
    log_conds: str = "0,2,4,6"
    trials: int = 20
    seed: int = 0
    out: str = ""


def run(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for n in map(int, cfg.dims.split(",")):
        for lc in map(float, cfg.log_conds.split(",")):
            res, mem, inv = [], [], []
            for _ in range(cfg.trials):
                d = random_pd(rng, n, cond=10 ** lc)
                fac = nest_cholesky_factor(d, random_nest(rng, n))
                res.append(fac.residual)
                mem.append(fac.membership)
                inv.append(fac.inverse_membership / max(np.linalg.norm(fac.S_inv, 2), 1e-300))
                assert fro(fac.S @ fac.S_inv - np.eye(n)) <= 1e-6 * 10 ** lc
            rows.append({"n": n, "log10_cond": lc, "max_residual": max(res),
                         "max_membership": max(mem), "max_rel_inverse_membership": max(inv)})
    return rows


if __name__ == "__main__":
    cfg = parse(Config, __doc__)
    rows = run(cfg)
    print(f"{'n':>4} {'log10 cond':>10} {'residual':>10} {'S memb':>10} {'S^-1 memb':>10}")
    for r in rows:
        print(f"{r['n']:>4} {r['log10_cond']:>10.1f} {r['max_residual']:>10.2e} "
              f"{r['max_membership']:>10.2e} {r['max_rel_inverse_membership']:>10.2e}")
    dump(cfg, rows, cfg.out)
