"""Column drift of the truncated Toeplitz factor as the truncation order grows.

The drift should decay roughly like r^(-2N) for the smallest root modulus r
of the outer polynomial.
"""
from dataclasses import dataclass

import numpy as np

from _config import dump, parse
from cstar.errors import NotConverged
from cstar.hardy import TrigSymbol, autocorrelation, szego_factor


@dataclass
class Config:
    moduli: str = "1.05,1.2,1.5,2.0"
    orders: str = "8,16,32,64,128,256"
    degree: int = 3
    seed: int = 0
    out: str = ""


def symbol_with_min_root(rng, r, degree):
    roots = np.concatenate([[r], rng.uniform(r, 3.0, size=degree - 1)])
    roots = roots * np.exp(2j * np.pi * rng.random(degree))
    p = np.poly(roots)[::-1]
    return p, TrigSymbol(autocorrelation([np.array([[c]]) for c in p]))


def run(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for r in map(float, cfg.moduli.split(",")):
        p, sym = symbol_with_min_root(rng, r, cfg.degree)
        for n in map(int, cfg.orders.split(",")):
            if n < 2 * cfg.degree + 1:
                continue
            try:
                out = szego_factor(sym, n, tol=np.inf)
                got = np.array([c[0, 0] for c in out.coeffs])
                err = float(np.max(np.abs(got - p * abs(p[0]) / p[0])))
                rows.append({"min_modulus": r, "N": n, "drift": out.drift, "coeff_error": err})
            except NotConverged as exc:
                rows.append({"min_modulus": r, "N": n, "drift": exc.drift, "coeff_error": None})
    return rows


if __name__ == "__main__":
    cfg = parse(Config, __doc__)
    rows = run(cfg)
    print(f"{'r':>6} {'N':>5} {'drift':>10} {'error':>10}")
    for row in rows:
        err = "-" if row["coeff_error"] is None else f"{row['coeff_error']:.2e}"
        print(f"{row['min_modulus']:>6.2f} {row['N']:>5} {row['drift']:>10.2e} {err:>10}")
    dump(cfg, rows, cfg.out)
