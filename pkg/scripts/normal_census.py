"""Verdict counts of the normal-map decision on structured and generic subspaces."""
from collections import Counter
from dataclasses import dataclass

import numpy as np

from _config import dump, parse
from cstar.errors import NonMinimal
from cstar.extremity import cstar_extreme_normal
from cstar.instances import (generic_normal_subspace, normal_pattern_nested_g,
                             normal_pattern_orthogonal_g)

FAMILIES = {
    "orthogonal_g": normal_pattern_orthogonal_g,
    "nested_g": normal_pattern_nested_g,
    "generic": generic_normal_subspace,
}


@dataclass
class Config:
    max_dim: int = 4
    trials: int = 25
    seed: int = 0
    out: str = ""


def run(cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for name, make in FAMILIES.items():
        for g in range(2, cfg.max_dim + 1):
            for k in range(2, cfg.max_dim + 1):
                tally = Counter()
                for _ in range(cfg.trials):
                    try:
                        rep = cstar_extreme_normal(make(rng, g, k), g, k)
                    except NonMinimal:
                        tally["non_minimal"] += 1
                        continue
                    tally[rep.verdict.value] += 1
                    tally["reflexive_M"] += rep.data["m_reflexive"].value == "true"
                rows.append({"family": name, "g": g, "k": k, **tally})
    return rows


if __name__ == "__main__":
    cfg = parse(Config, __doc__)
    rows = run(cfg)
    print(f"{'family':>13} {'g':>2} {'k':>2} {'true':>5} {'false':>5} {'M refl':>6} {'nonmin':>6}")
    for r in rows:
        print(f"{r['family']:>13} {r['g']:>2} {r['k']:>2} {r.get('true', 0):>5} {r.get('false', 0):>5} "
              f"{r.get('reflexive_M', 0):>6} {r.get('non_minimal', 0):>6}")
    dump(cfg, rows, cfg.out)
