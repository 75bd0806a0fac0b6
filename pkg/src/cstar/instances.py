"""Seeded random instances: operators, nests, UCP maps and pure-sum families."""
from dataclasses import dataclass

import numpy as np

from .algebras import FiniteCStarAlgebra, Nest
from .cpmaps import map_from_dilation, minimal_stinespring, ucp_from_kraus
from .extremity import PureSumSpec, Summand
from .numerics import Subspace, dag


def gaussian(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_unitary(rng, n):
    q, r = np.linalg.qr(gaussian(rng, n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(rng, n, h):
    return random_unitary(rng, n)[:, :h]


def random_pd(rng, n, cond=1e3, scale=1.0):
    """Hermitian PD matrix with eigenvalues log-uniform in [scale / cond, scale]."""
    w = scale * np.exp(rng.uniform(-np.log(cond), 0.0, size=n))
    w[0], w[-1] = scale, scale / cond  # pin the condition number
    q = random_unitary(rng, n)
    d = (q * w) @ dag(q)
    return 0.5 * (d + dag(d))


def random_contraction_psd(rng, n):
    """0 <= D <= I with a spread spectrum."""
    q = random_unitary(rng, n)
    d = (q * rng.uniform(0.0, 1.0, size=n)) @ dag(q)
    return 0.5 * (d + dag(d))


def random_gaps(rng, n, parts):
    """Split n into ``parts`` positive integers."""
    cuts = np.sort(rng.choice(np.arange(1, n), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0, *cuts, n]
    return [int(b - a) for a, b in zip(edges, edges[1:])]


def random_nest(rng, n, parts=None):
    """A nest whose members are spans of leading columns of a random unitary."""
    parts = parts or int(rng.integers(1, n + 1))
    gaps = random_gaps(rng, n, parts)
    q = random_unitary(rng, n)
    members, k = [], 0
    for g in gaps[:-1]:
        k += g
        members.append(Subspace(n, q[:, :k]))
    return Nest.from_subspaces(n, members)


def random_ucp(rng, algebra, out_dim, ranks):
    """UCP map whose stacked Kraus operators form a random isometry.

    ``ranks[alpha]`` is the number of Kraus operators on block alpha.
    """
    rows = sum(n * r for n, r in zip(algebra.block_dims, ranks))
    w = random_isometry(rng, rows, out_dim)
    kraus, off = [], 0
    for n, r in zip(algebra.block_dims, ranks):
        kraus.append([w[off + j * n: off + (j + 1) * n] for j in range(r)])
        off += n * r
    return ucp_from_kraus(algebra, out_dim, kraus)


def random_commutant_contraction(rng, rep):
    """Block diagonal 0 <= D0 <= I in commutant coordinates."""
    d = np.zeros((rep.coord_dim,) * 2, dtype=complex)
    for alpha, m in enumerate(rep.multiplicities):
        if m:
            c = rep.coord_slice(alpha)
            d[c, c] = random_contraction_psd(rng, m)
    return d


def random_commutant_pd(rng, rep, cond=1e2):
    d = np.zeros((rep.coord_dim,) * 2, dtype=complex)
    for alpha, m in enumerate(rep.multiplicities):
        if m:
            c = rep.coord_slice(alpha)
            d[c, c] = random_pd(rng, m, cond=cond) if m > 1 else np.array([[rng.uniform(0.5, 2.0)]])
    return d


def dominated_map(phi, d0, triple=None):
    """psi = V* D0 pi(.) V as a CP map, for D0 in commutant coordinates."""
    triple = triple or minimal_stinespring(phi)
    w, q = np.linalg.eigh(0.5 * (d0 + dag(d0)))
    root = (q * np.sqrt(np.clip(w, 0.0, None))) @ dag(q)
    x = triple.rep.embed(root) @ triple.V
    return map_from_dilation(phi.algebra, triple.rep, x, cp=True)


# -------------------------------------------------------- pure-sum families

@dataclass
class PureSumInstance:
    spec: PureSumSpec
    nested: bool           # ground truth for the C*-extremity decision
    label: str = ""

    @property
    def map(self):
        return self.spec.assemble()


def nested_chain_instance(rng, n, length, multiplicities=False):
    """Strictly nested ranges E_1 < ... < E_length in one block of size n."""
    q = random_unitary(rng, n)
    dims = np.sort(rng.choice(np.arange(1, n + 1), size=length, replace=False))
    ks = rng.integers(1, 3, size=length) if multiplicities else np.ones(length, dtype=int)
    order = rng.permutation(length)
    summands = [Summand(0, q[:, :int(dims[i])], int(ks[i])) for i in order]
    return PureSumInstance(PureSumSpec(FiniteCStarAlgebra((n,)), summands), True,
                           f"nested n={n} dims={dims.tolist()}")


def incomparable_instance(rng, n, count, multiplicities=False):
    """Generic proper subspaces; with probability one some pair is incomparable."""
    ks = rng.integers(1, 3, size=count) if multiplicities else np.ones(count, dtype=int)
    summands = []
    for i in range(count):
        h = int(rng.integers(1, n))
        summands.append(Summand(0, random_isometry(rng, n, h), int(ks[i])))
    return PureSumInstance(PureSumSpec(FiniteCStarAlgebra((n,)), summands), False,
                           f"generic n={n} count={count}")


def criterion4_family(seed=4):
    """Nested chains (length 2-4, n <= 6) and incomparable families, with and without multiplicity."""
    rng = np.random.default_rng(seed)
    out = []
    for n in range(2, 7):
        for length in range(2, min(4, n) + 1):
            for mult in (False, True):
                out.append(nested_chain_instance(rng, n, length, mult))
        for count in (2, 3):
            for mult in (False, True):
                out.append(incomparable_instance(rng, n, count, mult))
    return out


def mixed_pure_sum(rng, n, count):
    """Ranges drawn either generically or as coordinate sets of one random frame.

    Disjoint coordinate sets give orthogonal ranges, so both extreme and
    non-extreme instances occur.
    """
    q = random_unitary(rng, n)
    summands = []
    for _ in range(count):
        h = int(rng.integers(1, n + 1))
        if rng.random() < 0.5:
            v = random_isometry(rng, n, h)
        else:
            cols = np.sort(rng.choice(n, size=h, replace=False))
            v = q[:, cols]
        summands.append(Summand(0, v, int(rng.integers(1, 3))))
    return PureSumSpec(FiniteCStarAlgebra((n,)), summands)


def disjoint_blocks_instance(rng, block_dims):
    """One random nested or generic family per block; returns the per-block specs and their sum."""
    alg = FiniteCStarAlgebra(tuple(block_dims))
    parts, truths = [], []
    for alpha, n in enumerate(block_dims):
        length = int(rng.integers(1, min(3, n) + 1))
        if n > 1 and rng.random() < 0.5:
            inst = incomparable_instance(rng, n, 2)
        else:
            inst = nested_chain_instance(rng, n, length)
        summands = [Summand(alpha, s.V, s.k) for s in inst.spec.summands]
        parts.append(PureSumSpec(alg, summands))
        truths.append(inst.nested)
    whole = PureSumSpec(alg, [s for p in parts for s in p.summands])
    return parts, whole, all(truths)


def pure_compression(rng, p, h=None):
    """x -> W* x W on M_p for a random isometry W : C^h -> C^p (a pure map)."""
    h = h or int(rng.integers(1, p + 1))
    w = random_isometry(rng, p, h)
    return ucp_from_kraus(FiniteCStarAlgebra((p,)), h, [[w]])


# ------------------------------------------------------------ normal maps

def _product_basis(gs, ks):
    return np.hstack([np.kron(g, k) for g, k in zip(gs, ks)])


def normal_pattern_orthogonal_g(rng, g, k):
    """G_i mutually orthogonal, K_1 < ... < K_t = C^k a nest."""
    t = int(rng.integers(1, min(g, k) + 1))
    qg, qk = random_unitary(rng, g), random_unitary(rng, k)
    gdims = random_gaps(rng, int(rng.integers(t, g + 1)), t)
    kdims = np.sort(rng.choice(np.arange(1, k), size=t - 1, replace=False)).tolist() + [k]
    gs, off = [], 0
    for d in gdims:
        gs.append(qg[:, off:off + d])
        off += d
    ks = [qk[:, :d] for d in kdims]
    return _product_basis(gs, ks)


def normal_pattern_nested_g(rng, g, k):
    """G_1 < ... < G_t a nest, K_i mutually orthogonal and spanning C^k."""
    t = int(rng.integers(1, min(g, k) + 1))
    qg, qk = random_unitary(rng, g), random_unitary(rng, k)
    gdims = np.sort(rng.choice(np.arange(1, g + 1), size=t, replace=False)).tolist()
    kdims = random_gaps(rng, k, t)
    gs = [qg[:, :d] for d in gdims]
    ks, off = [], 0
    for d in kdims:
        ks.append(qk[:, off:off + d])
        off += d
    return _product_basis(gs, ks)


def generic_normal_subspace(rng, g, k):
    """A random subspace of C^g (x) C^k of dimension between 2 and gk - 2."""
    h = int(rng.integers(2, g * k - 1))
    return random_isometry(rng, g * k, h)


# -------------------------------------------------------------- symbols

def random_outer_poly(rng, degree, min_modulus=1.2):
    """Ascending coefficients of a scalar polynomial with all roots in |z| >= min_modulus."""
    r = rng.uniform(min_modulus, 3.0, size=degree) * np.exp(2j * np.pi * rng.random(degree))
    p = np.poly(r)[::-1] if degree else np.ones(1, dtype=complex)
    return p * rng.uniform(0.5, 2.0) / np.abs(p[0])


def random_block_outer(rng, block, degree, margin=1.2):
    """a_0..a_d with a(z) invertible on |z| <= margin.

    sum_j ||a_j|| margin^j is kept below half the smallest singular value of a_0.
    """
    a0 = random_pd(rng, block, cond=4.0)
    rest = [gaussian(rng, block, block) for _ in range(degree)]
    mass = sum(np.linalg.norm(a, 2) * margin ** (j + 1) for j, a in enumerate(rest))
    if mass:
        c = 0.5 * np.linalg.svd(a0, compute_uv=False)[-1] / mass
        rest = [c * a for a in rest]
    return [a0] + rest
