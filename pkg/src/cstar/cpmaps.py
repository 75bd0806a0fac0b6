"""UCP maps in Kraus form, minimal Stinespring dilations and Radon-Nikodym derivatives."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebras import FiniteCStarAlgebra, Representation, rep_build
from .errors import (AlgebraMismatch, InputError, NotDominated, NotIsometry,
                     NotUnital, NumericalFailure, ShapeMismatch, StructureMismatch)
from .numerics import (DEFAULT_CONTEXT, as_cmatrix, dag, fro, hermitian_part,
                       is_invertible, opnorm, polar_decompose,
                       solve_linear_subspace, vec)


@dataclass(eq=False)
class UcpMap:
    """phi(a) = sum over blocks alpha and Kraus operators V of V* a_alpha V.

    ``kraus[alpha]`` lists n_alpha x out_dim matrices.  ``cp_only`` marks a
    completely positive map for which unitality is not enforced.
    """
    algebra: FiniteCStarAlgebra
    out_dim: int
    kraus: list
    cp_only: bool = False
    unital_residual: float = 0.0

    def items(self):
        for alpha, ops in enumerate(self.kraus):
            for v in ops:
                yield alpha, v

    @property
    def num_kraus(self):
        return sum(len(ops) for ops in self.kraus)

    def apply(self, a):
        if a.algebra != self.algebra:
            raise AlgebraMismatch("element of a different algebra")
        out = np.zeros((self.out_dim, self.out_dim), dtype=complex)
        for alpha, v in self.items():
            out += dag(v) @ a.blocks[alpha] @ v
        return out

    __call__ = apply

    def image_of_unit(self):
        return self.apply(self.algebra.unit())


def ucp_from_kraus(algebra, out_dim, kraus, ctx=DEFAULT_CONTEXT, cp=False):
    if not isinstance(algebra, FiniteCStarAlgebra):
        algebra = FiniteCStarAlgebra(tuple(algebra))
    if len(kraus) != algebra.num_blocks:
        raise ShapeMismatch(f"expected {algebra.num_blocks} Kraus lists, got {len(kraus)}")
    ops = []
    for n, family in zip(algebra.block_dims, kraus):
        fam = []
        for v in family:
            v = as_cmatrix(v, "Kraus operator")
            if v.shape != (n, out_dim):
                raise ShapeMismatch(f"Kraus operator shape {v.shape} != ({n}, {out_dim})")
            fam.append(v)
        ops.append(fam)
    phi = UcpMap(algebra, int(out_dim), ops, cp_only=cp)
    phi.unital_residual = fro(phi.image_of_unit() - np.eye(out_dim))
    if not cp and phi.unital_residual > ctx.eps_eq * max(1.0, out_dim ** 0.5):
        raise NotUnital(f"unitality residual {phi.unital_residual:.3e}")
    return phi


def apply(phi, a):
    return phi.apply(a)


def choi_blocks(phi):
    """Per block the PSD matrix sum_i vec(V_i) vec(V_i)*."""
    out = []
    for alpha, n in enumerate(phi.algebra.block_dims):
        c = np.zeros((n * phi.out_dim,) * 2, dtype=complex)
        for v in phi.kraus[alpha]:
            x = vec(v)
            c += np.outer(x, x.conj())
        out.append(c)
    return out


@dataclass(eq=False)
class StinespringTriple:
    map: UcpMap
    rep: Representation
    V: np.ndarray
    minimal: bool
    reduced: list = field(default_factory=list)

    @property
    def multiplicities(self):
        return self.rep.multiplicities

    def compress(self, t):
        """V* T V for an operator T on H_pi."""
        return dag(self.V) @ t @ self.V

    def range_projector(self):
        return self.V @ dag(self.V)


def _reduce_family(ops, ctx):
    """HS-orthogonal family with the same map and linearly independent members.

    Equivalent to diagonalizing the HS Gram matrix of the family; the SVD of
    the stacked vectorizations gives the same basis with better accuracy.
    Order: descending weight, ties in LAPACK order.
    """
    if not ops:
        return []
    shape = ops[0].shape
    k = np.stack([vec(v) for v in ops], axis=0)
    _, s, vh = np.linalg.svd(k, full_matrices=False)
    if s[0] == 0.0:
        return []
    r = int(np.sum(s > ctx.eps_rank * s[0]))
    return [(s[j] * vh[j]).reshape(shape) for j in range(r)]


def minimal_stinespring(phi, ctx=DEFAULT_CONTEXT):
    reduced = [_reduce_family(ops, ctx) for ops in phi.kraus]
    mults = [len(w) for w in reduced]
    rep = rep_build(phi.algebra, mults, ctx)
    v = np.zeros((rep.total_dim, phi.out_dim), dtype=complex)
    for alpha, ws in enumerate(reduced):
        for j, w in enumerate(ws):
            f = np.zeros((len(ws), 1))
            f[j] = 1.0
            v[rep.block_slice(alpha)] += np.kron(w, f)
    triple = StinespringTriple(phi, rep, v, minimal=True, reduced=reduced)
    _verify_triple(triple, ctx)
    return triple


def _verify_triple(triple, ctx):
    phi, v = triple.map, triple.V
    if not phi.cp_only and fro(dag(v) @ v - np.eye(phi.out_dim)) > ctx.eps_eq * max(1.0, phi.out_dim ** 0.5):
        raise NumericalFailure("dilation is not an isometry")
    for g in phi.algebra.matrix_units():
        if fro(triple.compress(triple.rep(g)) - phi.apply(g)) > ctx.eps_eq * max(1.0, fro(phi.apply(g))):
            raise NumericalFailure("dilation does not reproduce the map")
    for ws in triple.reduced:
        if ws:
            gram = np.array([[np.vdot(a, b) for b in ws] for a in ws])
            if np.linalg.matrix_rank(gram, tol=ctx.eps_rank * opnorm(gram)) != len(ws):
                raise NumericalFailure("reduced Kraus family is linearly dependent")


def map_from_dilation(algebra, rep, x, cp=True, ctx=DEFAULT_CONTEXT):
    """Kraus form of a -> X* pi(a) X for an arbitrary X : H -> H_pi."""
    x = as_cmatrix(x)
    d = x.shape[1]
    kraus = []
    for alpha, (n, m) in enumerate(zip(algebra.block_dims, rep.multiplicities)):
        blk = x[rep.block_slice(alpha)].reshape(n, m, d)
        kraus.append([blk[:, j, :] for j in range(m)])
    return ucp_from_kraus(algebra, d, kraus, ctx, cp=cp)


def conjugate(phi, t, ctx=DEFAULT_CONTEXT, cp=True):
    """a -> T* phi(a) T, Kraus family {V T}."""
    t = as_cmatrix(t)
    if t.shape[0] != phi.out_dim:
        raise ShapeMismatch("conjugating operator has the wrong number of rows")
    kraus = [[v @ t for v in ops] for ops in phi.kraus]
    return ucp_from_kraus(phi.algebra, t.shape[1], kraus, ctx, cp=cp)


def scale(phi, c):
    """c * phi for c >= 0, as a CP map."""
    r = np.sqrt(c)
    return UcpMap(phi.algebra, phi.out_dim, [[r * v for v in ops] for ops in phi.kraus], cp_only=True)


@dataclass
class RNResult:
    D: np.ndarray              # commutant coordinates
    D_full: np.ndarray         # operator on H_pi
    residual: float
    uniqueness_gap: float
    min_eig: float
    max_eig: float
    hermitian_residual: float


def _rn_solve(triple, psi, gens, basis):
    cols, rhs = [], []
    rep = triple.rep
    emb = [rep.embed(b) for b in basis]
    for g in gens:
        pg = rep(g)
        rhs.append(vec(psi.apply(g)))
        cols.append(np.stack([vec(triple.compress(e @ pg)) for e in emb], axis=1))
    a = np.vstack(cols)
    y = np.concatenate(rhs)
    c, *_ = np.linalg.lstsq(a, y, rcond=None)
    d = sum(ci * b for ci, b in zip(c, basis))
    res = fro(a @ c - y)
    return d, res / fro(y) if fro(y) > 0 else res


def rn_derivative(phi, psi, ctx=DEFAULT_CONTEXT, triple=None):
    """The D in the commutant with psi(a) = V* D pi(a) V.

    Raises NotDominated (carrying the result) unless 0 <= D <= I.
    """
    if psi.algebra != phi.algebra or psi.out_dim != phi.out_dim:
        raise AlgebraMismatch("phi and psi must share algebra and output space")
    if triple is None:
        triple = minimal_stinespring(phi, ctx)
    gens = phi.algebra.matrix_units()
    basis = triple.rep.coordinate_basis()
    d1, res = _rn_solve(triple, psi, gens, basis)
    d2, _ = _rn_solve(triple, psi, gens[::-1], basis[::-1])
    herm = fro(d1 - dag(d1))
    w = np.linalg.eigvalsh(hermitian_part(d1)) if d1.size else np.zeros(1)
    result = RNResult(d1, triple.rep.embed(d1), res, fro(d1 - d2),
                      float(w[0]), float(w[-1]), herm)
    if res > ctx.eps_eq:
        raise NotDominated(f"no commutant solution (residual {res:.3e})", result)
    if herm > ctx.eps_eq * max(1.0, fro(d1)):
        raise NotDominated("derivative is not Hermitian", result)
    if w[0] < -ctx.eps_eq or w[-1] > 1 + ctx.eps_eq:
        raise NotDominated(f"spectrum [{w[0]:.3e}, {w[-1]:.3e}] leaves [0, 1]", result)
    return result


def direct_sum(maps, ctx=DEFAULT_CONTEXT):
    if not maps:
        raise InputError("direct sum of an empty list")
    alg = maps[0].algebra
    if any(m.algebra != alg for m in maps):
        raise AlgebraMismatch("summands live on different algebras")
    total = sum(m.out_dim for m in maps)
    kraus = [[] for _ in alg.block_dims]
    off = 0
    for m in maps:
        for alpha, v in m.items():
            big = np.zeros((v.shape[0], total), dtype=complex)
            big[:, off:off + m.out_dim] = v
            kraus[alpha].append(big)
        off += m.out_dim
    return ucp_from_kraus(alg, total, kraus, ctx, cp=any(m.cp_only for m in maps))


def tensor(phi1, phi2, ctx=DEFAULT_CONTEXT):
    alg = phi1.algebra.tensor(phi2.algebra)
    kraus = []
    for a in range(phi1.algebra.num_blocks):
        for b in range(phi2.algebra.num_blocks):
            kraus.append([np.kron(v, w) for v in phi1.kraus[a] for w in phi2.kraus[b]])
    return ucp_from_kraus(alg, phi1.out_dim * phi2.out_dim, kraus, ctx,
                          cp=phi1.cp_only or phi2.cp_only)


def compress(phi, w, ctx=DEFAULT_CONTEXT):
    w = as_cmatrix(w, "W")
    if w.shape[0] != phi.out_dim or fro(dag(w) @ w - np.eye(w.shape[1])) > ctx.eps_eq:
        raise NotIsometry("W is not an isometry into the output space")
    return conjugate(phi, w, ctx, cp=phi.cp_only)


def is_pure(phi, ctx=DEFAULT_CONTEXT, triple=None):
    triple = triple or minimal_stinespring(phi, ctx)
    return sum(m * m for m in triple.multiplicities) == 1


def intertwiners(rep1, rep2, ctx=DEFAULT_CONTEXT):
    """Basis of {X : H_pi1 -> H_pi2 with pi2(g) X = X pi1(g)}."""
    cons = [(rep2(g), rep1(g)) for g in rep1.algebra.generating_set()]
    return solve_linear_subspace(cons, shape=(rep2.total_dim, rep1.total_dim), ctx=ctx)


def is_disjoint(phi1, phi2, ctx=DEFAULT_CONTEXT):
    if phi1.algebra != phi2.algebra:
        raise AlgebraMismatch("maps on different algebras")
    t1, t2 = minimal_stinespring(phi1, ctx), minimal_stinespring(phi2, ctx)
    structural = not any(a and b for a, b in zip(t1.multiplicities, t2.multiplicities))
    solved = len(intertwiners(t1.rep, t2.rep, ctx)) == 0
    if structural != solved:
        raise StructureMismatch("structural and intertwiner disjointness disagree")
    return structural


@dataclass
class Equivalence:
    kind: str                  # "Yes", "No" or "Inconclusive"
    U: Optional[np.ndarray] = None
    reason: str = ""
    residual: float = float("nan")

    @property
    def yes(self):
        return self.kind == "Yes"


def _spectra_match(c1, c2, ctx):
    for a, b in zip(c1, c2):
        wa, wb = np.linalg.eigvalsh(a), np.linalg.eigvalsh(b)
        if np.max(np.abs(wa - wb), initial=0.0) > ctx.eps_eq * max(1.0, np.max(np.abs(wa), initial=0.0)) * 10:
            return False
    return True


def unitarily_equivalent(phi1, phi2, ctx=DEFAULT_CONTEXT):
    """Look for a unitary U with phi2 = U* phi1(.) U."""
    if phi1.algebra != phi2.algebra or phi1.out_dim != phi2.out_dim:
        raise AlgebraMismatch("maps must share algebra and output space")
    t1, t2 = minimal_stinespring(phi1, ctx), minimal_stinespring(phi2, ctx)
    if t1.multiplicities != t2.multiplicities:
        return Equivalence("No", reason="multiplicity signatures differ")
    if not _spectra_match(choi_blocks(phi1), choi_blocks(phi2), ctx):
        return Equivalence("No", reason="Choi block spectra differ")
    gens = phi1.algebra.matrix_units()
    cons = [(phi1.apply(g), phi2.apply(g)) for g in gens]
    sols = solve_linear_subspace(cons, shape=(phi1.out_dim,) * 2, ctx=ctx)
    if not sols:
        return Equivalence("No", reason="no nonzero intertwiner")
    rng = ctx.rng(17)
    coef = rng.normal(size=len(sols)) + 1j * rng.normal(size=len(sols))
    x = sum(c * s for c, s in zip(coef, sols))
    if not is_invertible(x, ctx):
        return Equivalence("Inconclusive", reason="generic intertwiner is singular")
    u, _ = polar_decompose(x, ctx)
    res = max(fro(phi2.apply(g) - dag(u) @ phi1.apply(g) @ u) for g in gens)
    if res <= ctx.eps_eq * max(1.0, max(fro(phi1.apply(g)) for g in gens)):
        return Equivalence("Yes", U=u, residual=res)
    return Equivalence("Inconclusive", reason="polar part of the intertwiner fails verification",
                       residual=res)
