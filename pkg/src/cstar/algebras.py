"""Finite-dimensional C*-algebras, representations, nests and nest algebras."""
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyRepresentation, InputError, NestMismatch, NotPD,
                     ShapeMismatch, StructureMismatch)
from .numerics import (DEFAULT_CONTEXT, Relation, Subspace, as_cmatrix, dag,
                       fro, hermitian_part, hs_orthonormalize, opnorm,
                       psd_sqrt, range_basis, solve_linear_subspace,
                       span_coordinates, subspace_compare)
from .reports import DecisionReport, Verdict


@dataclass(frozen=True)
class FiniteCStarAlgebra:
    """A = direct sum of full matrix blocks M_{n_1} + ... + M_{n_m}."""
    block_dims: tuple

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if len(dims) == 0 or any(n < 1 for n in dims):
            raise InputError(f"invalid block dims {self.block_dims}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def num_blocks(self):
        return len(self.block_dims)

    @property
    def dim(self):
        return sum(n * n for n in self.block_dims)

    def element(self, blocks):
        return AlgebraElement(self, [as_cmatrix(b) for b in blocks])

    def zero(self):
        return AlgebraElement(self, [np.zeros((n, n), dtype=complex) for n in self.block_dims])

    def unit(self):
        return AlgebraElement(self, [np.eye(n, dtype=complex) for n in self.block_dims])

    def block_unit(self, alpha):
        blocks = [np.zeros((n, n), dtype=complex) for n in self.block_dims]
        blocks[alpha] = np.eye(self.block_dims[alpha], dtype=complex)
        return AlgebraElement(self, blocks)

    def embed(self, alpha, x):
        blocks = [np.zeros((n, n), dtype=complex) for n in self.block_dims]
        blocks[alpha] = as_cmatrix(x)
        return AlgebraElement(self, blocks)

    def matrix_unit(self, alpha, i, j):
        x = np.zeros((self.block_dims[alpha],) * 2, dtype=complex)
        x[i, j] = 1.0
        return self.embed(alpha, x)

    def matrix_units(self):
        return [self.matrix_unit(a, i, j)
                for a, n in enumerate(self.block_dims)
                for i in range(n) for j in range(n)]

    def generating_set(self):
        """A small set generating A as a *-algebra: E_11, the shift and its adjoint per block."""
        gens = []
        for a, n in enumerate(self.block_dims):
            gens.append(self.matrix_unit(a, 0, 0))
            if n > 1:
                shift = np.eye(n, k=1, dtype=complex)
                gens.append(self.embed(a, shift))
                gens.append(self.embed(a, shift.T))
        return gens

    def tensor(self, other):
        return FiniteCStarAlgebra(tuple(n * m for n in self.block_dims for m in other.block_dims))


@dataclass(eq=False)
class AlgebraElement:
    algebra: FiniteCStarAlgebra
    blocks: list

    def __post_init__(self):
        if len(self.blocks) != self.algebra.num_blocks:
            raise ShapeMismatch("wrong number of blocks")
        for b, n in zip(self.blocks, self.algebra.block_dims):
            if np.shape(b) != (n, n):
                raise ShapeMismatch(f"block shape {np.shape(b)} != ({n}, {n})")

    def norm(self):
        return max(opnorm(b) for b in self.blocks)

    def __mul__(self, other):
        return AlgebraElement(self.algebra, [x @ y for x, y in zip(self.blocks, other.blocks)])

    def adjoint(self):
        return AlgebraElement(self.algebra, [dag(b) for b in self.blocks])


@dataclass(eq=False)
class Representation:
    """pi(a) = sum over blocks of a_alpha (x) I_{m_alpha} on the fixed layout."""
    algebra: FiniteCStarAlgebra
    multiplicities: tuple

    def __post_init__(self):
        self.multiplicities = tuple(int(m) for m in self.multiplicities)
        if len(self.multiplicities) != self.algebra.num_blocks:
            raise ShapeMismatch("one multiplicity per block is required")
        if any(m < 0 for m in self.multiplicities):
            raise InputError("multiplicities must be non-negative")
        if sum(self.multiplicities) == 0:
            raise EmptyRepresentation("all multiplicities are zero")
        offs, coff = [0], [0]
        for n, m in zip(self.algebra.block_dims, self.multiplicities):
            offs.append(offs[-1] + n * m)
            coff.append(coff[-1] + m)
        self.offsets = tuple(offs)
        self.coord_offsets = tuple(coff)

    @property
    def total_dim(self):
        return self.offsets[-1]

    @property
    def coord_dim(self):
        return self.coord_offsets[-1]

    def block_slice(self, alpha):
        return slice(self.offsets[alpha], self.offsets[alpha + 1])

    def coord_slice(self, alpha):
        return slice(self.coord_offsets[alpha], self.coord_offsets[alpha + 1])

    def __call__(self, a):
        if a.algebra != self.algebra:
            raise ShapeMismatch("element of a different algebra")
        out = np.zeros((self.total_dim,) * 2, dtype=complex)
        for alpha, (x, m) in enumerate(zip(a.blocks, self.multiplicities)):
            if m:
                s = self.block_slice(alpha)
                out[s, s] = np.kron(x, np.eye(m))
        return out

    # Commutant coordinates: a block-diagonal matrix D on C^{sum m_alpha},
    # standing for the operator sum of I_{n_alpha} (x) D_alpha.
    def embed(self, coords):
        coords = np.asarray(coords, dtype=complex)
        if coords.shape != (self.coord_dim,) * 2:
            raise ShapeMismatch(f"commutant coordinates must be {self.coord_dim}-square")
        out = np.zeros((self.total_dim,) * 2, dtype=complex)
        for alpha, n in enumerate(self.algebra.block_dims):
            if self.multiplicities[alpha]:
                s, c = self.block_slice(alpha), self.coord_slice(alpha)
                out[s, s] = np.kron(np.eye(n), coords[c, c])
        return out

    def coords_offdiag_mass(self, coords):
        """Frobenius mass of coordinates outside the allowed diagonal blocks."""
        mask = np.zeros((self.coord_dim,) * 2, dtype=bool)
        for alpha in range(self.algebra.num_blocks):
            c = self.coord_slice(alpha)
            mask[c, c] = True
        return fro(np.where(mask, 0, coords))

    def coordinate_basis(self):
        """Matrix units of the coordinate algebra (sum of M_{m_alpha})."""
        basis = []
        for alpha, m in enumerate(self.multiplicities):
            o = self.coord_offsets[alpha]
            for i in range(m):
                for j in range(m):
                    e = np.zeros((self.coord_dim,) * 2, dtype=complex)
                    e[o + i, o + j] = 1.0
                    basis.append(e)
        return basis

    def extract_coords(self, x, ctx=DEFAULT_CONTEXT):
        """Invert ``embed`` for an operator in the commutant; returns (coords, residual)."""
        coords = np.zeros((self.coord_dim,) * 2, dtype=complex)
        for alpha, n in enumerate(self.algebra.block_dims):
            m = self.multiplicities[alpha]
            if m:
                s, c = self.block_slice(alpha), self.coord_slice(alpha)
                blk = x[s, s].reshape(n, m, n, m)
                coords[c, c] = np.einsum("imin->mn", blk) / n
        return coords, fro(self.embed(coords) - x)


def rep_build(algebra, multiplicities, ctx=DEFAULT_CONTEXT):
    rep = Representation(algebra, tuple(multiplicities))
    gens = algebra.generating_set() + [algebra.unit()]
    images = [rep(g) for g in gens]
    if fro(rep(algebra.unit()) - np.eye(rep.total_dim)) > ctx.eps_eq:
        raise StructureMismatch("pi(1) is not the identity")
    for g, pg in zip(gens, images):
        if fro(rep(g.adjoint()) - dag(pg)) > ctx.eps_eq:
            raise StructureMismatch("pi is not *-preserving")
        for h, ph in zip(gens, images):
            if fro(rep(g * h) - pg @ ph) > ctx.eps_eq:
                raise StructureMismatch("pi is not multiplicative")
    return rep


@dataclass(eq=False)
class OperatorAlgebraSpan:
    ambient_dim: int
    basis: list
    unital: bool = False

    @property
    def dim(self):
        return len(self.basis)

    @classmethod
    def from_span(cls, mats, ambient_dim, ctx=DEFAULT_CONTEXT):
        basis = hs_orthonormalize([as_cmatrix(m) for m in mats], ctx)
        span = cls(ambient_dim, basis)
        span.unital = span.contains(np.eye(ambient_dim), ctx)
        return span

    def contains(self, x, ctx=DEFAULT_CONTEXT):
        _, r = span_coordinates(self.basis, x)
        return r <= ctx.eps_eq * max(1.0, fro(x))

    def contains_span(self, other, ctx=DEFAULT_CONTEXT):
        return all(self.contains(b, ctx) for b in other.basis)

    def product_residual(self):
        """Largest distance of a product b_i b_j from the span."""
        worst = 0.0
        for x in self.basis:
            for y in self.basis:
                worst = max(worst, span_coordinates(self.basis, x @ y)[1])
        return worst

    def is_closed_under_products(self, ctx=DEFAULT_CONTEXT):
        return self.product_residual() <= ctx.eps_eq


def commutant_basis(rep, ctx=DEFAULT_CONTEXT):
    """HS-orthonormal basis of pi(A)' computed by a linear solve.

    Each block unit is a generator, so every commuting operator is block
    diagonal over the blocks of H_pi and the solve runs block by block.
    """
    alg = rep.algebra
    n_total = rep.total_dim
    basis = []
    for alpha, (n, m) in enumerate(zip(alg.block_dims, rep.multiplicities)):
        if m == 0:
            continue
        local = []
        for g in alg.generating_set():
            if g.blocks[alpha].any():
                pg = np.kron(g.blocks[alpha], np.eye(m))
                local.append((pg, pg))
        sols = solve_linear_subspace(local, shape=(n * m, n * m), ctx=ctx)
        s = rep.block_slice(alpha)
        for x in sols:
            full = np.zeros((n_total, n_total), dtype=complex)
            full[s, s] = x
            basis.append(full)
    expected = sum(m * m for m in rep.multiplicities)
    if len(basis) != expected:
        raise StructureMismatch(f"commutant dimension {len(basis)} != {expected}")
    return OperatorAlgebraSpan(n_total, basis, unital=True)


@dataclass(eq=False)
class Nest:
    """A chain {0} = E_0 < E_1 < ... < E_k = C^n, endpoints included."""
    ambient_dim: int
    chain: list
    # adapted basis known in closed form (coordinate nests)
    _adapted: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._adapted is not None:
            return
        n = self.ambient_dim
        for e in self.chain:
            if e.ambient_dim != n:
                raise NestMismatch("subspace of a different ambient dimension")
        if not self.chain or self.chain[0].dim != 0 or self.chain[-1].dim != n:
            raise InputError("a nest must start at {0} and end at the full space")
        for e, f in zip(self.chain, self.chain[1:]):
            if subspace_compare(e, f) is not Relation.PROPER_SUB:
                raise InputError("nest members must be strictly increasing")

    @classmethod
    def from_subspaces(cls, n, subspaces, ctx=DEFAULT_CONTEXT):
        """Sort by dimension, drop repetitions and adjoin the endpoints."""
        members = sorted(subspaces, key=lambda e: e.dim)
        chain = [Subspace.zero(n)]
        for e in members + [Subspace.full(n)]:
            if subspace_compare(chain[-1], e, ctx) is Relation.EQUAL:
                continue
            chain.append(e)
        return cls(n, chain)

    @classmethod
    def coordinate(cls, gaps):
        """Coordinate nest whose atoms are consecutive index runs of the given sizes."""
        return cls._from_adapted(np.eye(int(sum(gaps)), dtype=complex), gaps)

    @classmethod
    def reversed_coordinate(cls, gaps):
        """Same atoms as ``coordinate`` but accumulated from the last index down."""
        n = int(sum(gaps))
        order, k = [], n
        for d in gaps:
            order.extend(range(k - int(d), k))
            k -= int(d)
        return cls._from_adapted(np.eye(n, dtype=complex)[:, order], gaps)

    @classmethod
    def _from_adapted(cls, q, gaps):
        # members are column views of q, so long chains cost no copies
        _check_gaps(gaps)
        n = q.shape[0]
        chain = [Subspace.zero(n)] + [Subspace(n, q[:, :k]) for k in np.cumsum(gaps)]
        return cls(n, chain, q)

    @property
    def gap_dims(self):
        return [f.dim - e.dim for e, f in zip(self.chain, self.chain[1:])]

    def adapted_basis(self):
        """Unitary whose consecutive column groups span the atoms E_i - E_{i-1}.

        Columns come from pivoted Gram-Schmidt on the columns of each gap
        projector; the pivot is the largest residual, first index on ties.
        For coordinate nests this reproduces the identity.
        """
        if self._adapted is not None:
            return self._adapted
        cols = []
        for e, f in zip(self.chain, self.chain[1:]):
            gap = f.projector() - e.projector()
            chosen = []
            for _ in range(f.dim - e.dim):
                r = gap.copy()
                if chosen:
                    q = np.stack(chosen, axis=1)
                    r = r - q @ (dag(q) @ r)
                norms = np.linalg.norm(r, axis=0)
                k = int(np.argmax(norms > norms.max() * (1 - 1e-12)))
                chosen.append(r[:, k] / norms[k])
            cols.extend(chosen)
        self._adapted = np.stack(cols, axis=1)
        return self._adapted

    def gap_index(self):
        """For each adapted coordinate, the index of its atom."""
        return np.repeat(np.arange(len(self.gap_dims)), self.gap_dims)

    def membership_residual(self, t):
        """Largest entry of T below the block diagonal in adapted coordinates.

        T leaves every member invariant exactly when these entries vanish.
        """
        q = self.adapted_basis()
        g = self.gap_index()
        below = g[:, None] > g[None, :]
        if not below.any():
            return 0.0
        return float(np.max(np.abs((dag(q) @ t @ q)[below])))

    def reversed(self, ctx=DEFAULT_CONTEXT):
        """The nest of orthocomplements."""
        return Nest.from_subspaces(self.ambient_dim,
                                   [e.orthocomplement(ctx) for e in self.chain[1:-1]], ctx)


def _check_gaps(gaps):
    if not len(gaps) or any(int(d) < 1 for d in gaps):
        raise InputError("gap dimensions must be positive integers")


def alg_of_nest(nest):
    q = nest.adapted_basis()
    g = nest.gap_index()
    n = nest.ambient_dim
    basis = []
    for a in range(n):
        for b in range(n):
            if g[a] <= g[b]:
                basis.append(np.outer(q[:, a], q[:, b].conj()))
    return OperatorAlgebraSpan(n, basis, unital=True)


def nest_algebra_dim(gaps):
    return sum(sum(gaps[:i + 1]) * d for i, d in enumerate(gaps))


@dataclass
class NestFactor:
    S: np.ndarray
    S_inv: np.ndarray
    residual: float
    membership: float
    inverse_membership: float


def _block_upper_cholesky(d, gaps, ctx, scale=None):
    """Upper block Cholesky D = S* S with positive diagonal blocks, and S^{-1}."""
    scale = opnorm(d) if scale is None else scale
    edges = np.concatenate([[0], np.cumsum(gaps)]).astype(int)
    k = len(gaps)
    s = np.zeros_like(d)
    inv_diag = []
    for i in range(k):
        a, b = edges[i], edges[i + 1]
        top = s[:a, a:b]
        piv = hermitian_part(d[a:b, a:b] - dag(top) @ top)
        lo = float(np.linalg.eigvalsh(piv)[0])
        if lo <= ctx.eps_eq * scale:
            raise NotPD(f"pivot block {i} has eigenvalue {lo:.3e}")
        s[a:b, a:b] = psd_sqrt(piv, ctx)
        inv_diag.append(psd_sqrt(piv, ctx, inverse=True))
        s[a:b, b:] = inv_diag[i] @ (d[a:b, b:] - dag(top) @ s[:a, b:])
    # block back substitution; the inverse is block upper triangular as well
    x = np.zeros_like(d)
    for i in reversed(range(k)):
        a, b = edges[i], edges[i + 1]
        x[a:b, a:b] = inv_diag[i]
        x[a:b, b:] = -inv_diag[i] @ (s[a:b, b:] @ x[b:, b:])
    return s, x


def nest_cholesky_factor(d, nest, ctx=DEFAULT_CONTEXT):
    d = as_cmatrix(d, "D")
    if d.shape != (nest.ambient_dim,) * 2:
        raise NestMismatch(f"D has shape {d.shape}, nest ambient dim {nest.ambient_dim}")
    if fro(d - dag(d)) > ctx.eps_eq * max(fro(d), 1e-300):
        raise NotPD("D is not Hermitian")
    w = np.linalg.eigvalsh(hermitian_part(d))
    if d.size and w[0] <= ctx.eps_eq * max(abs(w[-1]), 1e-300):
        raise NotPD(f"D is not positive definite (min eigenvalue {w[0]:.3e})")
    q = nest.adapted_basis()
    sp, xp = _block_upper_cholesky(dag(q) @ hermitian_part(d) @ q, nest.gap_dims, ctx,
                                   scale=float(w[-1]) if d.size else 0.0)
    s = q @ sp @ dag(q)
    s_inv = q @ xp @ dag(q)
    return NestFactor(s, s_inv, fro(dag(s) @ s - d) / fro(d),
                      nest.membership_residual(s), nest.membership_residual(s_inv))


def nest_cholesky(d, nest, ctx=DEFAULT_CONTEXT):
    """S in Alg(nest) with S^{-1} in Alg(nest) and D = S* S."""
    return nest_cholesky_factor(d, nest, ctx).S


def invariant_closure(m, v, ctx=DEFAULT_CONTEXT):
    v = np.asarray(v, dtype=complex).reshape(-1, 1)
    sub = range_basis(v, ctx)
    while True:
        imgs = [sub.basis] + [b @ sub.basis for b in m.basis]
        nxt = range_basis(np.hstack(imgs), ctx)
        if nxt.dim == sub.dim:
            return nxt
        sub = nxt


@dataclass
class NotANest:
    witness: tuple
    notes: str = ""


def lat_nest_extract(m, ctx=DEFAULT_CONTEXT):
    """Chain of invariant subspaces sampled from e_i and e_i + e_j, or NotANest.

    If every sampled closure is comparable with every other, the sample is
    already a chain and closing it under join and meet adds nothing.
    """
    n = m.ambient_dim
    eye = np.eye(n)
    samples = [eye[:, i] for i in range(n)]
    samples += [eye[:, i] + eye[:, j] for i in range(n) for j in range(i + 1, n)]
    found = []
    for v in samples:
        e = invariant_closure(m, v, ctx)
        if any(subspace_compare(e, f, ctx) is Relation.EQUAL for f in found):
            continue
        for f in found:
            if subspace_compare(e, f, ctx) is Relation.INCOMPARABLE:
                return NotANest((f, e), "incomparable invariant subspaces")
        found.append(e)
    return Nest.from_subspaces(n, found, ctx)


def is_reflexive_nest_algebra(m, ctx=DEFAULT_CONTEXT):
    lat = lat_nest_extract(m, ctx)
    if isinstance(lat, NotANest):
        return DecisionReport(Verdict.FALSE, witness={"incomparable": lat.witness},
                              notes="invariant subspaces do not form a chain")
    alg = alg_of_nest(lat)
    same = (alg.dim == m.dim and alg.contains_span(m, ctx) and m.contains_span(alg, ctx))
    if same:
        return DecisionReport(Verdict.TRUE, data={"nest": lat})
    return DecisionReport(Verdict.FALSE,
                          witness={"nest": lat, "alg_dim": alg.dim, "dim": m.dim},
                          notes="algebra of the invariant chain is larger")
