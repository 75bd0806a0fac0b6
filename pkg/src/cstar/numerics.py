"""Dense complex linear algebra with an explicit tolerance policy.

Ranks are decided by a singular-value cutoff relative to the largest
singular value, and operator equality is a relative Frobenius residual.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, NotPSD, ShapeMismatch


@dataclass(frozen=True)
class NumericContext:
    eps_rank: float = 1e-10
    eps_eq: float = 1e-8
    grid_size: int = 4096
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.eps_rank > 0 and self.eps_eq > 0):
            raise ValueError("tolerances must be strictly positive")
        if self.grid_size < 16:
            raise ValueError("grid_size must be at least 16")

    def rng(self, offset=0):
        return np.random.default_rng(self.rng_seed + offset)


DEFAULT_CONTEXT = NumericContext()


def as_cmatrix(a, name="matrix"):
    """Coerce to a finite 2-D complex array (a fresh copy)."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ShapeMismatch(f"{name} has non-finite entries")
    return m


def dag(a):
    return a.conj().T


def fro(a):
    return float(np.linalg.norm(a))


def opnorm(a):
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def rel_residual(actual, expected):
    """||actual - expected||_F relative to the larger of the two norms."""
    diff = fro(np.asarray(actual) - np.asarray(expected))
    scale = max(fro(actual), fro(expected))
    if scale == 0.0:
        return 0.0
    return diff / scale


def hermitian_part(a):
    return 0.5 * (a + dag(a))


def _rank_from_singular_values(s, eps_rank, scale=0.0):
    """Count singular values above eps_rank times max(s_max, scale).

    ``scale`` is a floor for operators with a known natural size, so that a
    numerically zero operator is not assigned rank from rounding noise.
    """
    top = max(s[0] if s.size else 0.0, scale)
    if top == 0.0:
        return 0
    return int(np.sum(s > eps_rank * top))


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace stored through an orthonormal basis (columns)."""
    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise ShapeMismatch(f"basis shape {b.shape} does not fit ambient {self.ambient_dim}")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self):
        return self.basis.shape[1]

    def projector(self):
        return self.basis @ dag(self.basis)

    def contains(self, v, ctx=DEFAULT_CONTEXT):
        v = np.asarray(v, dtype=complex).reshape(self.ambient_dim, -1)
        r = v - self.basis @ (dag(self.basis) @ v)
        return fro(r) <= ctx.eps_eq * max(1.0, fro(v))

    @classmethod
    def zero(cls, n):
        return cls(n, np.zeros((n, 0), dtype=complex))

    @classmethod
    def full(cls, n):
        return cls(n, np.eye(n, dtype=complex))

    @classmethod
    def span(cls, vectors, ctx=DEFAULT_CONTEXT):
        """Orthonormalize the columns of ``vectors``."""
        return range_basis(as_cmatrix(vectors), ctx)

    @classmethod
    def coordinate(cls, n, indices):
        return cls(n, np.eye(n, dtype=complex)[:, list(indices)])

    def join(self, other, ctx=DEFAULT_CONTEXT):
        _check_same_ambient(self, other)
        return range_basis(np.hstack([self.basis, other.basis]), ctx)

    def meet(self, other, ctx=DEFAULT_CONTEXT):
        _check_same_ambient(self, other)
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim)
        # vectors of other annihilated by the complement projection of self
        comp = other.basis - self.basis @ (dag(self.basis) @ other.basis)
        if fro(comp) <= ctx.eps_eq:
            return other
        u, s, vh = np.linalg.svd(comp)
        keep = s > ctx.eps_eq
        # singular values missing from s (when rows < cols) are zero
        null = dag(vh)[:, int(np.sum(keep)):]
        if null.shape[1] == 0:
            return Subspace.zero(self.ambient_dim)
        return range_basis(other.basis @ null, ctx)

    def orthocomplement(self, ctx=DEFAULT_CONTEXT):
        return null_basis(dag(self.basis), ctx) if self.dim else Subspace.full(self.ambient_dim)


def _check_same_ambient(e, f):
    if e.ambient_dim != f.ambient_dim:
        raise DimensionMismatch(f"ambient dims differ: {e.ambient_dim} vs {f.ambient_dim}")


def range_basis(a, ctx=DEFAULT_CONTEXT, scale=0.0):
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return Subspace.zero(a.shape[0])
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    r = _rank_from_singular_values(s, ctx.eps_rank, scale)
    return Subspace(a.shape[0], u[:, :r])


def null_basis(a, ctx=DEFAULT_CONTEXT, scale=0.0):
    a = np.asarray(a, dtype=complex)
    n = a.shape[1]
    if a.size == 0:
        return Subspace.full(n)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    r = _rank_from_singular_values(s, ctx.eps_rank, scale)
    return Subspace(n, dag(vh[r:]))


def polar_decompose(a, ctx=DEFAULT_CONTEXT):
    """A = U P with P = (A*A)^{1/2} and U a partial isometry.

    The initial space of U is ran(P), with rank decided by eps_rank.
    """
    a = as_cmatrix(a)
    if a.size == 0:
        return np.zeros_like(a), np.zeros((a.shape[1], a.shape[1]), dtype=complex)
    w, s, vh = np.linalg.svd(a, full_matrices=False)
    r = _rank_from_singular_values(s, ctx.eps_rank)
    p = dag(vh) @ np.diag(s) @ vh
    u = w[:, :r] @ vh[:r]
    return u, hermitian_part(p)


def _hermitian_eig(a, ctx, floor=0.0):
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {a.shape}")
    scale = max(opnorm(a), floor)
    if fro(a - dag(a)) > ctx.eps_eq * max(scale, 1e-300) * max(1, a.shape[0]) ** 0.5:
        raise NotPSD("matrix is not Hermitian within tolerance")
    return np.linalg.eigh(hermitian_part(a)), scale


def psd_sqrt(a, ctx=DEFAULT_CONTEXT, inverse=False, floor=0.0):
    """Positive square root; with ``inverse`` the inverse root (PD input).

    ``floor`` bounds the reference norm from below, for inputs that are
    differences of operators of known size and may cancel to rounding noise.
    """
    (w, q), scale = _hermitian_eig(a, ctx, floor)
    if w.size and w[0] < -ctx.eps_eq * scale:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below -eps_eq*||A||")
    w = np.clip(w, 0.0, None)
    if inverse:
        if w.size and w[0] <= ctx.eps_eq * scale:
            raise NotPSD("matrix is singular, no inverse square root")
        w = 1.0 / w
    return hermitian_part((q * np.sqrt(w)) @ dag(q))


def min_eig(a):
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(a))[0])


def is_invertible(a, ctx=DEFAULT_CONTEXT):
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return True
    s = np.linalg.svd(a, compute_uv=False)
    return bool(s[-1] > ctx.eps_eq * s[0])


class Relation(Enum):
    EQUAL = "Equal"
    PROPER_SUB = "ProperSub"
    PROPER_SUP = "ProperSup"
    INCOMPARABLE = "Incomparable"


def _contained(e, f, ctx):
    if e.dim == 0:
        return True
    r = e.basis - f.basis @ (dag(f.basis) @ e.basis)
    return fro(r) <= ctx.eps_eq


def subspace_compare(e, f, ctx=DEFAULT_CONTEXT):
    _check_same_ambient(e, f)
    sub, sup = _contained(e, f, ctx), _contained(f, e, ctx)
    if sub and sup:
        return Relation.EQUAL
    if sub:
        return Relation.PROPER_SUB
    if sup:
        return Relation.PROPER_SUP
    return Relation.INCOMPARABLE


def comparable(e, f, ctx=DEFAULT_CONTEXT):
    return subspace_compare(e, f, ctx) is not Relation.INCOMPARABLE


def vec(x):
    """Row-major vectorization, matching ``kron`` conventions below."""
    return np.asarray(x).reshape(-1)


def hs_orthonormalize(mats, ctx=DEFAULT_CONTEXT):
    """HS-orthonormal basis of the span of a list of equally shaped matrices."""
    if not mats:
        return []
    shape = mats[0].shape
    m = np.stack([vec(x) for x in mats], axis=1)
    sub = range_basis(m, ctx)
    return [sub.basis[:, j].reshape(shape) for j in range(sub.dim)]


def span_coordinates(basis, x):
    """Least-squares coefficients of x in an HS-orthonormal basis and the residual."""
    if not basis:
        return np.zeros(0, dtype=complex), fro(x)
    m = np.stack([vec(b) for b in basis], axis=1)
    c = dag(m) @ vec(x)
    return c, fro(vec(x) - m @ c)


def solve_linear_subspace(constraints, shape=None, ctx=DEFAULT_CONTEXT):
    """HS-orthonormal basis of {X : A_k X = X B_k for all k}.

    ``shape`` gives the shape of X when the constraint list is empty.
    With row-major vec, A X - X B becomes (A (x) I - I (x) B^T) vec(X).
    """
    if constraints:
        p = constraints[0][0].shape[0]
        q = constraints[0][1].shape[0]
        if shape is not None and tuple(shape) != (p, q):
            raise ShapeMismatch(f"shape {shape} disagrees with constraints ({p}, {q})")
    elif shape is None:
        raise ShapeMismatch("shape is required when there are no constraints")
    else:
        p, q = shape
    if not constraints:
        return [e.reshape(p, q).astype(complex) for e in np.eye(p * q)]
    rows, scale = [], 0.0
    ip, iq = np.eye(p), np.eye(q)
    for a, b in constraints:
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        if a.shape != (p, p) or b.shape != (q, q):
            raise ShapeMismatch("constraint matrices must be square of fixed sizes")
        rows.append(np.kron(a, iq) - np.kron(ip, b.T))
        scale = max(scale, opnorm(a) + opnorm(b))
    big = np.vstack(rows)
    null = null_basis(big, ctx, scale)
    return [null.basis[:, j].reshape(p, q) for j in range(null.dim)]
