"""Toeplitz spectral factorization and the upper-triangular (subdiagonal) demo."""
from dataclasses import dataclass, field

import numpy as np

from .algebras import FiniteCStarAlgebra, Nest, nest_cholesky, nest_cholesky_factor
from .cpmaps import ucp_from_kraus
from .errors import DegreeTooLarge, InputError, NotConverged, SymbolNotPositive
from .numerics import DEFAULT_CONTEXT, as_cmatrix, dag, fro, hermitian_part, rel_residual


@dataclass(eq=False)
class TrigSymbol:
    """f(t) = sum_{|k| <= d} c_k e^{ikt} with c_{-k} = c_k*; ``coeffs`` holds c_0..c_d."""
    coeffs: list

    def __post_init__(self):
        cs = [as_cmatrix(c, "symbol coefficient") for c in self.coeffs]
        if not cs:
            raise InputError("symbol needs at least c_0")
        b = cs[0].shape[0]
        if any(c.shape != (b, b) for c in cs):
            raise InputError("symbol coefficients must be square blocks of one size")
        if fro(cs[0] - dag(cs[0])) > 1e-12 * max(1.0, fro(cs[0])):
            raise InputError("c_0 must be Hermitian")
        self.coeffs = cs

    @property
    def block(self):
        return self.coeffs[0].shape[0]

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def c(self, k):
        if abs(k) > self.degree:
            return np.zeros((self.block,) * 2, dtype=complex)
        return self.coeffs[k] if k >= 0 else dag(self.coeffs[-k])

    def evaluate(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        out = np.zeros((len(thetas), self.block, self.block), dtype=complex)
        for k in range(-self.degree, self.degree + 1):
            out += np.exp(1j * k * thetas)[:, None, None] * self.c(k)
        return out

    def min_eigenvalue(self, grid_size):
        vals = self.evaluate(2 * np.pi * np.arange(grid_size) / grid_size)
        return float(np.linalg.eigvalsh(0.5 * (vals + vals.conj().transpose(0, 2, 1))).min())

    @classmethod
    def scalar(cls, coeffs):
        return cls([np.array([[c]]) for c in coeffs])


def autocorrelation(outer):
    """c_k = sum_j a_j* a_{j+k} for k = 0..d."""
    d = len(outer) - 1
    return [sum(dag(outer[j]) @ outer[j + k] for j in range(d - k + 1)) for k in range(d + 1)]


def toeplitz_truncate(sym, n):
    if n < sym.degree + 1:
        raise DegreeTooLarge(f"order {n} must exceed the degree {sym.degree}")
    b = sym.block
    t = np.zeros((n * b, n * b), dtype=complex)
    for i in range(n):
        for j in range(max(0, i - sym.degree), min(n, i + sym.degree + 1)):
            t[i * b:(i + 1) * b, j * b:(j + 1) * b] = sym.c(i - j)
    return t


@dataclass
class OuterFactor:
    coeffs: list               # a_0..a_d, a_0 positive definite
    drift: float
    residual: float
    roots: np.ndarray = None   # scalar case only

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def min_root_modulus(self):
        if self.roots is None or len(self.roots) == 0:
            return float("inf")
        return float(np.min(np.abs(self.roots)))


def szego_factor(sym, n, tol=1e-8, ctx=DEFAULT_CONTEXT):
    """Outer factor of a strictly positive trigonometric symbol.

    The truncation T_N is factored as S* S with S in the algebra of the
    coordinate nest accumulated from the last block, so S is block lower
    triangular.  Its first block column converges to (a_0, ..., a_d) as N
    grows; the drift compares it with the column d blocks further on.
    """
    lo = sym.min_eigenvalue(ctx.grid_size)
    if lo <= ctx.eps_eq:
        raise SymbolNotPositive(f"symbol minimum eigenvalue {lo:.3e} on the grid")
    d, b = sym.degree, sym.block
    shift = max(d, 1)
    if n < d + shift + 1:
        raise DegreeTooLarge(f"order {n} too small for degree {d}")
    t = toeplitz_truncate(sym, n)
    s = nest_cholesky(t, Nest.reversed_coordinate([b] * n), ctx)
    blk = lambda i, j: s[i * b:(i + 1) * b, j * b:(j + 1) * b]
    coeffs = [hermitian_part(blk(0, 0))] + [blk(j, 0) for j in range(1, d + 1)]
    drift = max(fro(blk(j, 0) - blk(j + shift, shift)) for j in range(d + 1))
    if drift > tol:
        raise NotConverged(f"column drift {drift:.3e} exceeds {tol:.1e}", drift)
    rec = autocorrelation(coeffs)
    residual = max(fro(r - sym.c(k)) for k, r in enumerate(rec)) / fro(sym.c(0))
    if residual > tol:
        raise NotConverged(f"autocorrelation residual {residual:.3e} exceeds {tol:.1e}", residual)
    roots = None
    if b == 1:
        poly = np.array([c[0, 0] for c in coeffs])
        roots = np.roots(poly[::-1]) if d > 0 else np.zeros(0)
    return OuterFactor(coeffs, drift, residual, roots)


@dataclass
class SubdiagonalReport:
    z: np.ndarray
    residuals: dict = field(default_factory=dict)

    def ok(self, tol):
        return all(v <= tol for v in self.residuals.values())


def right_mult(a):
    """R_a : y -> y a on row-major vectorized n x n matrices."""
    return np.kron(np.eye(a.shape[0]), a.T)


def left_mult(a):
    return np.kron(a, np.eye(a.shape[0]))


def upper_triangular_projection(n):
    i, j = np.divmod(np.arange(n * n), n)
    return np.diag((i <= j).astype(float))


def subdiagonal_demo(n, x, ctx=DEFAULT_CONTEXT):
    """Factor x = z z* with z, z^{-1} upper triangular and check the operator identities.

    The Hilbert-Schmidt space of M_n carries tau = tr / n; H^2 is the space of
    upper-triangular matrices and the right multiplications act on it.
    """
    x = as_cmatrix(x, "x")
    if x.shape != (n, n):
        raise InputError(f"x must be {n} x {n}")
    fac = nest_cholesky_factor(x, Nest.reversed_coordinate([1] * n), ctx)
    z, z_inv = dag(fac.S), dag(fac.S_inv)
    p = upper_triangular_projection(n)
    q = np.eye(n * n) - p
    rz, rx = right_mult(z), right_mult(x)
    res = {
        "x=zz*": rel_residual(z @ dag(z), x),
        "z_upper": float(np.max(np.abs(np.tril(z, -1)))) / max(fro(z), 1e-300),
        "z_inv_upper": float(np.max(np.abs(np.tril(z_inv, -1)))) / max(fro(z_inv), 1e-300),
        "R_x=R_z*R_z": rel_residual(right_mult(dag(z)) @ rz, rx),
        "R_z(H2)<=H2": fro(q @ rz @ p) / fro(rz),
        "R_z^-1(H2)<=H2": fro(q @ right_mult(z_inv) @ p) / fro(right_mult(z_inv)),
        "PR_xP=(PR_zP)*(PR_zP)": rel_residual(dag(p @ rz @ p) @ (p @ rz @ p), p @ rx @ p),
    }
    return SubdiagonalReport(z, res)


def subdiagonal_map(n, ctx=DEFAULT_CONTEXT):
    """x -> P_{H^2} L_x restricted to H^2, as a UCP map on M_n."""
    i, j = np.divmod(np.arange(n * n), n)
    v = np.eye(n * n)[:, i <= j]
    blk = v.reshape(n, n, v.shape[1])
    return ucp_from_kraus(FiniteCStarAlgebra((n,)), v.shape[1], [[blk[:, k, :] for k in range(n)]], ctx)


def hardy_compression_map(d, n, grid=None, ctx=DEFAULT_CONTEXT):
    """f -> P_N T_f P_N for trigonometric polynomials of degree <= d.

    The algebra is C^G, functions sampled at the G-th roots of unity; the
    Fourier coefficients of degree-d polynomials are exact once G >= N + d.
    """
    if n <= d:
        raise DegreeTooLarge(f"truncation order {n} must exceed the degree {d}")
    g = grid or (n + d)
    if g < n + d:
        raise DegreeTooLarge(f"grid {g} too coarse for order {n} and degree {d}")
    thetas = 2 * np.pi * np.arange(g) / g
    kraus = [[np.exp(1j * np.arange(n) * th)[None, :] / np.sqrt(g)] for th in thetas]
    return ucp_from_kraus(FiniteCStarAlgebra((1,) * g), n, kraus, ctx)


def sample_symbol(sym, grid):
    """The algebra element of C^grid holding a scalar symbol's values."""
    if sym.block != 1:
        raise InputError("only scalar symbols can be sampled into C^G")
    vals = sym.evaluate(2 * np.pi * np.arange(grid) / grid)
    return FiniteCStarAlgebra((1,) * grid).element([v for v in vals])
