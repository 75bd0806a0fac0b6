"""Constructive approximation of a UCP map by C*-convex combinations of C*-extreme maps.

Each Kraus operator V_n of the input is one pure component.  With
A_n = V_n* V_n and the polar decomposition V_n = W_n A_n^{1/2}, the map
xi_n = W_n* (.) W_n + theta_n (.) (I - P_n) is C*-extreme and

    psi_N = B_N^{1/2} xi B_N^{1/2} + sum_{j <= N} A_j^{1/2} xi_j A_j^{1/2},

with B_N = I - sum_{j <= N} A_j, is unital and reaches phi at N = #components.
"""
from dataclasses import dataclass, field

import numpy as np

from .cpmaps import UcpMap, ucp_from_kraus
from .errors import AnchorNotCertified, EmptyComponentList, IndexOutOfRange, NumericalFailure
from .extremity import PureSumSpec, Summand, cstar_extreme, cstar_extreme_pure_sum
from .numerics import (DEFAULT_CONTEXT, dag, fro, hermitian_part, min_eig, opnorm,
                       polar_decompose, psd_sqrt, range_basis)


@dataclass(eq=False)
class KMComponent:
    block: int
    V: np.ndarray
    A: np.ndarray
    A_sqrt: np.ndarray
    W: np.ndarray
    P: np.ndarray
    e: np.ndarray              # unit vector in ran(W) defining theta
    xi: UcpMap
    certificate: dict = field(default_factory=dict)

    def zeta(self, a):
        return dag(self.W) @ a.blocks[self.block] @ self.W

    def theta(self, a):
        return complex(np.vdot(self.e, a.blocks[self.block] @ self.e))


@dataclass(eq=False)
class KMApproximant:
    phi: UcpMap
    anchor: UcpMap
    anchor_report: object
    components: list
    B: list                    # B_0 = I, ..., B_N
    dropped: int = 0

    @property
    def size(self):
        return len(self.components)


@dataclass(eq=False)
class KMCombination:
    coefficients: list
    components: list
    map: UcpMap
    reports: list
    coefficient_residual: float


def default_anchor(phi, ctx=DEFAULT_CONTEXT):
    """a -> <a_0 e_1, e_1> I_H, a pure state of the first block times the identity."""
    d, n0 = phi.out_dim, phi.algebra.block_dims[0]
    e1 = np.zeros((n0, 1))
    e1[0] = 1.0
    kraus = [[] for _ in phi.algebra.block_dims]
    kraus[0] = [e1 @ np.eye(d)[[k]] for k in range(d)]
    return ucp_from_kraus(phi.algebra, d, kraus, ctx)


def _certify_xi(block, w, init, comp, e, xi, alg, ctx):
    """Present xi as a nested pure sum and check the two agree up to a unitary."""
    summands = [Summand(block, w @ init, 1)]
    if comp.shape[1]:
        summands.append(Summand(block, e.reshape(-1, 1), comp.shape[1]))
    spec = PureSumSpec(alg, summands)
    r = np.hstack([init, comp]).conj().T
    assembled = spec.assemble(ctx)
    res = max(fro(dag(r) @ assembled.apply(g) @ r - xi.apply(g)) for g in alg.matrix_units())
    report = cstar_extreme_pure_sum(spec, ctx)
    return {"spec": spec, "unitary": r, "residual": res, "report": report,
            "verified": report.is_true and res <= ctx.eps_eq}


def km_build(phi, anchor=None, ctx=DEFAULT_CONTEXT):
    if anchor is None:
        anchor = default_anchor(phi, ctx)
    anchor_report = cstar_extreme(anchor, ctx)
    if not anchor_report.is_true:
        raise AnchorNotCertified(f"anchor verdict is {anchor_report.verdict.value}")
    d = phi.out_dim
    eye = np.eye(d)
    comps, dropped = [], 0
    for alpha, v in phi.items():
        if fro(v) <= ctx.eps_eq:
            dropped += 1
            continue
        a = hermitian_part(dag(v) @ v)
        w, a_sqrt = polar_decompose(v, ctx)
        p = hermitian_part(dag(w) @ w)
        col = int(np.argmax(np.linalg.norm(w, axis=0)))
        e = w[:, col] / np.linalg.norm(w[:, col])
        init = range_basis(p, ctx)
        f = init.orthocomplement(ctx).basis
        kraus = [[] for _ in phi.algebra.block_dims]
        kraus[alpha] = [w] + [np.outer(e, f[:, k].conj()) for k in range(f.shape[1])]
        xi = ucp_from_kraus(phi.algebra, d, kraus, ctx)
        cert = _certify_xi(alpha, w, init.basis, f, e, xi, phi.algebra, ctx)
        if not cert["verified"]:
            raise NumericalFailure("component summand failed its C*-extremity certificate")
        comps.append(KMComponent(alpha, v, a, a_sqrt, w, p, e, xi, cert))
    if not comps:
        raise EmptyComponentList("the map has no nonzero Kraus component")
    bs = [eye.astype(complex)]
    for c in comps:
        b = bs[-1] - c.A
        if min_eig(b) < -ctx.eps_eq:
            raise NumericalFailure("remainder B_N is not positive")
        bs.append(b)
    return KMApproximant(phi, anchor, anchor_report, comps, bs, dropped)


def km_step(approx, n, ctx=DEFAULT_CONTEXT):
    if not 0 <= n <= approx.size:
        raise IndexOutOfRange(f"step {n} outside 0..{approx.size}")
    b_sqrt = psd_sqrt(hermitian_part(approx.B[n]), ctx, floor=1.0)
    coeffs = [b_sqrt] + [c.A_sqrt for c in approx.components[:n]]
    parts = [approx.anchor] + [c.xi for c in approx.components[:n]]
    reports = [approx.anchor_report] + [c.certificate["report"] for c in approx.components[:n]]
    kraus = [[] for _ in approx.phi.algebra.block_dims]
    for t, part in zip(coeffs, parts):
        for alpha, v in part.items():
            kraus[alpha].append(v @ t)
    psi = ucp_from_kraus(approx.phi.algebra, approx.phi.out_dim, kraus, ctx)
    coeff_res = fro(sum(dag(t) @ t for t in coeffs) - np.eye(approx.phi.out_dim))
    return KMCombination(coeffs, parts, psi, reports, coeff_res)


def tail(approx, n, a):
    """sum over j > n of V_j* a V_j."""
    out = np.zeros((approx.phi.out_dim,) * 2, dtype=complex)
    for c in approx.components[n:]:
        out += dag(c.V) @ a.blocks[c.block] @ c.V
    return out


def error_envelope(approx, n, a):
    """Upper bound ||B_n|| ||a|| + ||tail_n(a)|| for ||psi_n(a) - phi(a)||."""
    return opnorm(approx.B[n]) * a.norm() + opnorm(tail(approx, n, a))


def bw_distance_on(phi, psi, test_set):
    if not test_set:
        return 0.0
    return max(opnorm(phi.apply(a) - psi.apply(a)) for a in test_set)
