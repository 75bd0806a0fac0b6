"""Extreme and C*-extreme point decisions, factorization certificates, proper combinations."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebras import (FiniteCStarAlgebra, Nest, OperatorAlgebraSpan,
                       is_reflexive_nest_algebra, nest_cholesky_factor)
from .cpmaps import (map_from_dilation, minimal_stinespring, rn_derivative,
                     ucp_from_kraus)
from .errors import (AlphaOutOfRange, BlockMismatch, FactorizationFailed, NonMinimal,
                     NotIsometry, NotMultiplicityFree, NotPD, NumericalFailure,
                     ShapeMismatch, SingularCompression, StructureMismatch, Unsupported)
from .numerics import (DEFAULT_CONTEXT, Relation, Subspace, as_cmatrix, dag, fro,
                       hermitian_part, hs_orthonormalize, min_eig, null_basis, opnorm,
                       polar_decompose, psd_sqrt, rel_residual,
                       subspace_compare, vec)
from .reports import DecisionReport, Verdict


# ---------------------------------------------------------------- pure sums

@dataclass(eq=False)
class Summand:
    block: int
    V: np.ndarray          # isometry H_i -> C^{n_block}
    k: int = 1             # multiplicity space dimension

    @property
    def range(self):
        return Subspace(self.V.shape[0], self.V)


@dataclass(eq=False)
class PureSumSpec:
    """phi = direct sum over i of (V_i* a_{block_i} V_i) (x) I_{k_i}.

    The output space is the direct sum of H_i (x) C^{k_i}, each summand laid
    out with index (p, j) -> p * k_i + j.
    """
    algebra: FiniteCStarAlgebra
    summands: list

    def __post_init__(self):
        ctx = DEFAULT_CONTEXT
        for s in self.summands:
            s.V = as_cmatrix(s.V, "summand isometry")
            n = self.algebra.block_dims[s.block]
            if s.V.shape[0] != n:
                raise ShapeMismatch(f"summand isometry has {s.V.shape[0]} rows, block has {n}")
            if fro(dag(s.V) @ s.V - np.eye(s.V.shape[1])) > ctx.eps_eq:
                raise NotIsometry("summand map is not an isometry")
            if s.k < 1:
                raise ShapeMismatch("multiplicity must be positive")

    @property
    def out_dim(self):
        return sum(s.V.shape[1] * s.k for s in self.summands)

    @property
    def blocks(self):
        return sorted({s.block for s in self.summands})

    def merged(self, ctx=DEFAULT_CONTEXT):
        """Merge summands of one block with equal ranges (first occurrence wins)."""
        out = []
        for s in self.summands:
            for t in out:
                if t.block == s.block and subspace_compare(t.range, s.range, ctx) is Relation.EQUAL:
                    t.k += s.k
                    break
            else:
                out.append(Summand(s.block, s.V.copy(), s.k))
        return PureSumSpec(self.algebra, out)

    def assemble(self, ctx=DEFAULT_CONTEXT):
        total = self.out_dim
        kraus = [[] for _ in self.algebra.block_dims]
        off = 0
        for s in self.summands:
            h = s.V.shape[1]
            for j in range(s.k):
                e = np.zeros((1, s.k))
                e[0, j] = 1.0
                op = np.zeros((s.V.shape[0], total), dtype=complex)
                op[:, off:off + h * s.k] = np.kron(s.V, e)
                kraus[s.block].append(op)
            off += h * s.k
        return ucp_from_kraus(self.algebra, total, kraus, ctx)


@dataclass
class KernelWitness:
    """T != 0 in the commutant (coordinates) with V* T V = 0."""
    T: np.ndarray
    compression_norm: float

    def check(self, triple, ctx=DEFAULT_CONTEXT):
        t = self.T
        return fro(t) > 0 and fro(triple.compress(triple.rep.embed(t))) <= ctx.eps_eq * fro(t)


@dataclass
class OrthogonalPair:
    """Two summands i, j with V_i* V_j = 0."""
    i: int
    j: int
    norm: float


@dataclass
class IncomparablePair:
    block: int
    i: int
    j: int
    E: Subspace
    F: Subspace

    def check(self, ctx=DEFAULT_CONTEXT):
        return subspace_compare(self.E, self.F, ctx) is Relation.INCOMPARABLE


@dataclass
class NonDecomposable:
    residual: float
    reason: str


def is_extreme(phi, ctx=DEFAULT_CONTEXT, triple=None):
    """Injectivity of T -> V* T V on the commutant, decided by rank."""
    triple = triple or minimal_stinespring(phi, ctx)
    rep = triple.rep
    basis = rep.coordinate_basis()
    cols = np.stack([vec(triple.compress(rep.embed(b))) for b in basis], axis=1)
    _, s, vh = np.linalg.svd(cols, full_matrices=True)
    rank = int(np.sum(s > ctx.eps_rank * s[0])) if s.size else 0
    if rank == len(basis):
        return DecisionReport(Verdict.TRUE, data={"rank": rank, "commutant_dim": len(basis)})
    c = vh[rank].conj()
    t = sum(ci * b for ci, b in zip(c, basis))
    w = KernelWitness(t, fro(triple.compress(rep.embed(t))))
    return DecisionReport(Verdict.FALSE, witness=w,
                          notes=f"rank {rank} < commutant dimension {len(basis)}",
                          data={"rank": rank, "commutant_dim": len(basis)})


def is_extreme_pure_sum(spec, ctx=DEFAULT_CONTEXT):
    if len(spec.blocks) > 1:
        raise BlockMismatch("summands compress different blocks")
    ss = spec.summands
    for i in range(len(ss)):
        for j in range(i + 1, len(ss)):
            nrm = opnorm(dag(ss[i].V) @ ss[j].V)
            if nrm <= ctx.eps_eq:
                return DecisionReport(Verdict.FALSE, witness=OrthogonalPair(i, j, nrm),
                                      notes=f"summands {i} and {j} have orthogonal ranges")
    return DecisionReport(Verdict.TRUE)


def cstar_extreme_pure_sum(spec, ctx=DEFAULT_CONTEXT):
    """Nested ranges within every block.

    The countability condition on the completed nest holds automatically for
    finite families and is recorded as such.
    """
    spec = spec.merged(ctx)
    chains = {}
    for b in spec.blocks:
        idx = [i for i, s in enumerate(spec.summands) if s.block == b]
        idx.sort(key=lambda i: spec.summands[i].V.shape[1])
        for i, j in zip(idx, idx[1:]):
            e, f = spec.summands[i].range, spec.summands[j].range
            if subspace_compare(e, f, ctx) is not Relation.PROPER_SUB:
                return DecisionReport(Verdict.FALSE, witness=IncomparablePair(b, i, j, e, f),
                                      notes=f"ranges of summands {i} and {j} are not nested",
                                      data={"spec": spec})
        chains[b] = idx
    return DecisionReport(Verdict.TRUE, data={"spec": spec, "chains": chains,
                                              "countable_completion": True})


# ------------------------------------------------------------ decomposition

@dataclass(eq=False)
class Component:
    block: int
    G: Subspace            # in C^{n_block}
    K: np.ndarray          # orthonormal columns in commutant coordinates C^{sum m}
    K_local: np.ndarray    # the same columns restricted to the block


@dataclass(eq=False)
class Decomposition:
    decomposable: bool
    residual: float
    reason: str = ""
    components: list = field(default_factory=list)
    spec: Optional[PureSumSpec] = None
    U: Optional[np.ndarray] = None   # phi = U* assemble(spec) U


def _solve_in_basis(basis, fn, ctx):
    """Combinations of ``basis`` annihilated by the linear map ``fn``."""
    if not basis:
        return []
    cols = np.stack([vec(fn(b)) for b in basis], axis=1)
    # basis elements have unit size and fn is a contraction up to a factor 2
    null = null_basis(cols, ctx, scale=1.0)
    return [sum(c * b for c, b in zip(null.basis[:, j], basis)) for j in range(null.dim)]


def commuting_coordinates(triple, ctx=DEFAULT_CONTEXT):
    """The *-algebra of commutant coordinates T with [pi'(T), VV*] = 0."""
    p = triple.range_projector()
    rep = triple.rep
    return _solve_in_basis(rep.coordinate_basis(),
                           lambda t: rep.embed(t) @ p - p @ rep.embed(t), ctx)


def _central_projections(c_basis, ctx):
    zs = _solve_in_basis(c_basis, lambda t: np.concatenate(
        [vec(t @ c - c @ t) for c in c_basis]), ctx)
    herm = []
    for z in zs:
        herm += [hermitian_part(z), hermitian_part(-1j * z)]
    herm = hs_orthonormalize(herm, ctx)
    rng = ctx.rng(101)
    h = sum(rng.normal() * x for x in herm)
    w, q = np.linalg.eigh(hermitian_part(h))
    spread = max(w[-1] - w[0], 1.0)
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > 1e-6 * spread:
            groups.append(q[:, start:i])
            start = i
    return groups


def decompose_into_pures(phi, ctx=DEFAULT_CONTEXT, triple=None):
    """Write VH as a direct sum of G_j (x) K_j, one block per term, or report failure."""
    triple = triple or minimal_stinespring(phi, ctx)
    rep, alg = triple.rep, phi.algebra
    p = triple.range_projector()
    c_basis = commuting_coordinates(triple, ctx)
    comps = []
    for kb in _central_projections(c_basis, ctx):
        mass = [fro(kb[rep.coord_slice(a)]) ** 2 for a in range(alg.num_blocks)]
        alpha = int(np.argmax(mass))
        if sum(mass) - mass[alpha] > ctx.eps_eq:
            return Decomposition(False, sum(mass) - mass[alpha],
                                 "a minimal central projection spans several blocks")
        n = alg.block_dims[alpha]
        s = rep.block_slice(alpha)
        k_loc = kb[rep.coord_slice(alpha)]
        # g (x) u lies in VH iff <P (g (x) u), g (x) u> = |g|^2
        iu = np.kron(np.eye(n), k_loc[:, :1])
        w, q = np.linalg.eigh(hermitian_part(dag(iu) @ p[s, s] @ iu))
        g = Subspace(n, q[:, w > 1 - ctx.eps_eq])
        if g.dim == 0:
            return Decomposition(False, 1.0, "a central projection meets the range trivially")
        comps.append(Component(alpha, g, kb, k_loc))
    rebuilt = np.zeros_like(p)
    for c in comps:
        s = rep.block_slice(c.block)
        rebuilt[s, s] += np.kron(c.G.projector(), c.K_local @ dag(c.K_local))
    res = rel_residual(rebuilt, p)
    if res > ctx.eps_eq:
        return Decomposition(False, res, "range projection is not a sum of product projections")
    spec = PureSumSpec(alg, [Summand(c.block, c.G.basis, c.K.shape[1]) for c in comps])
    rows = []
    for c in comps:
        s = rep.block_slice(c.block)
        rows.append(dag(np.kron(c.G.basis, c.K_local)) @ triple.V[s])
    u = np.vstack(rows)
    assembled = spec.assemble(ctx)
    res_u = max(fro(dag(u) @ u - np.eye(phi.out_dim)),
                max(fro(dag(u) @ assembled.apply(g) @ u - phi.apply(g)) for g in alg.matrix_units()))
    if res_u > ctx.eps_eq * max(1.0, phi.out_dim ** 0.5):
        raise NumericalFailure(f"decomposition unitary fails verification ({res_u:.3e})")
    return Decomposition(True, res, components=comps, spec=spec, U=u)


def m_algebra(triple, ctx=DEFAULT_CONTEXT):
    """{T in the commutant : T VV* = VV* T VV*}, in commutant coordinates."""
    p = triple.range_projector()
    rep = triple.rep
    q = np.eye(p.shape[0]) - p
    sols = _solve_in_basis(rep.coordinate_basis(), lambda t: q @ rep.embed(t) @ p, ctx)
    span = OperatorAlgebraSpan(rep.coord_dim, hs_orthonormalize(sols, ctx))
    span.unital = span.contains(np.eye(rep.coord_dim), ctx)
    if not span.is_closed_under_products(ctx):
        raise StructureMismatch("M-algebra basis is not closed under products")
    return span


def offdiagonal_mass(span, k1, k2):
    """HS mass of K1* T K2 and K2* T K1 over an algebra basis."""
    tot = 0.0
    for t in span.basis:
        tot += fro(dag(k1) @ t @ k2) ** 2 + fro(dag(k2) @ t @ k1) ** 2
    return tot ** 0.5


def _adapted_m_algebra(span, dec):
    """Conjugate M into coordinates listing the K_j of each block in chain order."""
    order = sorted(range(len(dec.components)),
                   key=lambda j: (dec.components[j].block, -dec.components[j].G.dim, j))
    w = np.hstack([dec.components[j].K for j in order])
    return OperatorAlgebraSpan(span.ambient_dim, [dag(w) @ b @ w for b in span.basis], span.unital)


def cstar_extreme(phi, ctx=DEFAULT_CONTEXT, triple=None):
    """C*-extremity for maps that decompose into pure summands.

    A single-block map that is not such a direct sum is not C*-extreme.
    Several blocks without a decomposition give Unsupported.
    """
    triple = triple or minimal_stinespring(phi, ctx)
    dec = decompose_into_pures(phi, ctx, triple)
    if not dec.decomposable:
        if phi.algebra.num_blocks == 1:
            return DecisionReport(Verdict.FALSE, witness=NonDecomposable(dec.residual, dec.reason),
                                  notes="range does not split into pure summands",
                                  data={"decomposition": dec})
        return DecisionReport(Verdict.UNSUPPORTED, notes=dec.reason, data={"decomposition": dec})
    rep = cstar_extreme_pure_sum(dec.spec, ctx)
    rep.data["decomposition"] = dec
    if rep.is_false:
        w = rep.witness
        span = m_algebra(triple, ctx)
        ci, cj = dec.components[w.i], dec.components[w.j]
        rep.data["obstruction_mass"] = offdiagonal_mass(span, ci.K, cj.K)
    return rep


def cstar_extreme_normal(v, g, k, ctx=DEFAULT_CONTEXT):
    """Decision for X -> V*(X (x) I_k)V on M_g with V : H -> C^g (x) C^k."""
    v = as_cmatrix(v, "isometry")
    if v.shape[0] != g * k:
        raise ShapeMismatch(f"isometry has {v.shape[0]} rows, expected {g * k}")
    h = v.shape[1]
    if fro(dag(v) @ v - np.eye(h)) > ctx.eps_eq * max(1.0, h ** 0.5):
        raise NotIsometry("V is not an isometry")
    p = (v @ dag(v)).reshape(g, k, g, k)
    ptr = np.einsum("iaib->ab", p)
    if np.linalg.matrix_rank(ptr, tol=ctx.eps_rank * max(opnorm(ptr), 1e-300)) < k:
        raise NonMinimal("partial trace of the range projection is not of full rank")
    blk = v.reshape(g, k, h)
    phi = ucp_from_kraus(FiniteCStarAlgebra((g,)), h, [[blk[:, j, :] for j in range(k)]], ctx)
    triple = minimal_stinespring(phi, ctx)
    report = cstar_extreme(phi, ctx, triple)
    dec = report.data["decomposition"]
    span = m_algebra(triple, ctx)
    report.data["m_algebra"] = span
    adapted = _adapted_m_algebra(span, dec) if dec.decomposable else span
    report.data["m_reflexive"] = is_reflexive_nest_algebra(adapted, ctx).verdict
    return report


# ----------------------------------------------------------- certificates

@dataclass(eq=False)
class FZCertificate:
    D: np.ndarray          # commutant coordinates
    S: np.ndarray
    Z: np.ndarray
    U: np.ndarray = None   # polar part of S, so that S = U D^{1/2}
    D_sqrt: np.ndarray = None
    residuals: dict = field(default_factory=dict)


def _compression_inverse_norm(triple, d):
    c = triple.compress(triple.rep.embed(d))
    return opnorm(np.linalg.inv(c))


def _check_d(triple, d, ctx):
    d = as_cmatrix(d, "D")
    if d.shape != (triple.rep.coord_dim,) * 2:
        raise ShapeMismatch(f"D must be {triple.rep.coord_dim}-square in commutant coordinates")
    psd_sqrt(d, ctx)  # raises NotPSD
    c = triple.compress(triple.rep.embed(d))
    w = np.linalg.eigvalsh(hermitian_part(c))
    if w[0] <= ctx.eps_eq * max(abs(w[-1]), 1e-300):
        raise SingularCompression(f"V* D V is not invertible (min eigenvalue {w[0]:.3e})")
    return hermitian_part(d)


def certificate_residuals(triple, cert, ctx=DEFAULT_CONTEXT):
    rep = triple.rep
    s, d, z = cert.S, cert.D, cert.Z
    sf = rep.embed(s)
    p = triple.range_projector()
    sv = opnorm(z) if z.size else 0.0
    zmin = np.linalg.svd(z, compute_uv=False)[-1] if z.size else 0.0
    res = {
        "commutant": rep.coords_offdiag_mass(s) / max(fro(s), 1e-300)
        + rep.coords_offdiag_mass(d) / max(fro(d), 1e-300),
        "D=S*S": rel_residual(dag(s) @ s, d),
        "SVV*=VV*SVV*": fro(sf @ p - p @ sf @ p) / max(fro(sf @ p), 1e-300),
        "Z=V*SV": rel_residual(triple.compress(sf), z),
        "Z_inverse_gap": max(0.0, ctx.eps_eq - zmin / max(sv, 1e-300)),
        "D_negativity": max(0.0, -min_eig(d)) / max(opnorm(d), 1e-300),
    }
    if zmin > 0:
        lhs = opnorm(np.linalg.inv(z)) ** 2
        rhs = _compression_inverse_norm(triple, d)
        res["norm_identity"] = abs(lhs - rhs) / rhs
    else:
        res["norm_identity"] = float("inf")
    if cert.U is not None and cert.D_sqrt is not None:
        res["UD^1/2V=VZ"] = rel_residual(rep.embed(cert.U @ cert.D_sqrt) @ triple.V, triple.V @ z)
    return res


def fz_verify_certificate(triple, cert, ctx=DEFAULT_CONTEXT):
    try:
        res = certificate_residuals(triple, cert, ctx)
    except (ValueError, np.linalg.LinAlgError) as exc:
        return False, {"error": str(exc)}
    return all(r <= ctx.eps_eq for r in res.values()), res


def fz_find_certificate(triple, d, ctx=DEFAULT_CONTEXT, decomposition=None):
    """Factor D = S*S with S in the M-algebra by Cholesky along the range nest."""
    d = _check_d(triple, d, ctx)
    dec = decomposition or decompose_into_pures(triple.map, ctx, triple)
    if not dec.decomposable:
        raise Unsupported(f"map does not decompose into pure summands: {dec.reason}")
    rep = triple.rep
    s = np.zeros_like(d)
    for alpha in range(rep.algebra.num_blocks):
        idx = [j for j, c in enumerate(dec.components) if c.block == alpha]
        if not idx:
            continue
        # largest range first: S must map each K_j into the span of K's with larger G
        idx.sort(key=lambda j: (-dec.components[j].G.dim, j))
        m = rep.multiplicities[alpha]
        chain, acc = [Subspace.zero(m)], np.zeros((m, 0), dtype=complex)
        for j in idx:
            acc = np.hstack([acc, dec.components[j].K_local])
            chain.append(Subspace(m, acc))
        c = rep.coord_slice(alpha)
        try:
            fac = nest_cholesky_factor(d[c, c], Nest(m, chain), ctx)
        except NotPD as exc:
            raise FactorizationFailed(f"block {alpha}: {exc}", {"block": alpha}) from exc
        s[c, c] = fac.S
    sf = rep.embed(s)
    p = triple.range_projector()
    member = fro(sf @ p - p @ sf @ p) / max(fro(sf @ p), 1e-300)
    if member > ctx.eps_eq:
        raise FactorizationFailed("nest factor leaves the range of V", {"SVV*=VV*SVV*": member})
    u, dsq = polar_decompose(s, ctx)
    cert = FZCertificate(d, s, triple.compress(sf), U=u, D_sqrt=psd_sqrt(d, ctx))
    ok, cert.residuals = fz_verify_certificate(triple, cert, ctx)
    if not ok:
        raise NumericalFailure(f"certificate residuals exceed tolerance: {cert.residuals}")
    return cert


# ------------------------------------------------------ proper combinations

@dataclass(eq=False)
class ProperCombination:
    coefficients: list
    components: list
    residuals: dict = field(default_factory=dict)

    def apply(self, a):
        return sum(dag(t) @ phi.apply(a) @ t for t, phi in zip(self.coefficients, self.components))


def proper_combination_build(triple, d, alpha=None, ctx=DEFAULT_CONTEXT):
    """phi = T1* phi1 T1 + T2* phi2 T2 from a positive D in the commutant."""
    d = _check_d(triple, d, ctx)
    dn = opnorm(d)
    if alpha is None:
        alpha = 1.0 / (2.0 * dn)
    if not 0 < alpha < 1.0 / dn:
        raise AlphaOutOfRange(f"alpha must lie in (0, {1.0 / dn:.6g})")
    rep, v, phi = triple.rep, triple.V, triple.map
    eye = np.eye(rep.coord_dim)
    t1 = psd_sqrt(alpha * triple.compress(rep.embed(d)), ctx)
    t2 = psd_sqrt(triple.compress(rep.embed(eye - alpha * d)), ctx)
    comps = []
    for t, r in ((t1, alpha * d), (t2, eye - alpha * d)):
        x = rep.embed(psd_sqrt(r, ctx)) @ v @ np.linalg.inv(t)
        comps.append(map_from_dilation(phi.algebra, rep, x, cp=False, ctx=ctx))
    comb = ProperCombination([t1, t2], comps)
    comb.residuals["coefficients"] = fro(dag(t1) @ t1 + dag(t2) @ t2 - np.eye(phi.out_dim))
    comb.residuals["reassembly"] = max(fro(comb.apply(g) - phi.apply(g))
                                       for g in phi.algebra.matrix_units())
    if max(comb.residuals.values()) > ctx.eps_eq * max(1.0, phi.out_dim ** 0.5):
        raise NumericalFailure(f"proper combination fails verification: {comb.residuals}")
    return comb


def zhou_compression(phi, psi, ctx=DEFAULT_CONTEXT, triple=None):
    """Invertible T with psi = T* phi(.) T for psi <= phi, phi C*-extreme."""
    triple = triple or minimal_stinespring(phi, ctx)
    rn = rn_derivative(phi, psi, ctx, triple)
    cert = fz_find_certificate(triple, rn.D, ctx)
    t = cert.Z
    res = max(rel_residual(dag(t) @ phi.apply(g) @ t, psi.apply(g))
              for g in phi.algebra.matrix_units() if fro(psi.apply(g)) > 0)
    if res > ctx.eps_eq:
        raise NumericalFailure(f"compression identity fails ({res:.3e})")
    return t


def multiplicity_free_extreme_check(phi, ctx=DEFAULT_CONTEXT):
    """Check that C*-extremity implies extremity on a multiplicity-free map."""
    triple = minimal_stinespring(phi, ctx)
    if any(m > 1 for m in triple.multiplicities):
        raise NotMultiplicityFree(f"multiplicities {triple.multiplicities}")
    cs = cstar_extreme(phi, ctx, triple)
    ext = is_extreme(phi, ctx, triple)
    data = {"cstar": cs.verdict, "extreme": ext.verdict}
    if cs.is_true and not ext.is_true:
        return DecisionReport(Verdict.FALSE, witness={"cstar": cs, "extreme": ext},
                              notes="critical inconsistency: C*-extreme but not extreme", data=data)
    notes = "" if cs.is_true else "implication vacuous"
    return DecisionReport(Verdict.TRUE, notes=notes, data=data)
