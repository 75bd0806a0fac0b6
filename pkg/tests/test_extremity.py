import numpy as np
import pytest
from hypothesis import given, strategies as st

from cstar.algebras import FiniteCStarAlgebra
from cstar.cpmaps import (minimal_stinespring, scale, tensor, ucp_from_kraus,
                          unitarily_equivalent)
from cstar.errors import (AlphaOutOfRange, BlockMismatch, FactorizationFailed, NonMinimal,
                          NotDominated, NotIsometry, NotMultiplicityFree, NotPSD, ShapeMismatch,
                          SingularCompression, Unsupported)
from cstar.extremity import (FZCertificate, IncomparablePair, KernelWitness, NonDecomposable,
                             OrthogonalPair, PureSumSpec, Summand, cstar_extreme,
                             cstar_extreme_normal, cstar_extreme_pure_sum, decompose_into_pures,
                             fz_find_certificate, fz_verify_certificate, is_extreme,
                             is_extreme_pure_sum, m_algebra, multiplicity_free_extreme_check,
                             offdiagonal_mass, proper_combination_build, zhou_compression)
from cstar.instances import (dominated_map, generic_normal_subspace, incomparable_instance,
                             mixed_pure_sum, nested_chain_instance, normal_pattern_nested_g,
                             normal_pattern_orthogonal_g, pure_compression, random_commutant_pd,
                             random_unitary)
from cstar.numerics import fro
from cstar.reports import DecisionReport, Verdict

seeds = st.integers(0, 2**32 - 1)
E = np.eye(3)


def e(n, *idx):
    return np.eye(n)[:, list(idx)]


def spec_of(n, *vs, ks=None):
    ks = ks or [1] * len(vs)
    return PureSumSpec(FiniteCStarAlgebra((n,)), [Summand(0, v, k) for v, k in zip(vs, ks)])


def normal_map(v, g, k):
    h = v.shape[1]
    blk = v.reshape(g, k, h)
    return ucp_from_kraus(FiniteCStarAlgebra((g,)), h, [[blk[:, j, :] for j in range(k)]])


def test_false_report_needs_witness():
    with pytest.raises(ValueError):
        DecisionReport(Verdict.FALSE)


# extreme points

def test_is_extreme_identity(identity_channel):
    assert is_extreme(identity_channel).is_true


def test_is_extreme_trace_state(m2):
    # the trace state tr(x)/2 on M_2 with out_dim 1
    state = ucp_from_kraus(m2, 1, [[e(2, 0) / np.sqrt(2), e(2, 1) / np.sqrt(2)]])
    rep = is_extreme(state)
    assert rep.is_false and rep.data["commutant_dim"] == 4 and rep.data["rank"] == 1
    t = minimal_stinespring(state)
    assert isinstance(rep.witness, KernelWitness) and rep.witness.check(t)


def test_is_extreme_orthogonal_sum():
    spec = spec_of(2, e(2, 0), e(2, 1))
    phi = spec.assemble()
    rep = is_extreme(phi)
    assert rep.is_false and rep.witness.check(minimal_stinespring(phi))
    ps = is_extreme_pure_sum(spec)
    assert ps.is_false and isinstance(ps.witness, OrthogonalPair) and ps.witness.norm <= 1e-12


def test_is_extreme_pure_sum_examples():
    assert is_extreme_pure_sum(spec_of(2, e(2, 0), np.eye(2))).is_true
    assert is_extreme_pure_sum(spec_of(3, e(3, 1))).is_true
    alg = FiniteCStarAlgebra((1, 1))
    with pytest.raises(BlockMismatch):
        is_extreme_pure_sum(PureSumSpec(alg, [Summand(0, np.ones((1, 1))), Summand(1, np.ones((1, 1)))]))


def test_pure_sum_spec_validation():
    with pytest.raises(NotIsometry):
        spec_of(2, np.ones((2, 1)))
    with pytest.raises(ShapeMismatch):
        spec_of(2, e(3, 0))


def test_merging_sums_multiplicities():
    rng = np.random.default_rng(0)
    u = random_unitary(rng, 2)
    spec = spec_of(3, e(3, 0, 1), e(3, 0, 1) @ u, e(3, 2), ks=[1, 2, 1]).merged()
    assert [s.k for s in spec.summands] == [3, 1]


@given(seeds)
def test_extreme_oracles_agree(seed):
    rng = np.random.default_rng(seed)
    spec = mixed_pure_sum(rng, int(rng.integers(1, 6)), int(rng.integers(1, 4)))
    assert is_extreme(spec.assemble()).verdict is is_extreme_pure_sum(spec).verdict


# C*-extremity of pure sums

def test_cstar_pure_sum_chain():
    rep = cstar_extreme_pure_sum(spec_of(3, e(3, 0), e(3, 0, 1)))
    assert rep.is_true and rep.data["countable_completion"] is True


def test_cstar_pure_sum_incomparable():
    rep = cstar_extreme_pure_sum(spec_of(3, e(3, 0), e(3, 1)))
    assert rep.is_false
    w = rep.witness
    assert isinstance(w, IncomparablePair) and w.check()
    assert {w.E.dim, w.F.dim} == {1}


def test_cstar_pure_sum_disjoint_blocks():
    alg = FiniteCStarAlgebra((2, 3))
    spec = PureSumSpec(alg, [Summand(0, np.eye(2)), Summand(1, np.eye(3))])
    assert cstar_extreme_pure_sum(spec).is_true


def test_cstar_equal_ranges_merge_to_chain():
    rng = np.random.default_rng(1)
    v = e(3, 0, 1)
    assert cstar_extreme_pure_sum(spec_of(3, v, v @ random_unitary(rng, 2))).is_true


@given(seeds)
def test_cstar_implies_extreme(seed):
    rng = np.random.default_rng(seed)
    spec = mixed_pure_sum(rng, int(rng.integers(1, 6)), int(rng.integers(1, 5)))
    if cstar_extreme_pure_sum(spec).is_true:
        assert is_extreme_pure_sum(spec).is_true


# decomposition

def test_decompose_example_product_pieces():
    piece1 = np.kron(e(2, 0), e(2, 0))
    piece2 = np.kron(np.eye(2), e(2, 1))
    v = np.hstack([piece1, piece2])
    dec = decompose_into_pures(normal_map(v, 2, 2))
    assert dec.decomposable
    assert sorted(c.G.dim for c in dec.components) == [1, 2]


def test_decompose_full_product():
    v = np.eye(6)
    dec = decompose_into_pures(normal_map(v, 2, 3))
    assert dec.decomposable and len(dec.components) == 1
    assert dec.components[0].G.dim == 2 and dec.spec.summands[0].k == 3


def test_decompose_generic_fails():
    rng = np.random.default_rng(5)
    phi = normal_map(np.linalg.qr(rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)))[0], 2, 2)
    dec = decompose_into_pures(phi)
    assert not dec.decomposable and dec.residual > 1e-8


@given(seeds)
def test_decomposition_unitary_reassembles(seed):
    rng = np.random.default_rng(seed)
    phi = mixed_pure_sum(rng, int(rng.integers(1, 5)), int(rng.integers(1, 4))).assemble()
    dec = decompose_into_pures(phi)
    assert dec.decomposable
    u, psi = dec.U, dec.spec.assemble()
    for g in phi.algebra.matrix_units():
        assert fro(u.conj().T @ psi.apply(g) @ u - phi.apply(g)) <= 1e-8


# normal maps

def test_normal_patterns_true():
    rng = np.random.default_rng(8)
    for _ in range(5):
        g, k = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        assert cstar_extreme_normal(normal_pattern_nested_g(rng, g, k), g, k).is_true
        assert cstar_extreme_normal(normal_pattern_orthogonal_g(rng, g, k), g, k).is_true


def test_normal_patterns_reflexive_m_algebra():
    rng = np.random.default_rng(9)
    rep = cstar_extreme_normal(normal_pattern_nested_g(rng, 3, 3), 3, 3)
    assert rep.data["m_reflexive"] is Verdict.TRUE


def test_normal_generic_false():
    rng = np.random.default_rng(10)
    rep = cstar_extreme_normal(generic_normal_subspace(rng, 3, 3), 3, 3)
    assert rep.is_false and isinstance(rep.witness, NonDecomposable)


def test_normal_errors():
    with pytest.raises(NonMinimal):
        cstar_extreme_normal(np.kron(np.eye(2), e(2, 0)), 2, 2)
    with pytest.raises(ShapeMismatch):
        cstar_extreme_normal(np.eye(3), 2, 2)
    with pytest.raises(NotIsometry):
        cstar_extreme_normal(2 * np.eye(4), 2, 2)


def test_cstar_extreme_multiblock_non_decomposable_unsupported(half_half_state):
    assert cstar_extreme(half_half_state).verdict is Verdict.UNSUPPORTED


# M-algebra

def test_m_algebra_pure():
    phi = pure_compression(np.random.default_rng(2), 3, 2)
    span = m_algebra(minimal_stinespring(phi))
    assert span.dim == 1 and span.unital


def test_m_algebra_nested_is_triangular():
    phi = spec_of(3, e(3, 0), e(3, 0, 1)).assemble()
    t = minimal_stinespring(phi)
    span = m_algebra(t)
    assert span.dim == 3 and span.unital
    # triangular, not selfadjoint
    adj = [b.conj().T for b in span.basis]
    assert not all(span.contains(a) for a in adj)
    dec = decompose_into_pures(phi, triple=t)
    k = [c.K for c in sorted(dec.components, key=lambda c: -c.G.dim)]
    w = np.hstack(k)
    for b in span.basis:
        c = w.conj().T @ b @ w
        # S must map the larger range's coordinate into span of itself only
        assert abs(c[1, 0]) <= 1e-9


def test_m_algebra_incomparable_is_diagonal():
    rng = np.random.default_rng(3)
    inst = incomparable_instance(rng, 4, 2)
    phi = inst.map
    t = minimal_stinespring(phi)
    rep = cstar_extreme(phi, triple=t)
    assert rep.is_false
    assert rep.data["obstruction_mass"] <= 1e-9
    span = m_algebra(t)
    dec = rep.data["decomposition"]
    assert offdiagonal_mass(span, dec.components[0].K, dec.components[1].K) <= 1e-9


# certificates

def test_fz_identity(identity_channel):
    t = minimal_stinespring(identity_channel)
    cert = fz_find_certificate(t, 2 * np.eye(1))
    assert np.allclose(np.abs(cert.S), np.sqrt(2))
    assert np.allclose(cert.Z, np.sqrt(2) * np.eye(2))


def _two_pure_d():
    return np.array([[2.0, 1.0], [1.0, 2.0]])


def test_fz_incomparable_off_diagonal_fails():
    phi = spec_of(2, e(2, 0), np.array([[1.0], [1.0]]) / np.sqrt(2)).assemble()
    t = minimal_stinespring(phi)
    with pytest.raises(FactorizationFailed):
        fz_find_certificate(t, _two_pure_d())


def test_fz_nested_random_d():
    rng = np.random.default_rng(4)
    inst = nested_chain_instance(rng, 4, 3, multiplicities=True)
    t = minimal_stinespring(inst.map)
    for _ in range(5):
        d = random_commutant_pd(rng, t.rep)
        cert = fz_find_certificate(t, d)
        ok, res = fz_verify_certificate(t, cert)
        assert ok and res["norm_identity"] <= 1e-6


def test_fz_errors(identity_channel):
    t = minimal_stinespring(identity_channel)
    with pytest.raises(ShapeMismatch):
        fz_find_certificate(t, np.eye(2))
    with pytest.raises(NotPSD):
        fz_find_certificate(t, -np.eye(1))
    with pytest.raises(SingularCompression):
        fz_find_certificate(t, np.zeros((1, 1)))


def test_fz_unsupported_generic():
    rng = np.random.default_rng(6)
    phi = normal_map(generic_normal_subspace(rng, 2, 3), 2, 3)
    t = minimal_stinespring(phi)
    with pytest.raises(Unsupported):
        fz_find_certificate(t, np.eye(t.rep.coord_dim))


def test_fz_verify_roundtrip_and_tamper():
    rng = np.random.default_rng(7)
    t = minimal_stinespring(nested_chain_instance(rng, 3, 2).map)
    cert = fz_find_certificate(t, random_commutant_pd(rng, t.rep))
    assert fz_verify_certificate(t, cert)[0]
    s = cert.S.copy()
    i, j = np.unravel_index(np.argmax(np.abs(s)), s.shape)
    s[i, j] = 0.0
    bad = FZCertificate(cert.D, s, cert.Z, cert.U, cert.D_sqrt)
    assert not fz_verify_certificate(t, bad)[0]


def test_fz_verify_trivial_certificate(trace_channel, half_half_state):
    for phi in (trace_channel, half_half_state):
        t = minimal_stinespring(phi)
        m = t.rep.coord_dim
        cert = FZCertificate(np.eye(m), np.eye(m), np.eye(phi.out_dim))
        assert fz_verify_certificate(t, cert)[0]


# proper combinations

def test_proper_combination_trivial(trace_channel):
    t = minimal_stinespring(trace_channel)
    comb = proper_combination_build(t, np.eye(t.rep.coord_dim), 0.5)
    for c in comb.coefficients:
        assert np.allclose(c, np.sqrt(0.5) * np.eye(2))
    for phi_i in comb.components:
        for g in trace_channel.algebra.matrix_units():
            assert np.allclose(phi_i.apply(g), trace_channel.apply(g))


def test_proper_combination_random_d_identity(identity_channel):
    t = minimal_stinespring(identity_channel)
    comb = proper_combination_build(t, np.array([[3.7]]))
    assert comb.residuals["reassembly"] <= 1e-9


def test_proper_combination_alpha_range(identity_channel):
    t = minimal_stinespring(identity_channel)
    with pytest.raises(AlphaOutOfRange):
        proper_combination_build(t, np.array([[2.0]]), 0.5)
    with pytest.raises(AlphaOutOfRange):
        proper_combination_build(t, np.array([[2.0]]), 0.0)


def test_proper_combination_components_equivalent_on_cstar_extreme():
    rng = np.random.default_rng(13)
    inst = nested_chain_instance(rng, 4, 2, multiplicities=True)
    phi = inst.map
    t = minimal_stinespring(phi)
    comb = proper_combination_build(t, random_commutant_pd(rng, t.rep))
    for phi_i in comb.components:
        eq = unitarily_equivalent(phi, phi_i)
        assert eq.kind == "Yes", eq.reason


def test_zhou_half():
    phi = spec_of(3, e(3, 0), e(3, 0, 1)).assemble()
    t = zhou_compression(phi, scale(phi, 0.5))
    assert np.allclose(t, np.sqrt(0.5) * np.eye(3))


def test_zhou_nested_random():
    rng = np.random.default_rng(14)
    phi = nested_chain_instance(rng, 4, 3).map
    tr = minimal_stinespring(phi)
    d0 = random_commutant_pd(rng, tr.rep)
    d0 = d0 / (1.01 * np.linalg.norm(d0, 2))
    psi = dominated_map(phi, d0, tr)
    t = zhou_compression(phi, psi, triple=tr)
    for g in phi.algebra.matrix_units():
        assert fro(t.conj().T @ phi.apply(g) @ t - psi.apply(g)) <= 1e-8


def test_zhou_singular_psi(identity_channel):
    with pytest.raises(SingularCompression):
        zhou_compression(identity_channel, scale(identity_channel, 0.0))
    with pytest.raises(NotDominated):
        zhou_compression(identity_channel, scale(identity_channel, 2.0))


# multiplicity-free implication

def test_multiplicity_free_diagonal():
    alg = FiniteCStarAlgebra((1, 1, 1))
    one = np.ones((1, 1))
    phi = PureSumSpec(alg, [Summand(a, one) for a in range(3)]).assemble()
    rep = multiplicity_free_extreme_check(phi)
    assert rep.is_true and rep.data == {"cstar": Verdict.TRUE, "extreme": Verdict.TRUE}


def test_multiplicity_free_pure_state():
    alg = FiniteCStarAlgebra((1, 1))
    phi = ucp_from_kraus(alg, 1, [[np.ones((1, 1))], []])
    rep = multiplicity_free_extreme_check(phi)
    assert rep.is_true and rep.data["cstar"] is Verdict.TRUE


def test_multiplicity_free_vacuous(half_half_state):
    rep = multiplicity_free_extreme_check(half_half_state)
    assert rep.is_true and rep.notes == "implication vacuous"


def test_multiplicity_free_precondition(trace_channel):
    with pytest.raises(NotMultiplicityFree):
        multiplicity_free_extreme_check(trace_channel)


# invariance properties

@given(seeds)
def test_tensor_invariance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    inst = (nested_chain_instance(rng, n, 2) if rng.random() < 0.5
            else incomparable_instance(rng, n, 2))
    pure = pure_compression(rng, int(rng.integers(1, 3)))
    assert cstar_extreme(inst.map).verdict is cstar_extreme(tensor(inst.map, pure)).verdict


@given(seeds)
def test_direct_sum_over_blocks(seed):
    from cstar.instances import disjoint_blocks_instance
    rng = np.random.default_rng(seed)
    dims = [int(x) for x in rng.integers(1, 4, size=int(rng.integers(2, 4)))]
    parts, whole, truth = disjoint_blocks_instance(rng, dims)
    verdicts = [cstar_extreme(p.assemble()).verdict for p in parts]
    assert all(v is not Verdict.UNSUPPORTED for v in verdicts)
    assert cstar_extreme(whole.assemble()).is_true == all(v is Verdict.TRUE for v in verdicts) == truth


def test_projective_measurement_surrogate():
    """Projection-valued maps on C^n send sum lambda_k e_k to a unitary and decide True."""
    rng = np.random.default_rng(15)
    for _ in range(10):
        n, d = int(rng.integers(2, 5)), int(rng.integers(2, 6))
        u = random_unitary(rng, d)
        labels = np.concatenate([np.arange(n), rng.integers(0, n, size=max(0, d - n))])[:d]
        alg = FiniteCStarAlgebra((1,) * n)
        kraus = [[u[:, [c]].conj().T for c in np.flatnonzero(labels == k)] for k in range(n)]
        phi = ucp_from_kraus(alg, d, kraus)
        lam = np.exp(2j * np.pi * np.arange(n) / n)
        img = phi.apply(alg.element([np.array([[z]]) for z in lam]))
        assert np.allclose(img.conj().T @ img, np.eye(d))
        assert cstar_extreme(phi).is_true
