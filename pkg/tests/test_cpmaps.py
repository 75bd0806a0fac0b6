import numpy as np
import pytest
from hypothesis import given, strategies as st

from cstar.algebras import FiniteCStarAlgebra, commutant_basis
from cstar.cpmaps import (apply, choi_blocks, compress, conjugate, direct_sum, is_disjoint, is_pure,
                          minimal_stinespring, rn_derivative, scale, tensor, ucp_from_kraus,
                          unitarily_equivalent)
from cstar.errors import AlgebraMismatch, InputError, NotDominated, NotIsometry, NotUnital, ShapeMismatch
from cstar.instances import (dominated_map, pure_compression, random_commutant_contraction,
                             random_isometry, random_ucp, random_unitary)
from cstar.numerics import fro

from conftest import unit

seeds = st.integers(0, 2**32 - 1)


def random_algebra(rng, max_blocks=3, max_dim=3):
    return FiniteCStarAlgebra(tuple(int(x) for x in rng.integers(1, max_dim + 1,
                                                                 size=int(rng.integers(1, max_blocks + 1)))))


def random_map(rng, alg=None, out_dim=None, max_rank=2):
    alg = alg or random_algebra(rng)
    out_dim = out_dim or int(rng.integers(1, min(3, max_rank * sum(alg.block_dims)) + 1))
    while True:
        ranks = [int(r) for r in rng.integers(0, max_rank + 1, size=alg.num_blocks)]
        rows = sum(n * r for n, r in zip(alg.block_dims, ranks))
        if rows >= out_dim:
            return random_ucp(rng, alg, out_dim, ranks)


# construction and evaluation

def test_identity_channel(identity_channel):
    x = np.array([[1, 2], [3j, 4]])
    assert np.allclose(identity_channel.apply(identity_channel.algebra.element([x])), x)


def test_trace_channel_on_matrix_units(trace_channel, m2):
    for i in range(2):
        for j in range(2):
            expected = (0.5 * np.eye(2)) if i == j else np.zeros((2, 2))
            assert np.allclose(trace_channel.apply(m2.matrix_unit(0, i, j)), expected)


def test_trace_channel_diag(trace_channel, m2):
    assert np.allclose(apply(trace_channel, m2.element([np.diag([1.0, 3.0])])), 2 * np.eye(2))


def test_half_half_state(half_half_state):
    alg = half_half_state.algebra
    assert np.allclose(half_half_state.apply(alg.element([[[2.0]], [[4.0]]])), [[3.0]])


def test_unitality_enforced(m2):
    with pytest.raises(NotUnital):
        ucp_from_kraus(m2, 2, [[2 * np.eye(2)]])
    with pytest.raises(ShapeMismatch):
        ucp_from_kraus(m2, 2, [[np.eye(3)]])
    ucp_from_kraus(m2, 2, [[2 * np.eye(2)]], cp=True)


def test_apply_algebra_mismatch(identity_channel):
    with pytest.raises(AlgebraMismatch):
        identity_channel.apply(FiniteCStarAlgebra((3,)).unit())


@given(seeds)
def test_unit_maps_to_identity(seed):
    rng = np.random.default_rng(seed)
    phi = random_map(rng)
    assert np.allclose(phi.image_of_unit(), np.eye(phi.out_dim))


def test_choi_blocks_psd(trace_channel):
    (c,) = choi_blocks(trace_channel)
    assert np.linalg.eigvalsh(c).min() >= -1e-12
    assert np.allclose(c, np.eye(4) / 2)


# Stinespring

def test_stinespring_identity(identity_channel):
    t = minimal_stinespring(identity_channel)
    assert t.multiplicities == (1,) and np.allclose(np.abs(t.V), np.eye(2))


def test_stinespring_trace_channel(trace_channel):
    t = minimal_stinespring(trace_channel)
    # the four Kraus operators are linearly independent (Choi rank 4)
    assert t.multiplicities == (4,) and t.rep.total_dim == 8
    assert np.linalg.matrix_rank(choi_blocks(trace_channel)[0]) == 4
    assert np.allclose(t.V.conj().T @ t.V, np.eye(2))


def test_stinespring_half_half(half_half_state):
    t = minimal_stinespring(half_half_state)
    assert t.multiplicities == (1, 1)
    assert np.allclose(np.abs(t.V), np.sqrt(0.5) * np.ones((2, 1)))


@given(seeds)
def test_stinespring_reproduces_map(seed):
    rng = np.random.default_rng(seed)
    base = random_map(rng)
    # split the first Kraus operator of each block into two equal halves: same map, dependent family
    kraus = [[ops[0] / np.sqrt(2), ops[0] / np.sqrt(2), *ops[1:]] if ops else [] for ops in base.kraus]
    phi = ucp_from_kraus(base.algebra, base.out_dim, kraus)
    t = minimal_stinespring(phi)
    assert t.multiplicities == tuple(int(np.linalg.matrix_rank(c, tol=1e-9)) for c in choi_blocks(base))
    assert np.allclose(t.V.conj().T @ t.V, np.eye(phi.out_dim))
    for g in phi.algebra.matrix_units():
        assert fro(t.compress(t.rep(g)) - phi.apply(g)) <= 1e-8
    assert sum(t.multiplicities) == sum(np.linalg.matrix_rank(c, tol=1e-9) for c in choi_blocks(phi))


def test_stinespring_merges_dependent_kraus(m2):
    u = random_unitary(np.random.default_rng(1), 2)
    phi = ucp_from_kraus(m2, 2, [[u / np.sqrt(2), u / np.sqrt(2)]])
    assert minimal_stinespring(phi).multiplicities == (1,)


# Radon-Nikodym

def test_rn_half(identity_channel):
    res = rn_derivative(identity_channel, scale(identity_channel, 0.5))
    assert np.allclose(res.D, 0.5 * np.eye(1))


def test_rn_self_is_identity(trace_channel):
    res = rn_derivative(trace_channel, trace_channel)
    assert fro(res.D - np.eye(4)) <= 1e-8


def test_rn_not_dominated(trace_channel):
    with pytest.raises(NotDominated) as info:
        rn_derivative(trace_channel, scale(trace_channel, 2.0))
    assert info.value.result.max_eig == pytest.approx(2.0)


def test_rn_outside_commutant(identity_channel, m2):
    # a map that is not of the form V* D pi(.) V
    psi = ucp_from_kraus(m2, 2, [[unit(2, 0, 1)]], cp=True)
    with pytest.raises(NotDominated):
        rn_derivative(identity_channel, psi)


@given(seeds)
def test_rn_roundtrip_property(seed):
    rng = np.random.default_rng(seed)
    phi = random_map(rng)
    t = minimal_stinespring(phi)
    d0 = random_commutant_contraction(rng, t.rep)
    res = rn_derivative(phi, dominated_map(phi, d0, t), triple=t)
    assert fro(res.D - d0) <= 1e-8
    assert res.uniqueness_gap <= 1e-8


# constructions

def test_direct_sum_doubles(identity_channel):
    s = direct_sum([identity_channel, identity_channel])
    assert s.out_dim == 4
    with pytest.raises(InputError):
        direct_sum([])


def test_direct_sum_blockwise():
    rng = np.random.default_rng(2)
    p1, p2 = pure_compression(rng, 3, 1), pure_compression(rng, 3, 2)
    s = direct_sum([p1, p2])
    x = s.algebra.element([rng.normal(size=(3, 3))])
    out = s.apply(x)
    assert np.allclose(out[:1, :1], p1.apply(x)) and np.allclose(out[1:, 1:], p2.apply(x))
    assert np.allclose(out[:1, 1:], 0)


def test_direct_sum_algebra_mismatch(identity_channel, half_half_state):
    with pytest.raises(AlgebraMismatch):
        direct_sum([identity_channel, half_half_state])


def test_tensor_with_trivial(identity_channel):
    one = ucp_from_kraus(FiniteCStarAlgebra((1,)), 1, [[np.ones((1, 1))]])
    t = tensor(identity_channel, one)
    x = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.allclose(t.apply(t.algebra.element([x])), x)


def test_tensor_identities(identity_channel):
    t = tensor(identity_channel, identity_channel)
    assert t.algebra.block_dims == (4,)
    x = np.arange(16.0).reshape(4, 4)
    assert np.allclose(t.apply(t.algebra.element([x])), x)


def test_tensor_pure_is_pure():
    rng = np.random.default_rng(7)
    assert is_pure(tensor(pure_compression(rng, 3), pure_compression(rng, 2)))


def test_compress_examples(identity_channel, trace_channel, m2):
    assert np.allclose(compress(identity_channel, np.eye(2)).kraus[0][0], np.eye(2))
    state = compress(identity_channel, np.eye(2)[:, :1])
    assert np.allclose(state.apply(m2.element([np.diag([5.0, 7.0])])), [[5.0]])
    w = random_isometry(np.random.default_rng(4), 2, 1)
    c = compress(trace_channel, w)
    assert np.allclose(c.image_of_unit(), np.eye(1))
    with pytest.raises(NotIsometry):
        compress(identity_channel, 2 * np.eye(2))


@given(seeds, st.integers(1, 4))
def test_compress_pure_is_pure(seed, n):
    rng = np.random.default_rng(seed)
    phi = pure_compression(rng, n)
    w = random_isometry(rng, phi.out_dim, int(rng.integers(1, phi.out_dim + 1)))
    assert is_pure(compress(phi, w))


def test_is_pure_examples(identity_channel, trace_channel, half_half_state):
    assert is_pure(identity_channel)
    assert not is_pure(trace_channel)
    assert not is_pure(half_half_state)


# disjointness and equivalence

def test_disjoint_examples(identity_channel):
    alg = FiniteCStarAlgebra((1, 1))
    a = ucp_from_kraus(alg, 1, [[np.ones((1, 1))], []])
    b = ucp_from_kraus(alg, 1, [[], [np.ones((1, 1))]])
    assert is_disjoint(a, b)
    c1 = compress(identity_channel, np.eye(2)[:, :1])
    c2 = compress(identity_channel, np.eye(2)[:, 1:])
    assert not is_disjoint(c1, c2)


def test_disjoint_cross_check_random_pairs():
    """Structural and intertwiner answers are compared inside is_disjoint (it raises on disagreement)."""
    rng = np.random.default_rng(11)
    alg = FiniteCStarAlgebra((1, 1, 2))
    seen = set()
    for _ in range(100):
        a, b = random_map(rng, alg, 1, max_rank=1), random_map(rng, alg, 1, max_rank=1)
        seen.add(is_disjoint(a, b))
    assert seen == {True, False}


def test_direct_sum_commutant_of_disjoint():
    alg = FiniteCStarAlgebra((2, 2))
    rng = np.random.default_rng(3)
    a = random_ucp(rng, alg, 1, [2, 0])
    b = random_ucp(rng, alg, 2, [0, 2])
    ta, tb, ts = (minimal_stinespring(m) for m in (a, b, direct_sum([a, b])))
    dims = [commutant_basis(t.rep).dim for t in (ta, tb, ts)]
    assert dims[2] == dims[0] + dims[1]


def test_equivalence_self(trace_channel):
    eq = unitarily_equivalent(trace_channel, trace_channel)
    assert eq.yes


@given(seeds)
def test_equivalence_roundtrip(seed):
    rng = np.random.default_rng(seed)
    phi = random_map(rng, out_dim=2)
    u0 = random_unitary(rng, 2)
    eq = unitarily_equivalent(phi, conjugate(phi, u0, cp=False))
    assert eq.kind in ("Yes", "Inconclusive")
    if eq.yes:
        for g in phi.algebra.matrix_units():
            assert fro(eq.U.conj().T @ phi.apply(g) @ eq.U - conjugate(phi, u0).apply(g)) <= 1e-8


def test_equivalence_roundtrip_generic_is_yes():
    rng = np.random.default_rng(12)
    alg = FiniteCStarAlgebra((3,))
    phi = random_ucp(rng, alg, 3, [2])
    u0 = random_unitary(rng, 3)
    eq = unitarily_equivalent(phi, conjugate(phi, u0, cp=False))
    assert eq.yes and eq.residual <= 1e-8


def test_equivalence_no_on_spectra(m2):
    w1 = np.eye(2)[:, :1]
    a = ucp_from_kraus(m2, 1, [[w1]])
    b = ucp_from_kraus(m2, 1, [[np.sqrt(0.5) * np.eye(2)[:, :1], np.sqrt(0.5) * np.eye(2)[:, 1:]]])
    assert unitarily_equivalent(a, b).kind == "No"
