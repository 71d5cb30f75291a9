import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realgit.errors import NonMember, NotInParabolic
from realgit.liealg import (
    GROUP_KINDS,
    ReductiveSetup,
    bform,
    cartan_decompose,
    centralizer_basis,
    expm_hermitian,
    inner,
    make_direction,
    parabolic_data,
    parabolic_split,
    pi_beta,
    project_p,
)

SL2 = ReductiveSetup(2, "SL_R")
BETA = np.diag([1.0, -1.0])


def rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_cartan_positive_definite():
    k, xi = cartan_decompose(SL2, np.diag([2.0, 0.5]))
    assert np.allclose(k, np.eye(2), atol=1e-12)
    assert np.allclose(xi, np.diag([np.log(2), -np.log(2)]), atol=1e-12)


def test_cartan_rotation():
    g = rot(np.pi / 4)
    k, xi = cartan_decompose(SL2, g)
    assert np.allclose(k, g, atol=1e-12)
    assert np.allclose(xi, 0, atol=1e-12)


def test_cartan_shear_against_svd_oracle():
    g = np.array([[1.0, 1.0], [0.0, 1.0]])
    k, xi = cartan_decompose(SL2, g)
    assert np.linalg.norm(k @ expm_hermitian(xi) - g) < 1e-10
    # exp(2 xi) = g^T g is the independent oracle.
    assert np.allclose(expm_hermitian(2 * xi), g.T @ g, atol=1e-10)
    assert np.allclose(k.T @ k, np.eye(2), atol=1e-12)


def test_cartan_rejects_non_member():
    with pytest.raises(NonMember):
        cartan_decompose(SL2, np.diag([2.0, 2.0]))


def test_bform_values():
    i2 = 1j * np.eye(2)
    assert bform(i2, i2) == pytest.approx(-2.0)
    assert bform(BETA, BETA) == pytest.approx(2.0)
    u = np.array([[1j, 2.0], [-2.0, -1j]])
    assert bform(u, BETA) == pytest.approx(0.0, abs=1e-15)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_bform_vanishes_between_u_and_iu(seed):
    G = ReductiveSetup(3, "GL_C")
    rng = np.random.default_rng(seed)
    assert abs(bform(G.random_k_algebra(rng), G.random_p(rng))) < 1e-12


def test_project_p_examples():
    assert np.allclose(project_p(SL2, BETA), BETA)
    assert np.allclose(project_p(SL2, np.array([[0.0, 1.0], [-1.0, 0.0]])), 0)
    assert np.allclose(project_p(SL2, np.eye(2)), 0)


def test_project_p_idempotent_and_orthogonal():
    rng = np.random.default_rng(0)
    for kind in GROUP_KINDS:
        G = ReductiveSetup(3, kind)
        m = rng.standard_normal((3, 3)) + (0 if G.is_real else 1j * rng.standard_normal((3, 3)))
        p = project_p(G, m)
        assert np.allclose(project_p(G, p), p, atol=1e-12)
        for b in G.p_basis:
            assert abs(inner(m - p, b)) < 1e-12


def test_basis_dimensions():
    dims = {"GL_C": 9, "SL_C": 8, "GL_R": 6, "SL_R": 5, "DIAG_TORUS_R": 2, "DIAG_TORUS_C": 2}
    for kind, dim in dims.items():
        G = ReductiveSetup(3, kind)
        assert len(G.p_basis) == dim
        gram = np.array([[inner(a, b) for b in G.p_basis] for a in G.p_basis])
        assert np.allclose(gram, np.eye(dim), atol=1e-12)


def test_centralizer_examples():
    p, k = centralizer_basis(SL2, BETA)
    assert len(p) == 1 and len(k) == 0
    assert abs(abs(inner(p[0], BETA / np.sqrt(2))) - 1) < 1e-12
    p0, k0 = centralizer_basis(SL2, np.zeros((2, 2)))
    assert len(p0) == len(SL2.p_basis) and len(k0) == len(SL2.k_basis)


def test_centralizer_block_dimension():
    # Commutant of diag(1,1,-2) in traceless symmetric 3x3: symmetric 2x2 block
    # (3 dims) plus the (3,3) entry, minus the trace constraint.
    G = ReductiveSetup(3, "SL_R")
    p, k = centralizer_basis(G, np.diag([1.0, 1.0, -2.0]))
    assert len(p) == 3
    assert len(k) == 1


def test_parabolic_split_examples():
    g = np.array([[1.0, 0.0], [3.0, 1.0]])
    k, h = parabolic_split(SL2, g, BETA)
    assert np.allclose(k, np.eye(2), atol=1e-12) and np.allclose(h, g, atol=1e-12)
    r = rot(0.7)
    k, h = parabolic_split(SL2, r, BETA)
    assert np.allclose(k, r, atol=1e-12) and np.allclose(h, np.eye(2), atol=1e-12)


def test_parabolic_split_shear():
    g = np.array([[1.0, 1.0], [0.0, 1.0]])
    k, h = parabolic_split(SL2, g, BETA)
    assert np.linalg.norm(k @ h - g) < 1e-10
    assert np.allclose(k.T @ k, np.eye(2), atol=1e-12)
    assert abs(h[0, 1]) < 1e-12
    assert np.linalg.det(k) == pytest.approx(1.0)


@given(st.integers(0, 10_000), st.sampled_from(["SL_R", "SL_C", "GL_R", "GL_C"]))
@settings(max_examples=40, deadline=None)
def test_parabolic_split_property(seed, kind):
    G = ReductiveSetup(3, kind)
    rng = np.random.default_rng(seed)
    g = G.random_element(rng)
    beta = G.random_p(rng)
    k, h = parabolic_split(G, g, beta)
    assert np.linalg.norm(k @ h - g) < 1e-9
    assert np.allclose(np.conj(k).T @ k, np.eye(3), atol=1e-9)
    # h is in G^{beta-}: block upper part vanishes in beta's eigenbasis.
    data = parabolic_data(G, beta)
    v = data.direction.eigenvectors
    ht = np.conj(v).T @ h @ v
    assert np.max(np.abs(ht[data.upper_mask]), initial=0.0) < 1e-9 * max(1.0, np.linalg.norm(h))


def test_pi_beta_examples():
    assert np.allclose(pi_beta(SL2, np.array([[1.0, 1.0], [0.0, 1.0]]), BETA, +1), np.eye(2))
    blk = np.diag([2.0, 0.5])
    assert np.allclose(pi_beta(SL2, blk, BETA, +1), blk)
    with pytest.raises(NotInParabolic):
        pi_beta(SL2, np.array([[1.0, 0.0], [1.0, 1.0]]), BETA, +1)


def test_direction_sorted_and_exp():
    d = make_direction(SL2, np.diag([-1.0, 1.0]))
    assert list(d.eigenvalues) == [1.0, -1.0]
    assert np.allclose(d.exp(0.5), np.diag([np.exp(-0.5), np.exp(0.5)]))
    assert d.norm == pytest.approx(np.sqrt(2))


@given(st.integers(0, 10_000), st.sampled_from(GROUP_KINDS))
@settings(max_examples=40, deadline=None)
def test_random_elements_are_members(seed, kind):
    G = ReductiveSetup(3, kind)
    rng = np.random.default_rng(seed)
    G.check_member(G.random_element(rng))
    k = G.random_k(rng)
    G.check_member(k)
    assert np.allclose(np.conj(k).T @ k, np.eye(3), atol=1e-10)
