import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realgit.errors import InvalidPoint, NotTangent
from realgit.liealg import ReductiveSetup, expm_hermitian
from realgit.spaces import (
    ModelSpace,
    act,
    configuration,
    distance,
    field_norm,
    fundamental_field,
    gradient_map,
    linear,
    make_point,
    metric_eval,
    mu_beta,
    norm_square,
    pairing,
    projective,
    retract,
    stabilizer_dim,
    tangent_basis,
)
from realgit.stability import random_point

SL2 = ReductiveSetup(2, "SL_R")
BETA = np.diag([1.0, -1.0])
P1 = projective(SL2)
R2 = linear(SL2)


def test_gradient_map_examples():
    assert np.allclose(gradient_map(P1, make_point(P1, [1, 0])).matrix, np.diag([0.5, -0.5]))
    m = gradient_map(P1, make_point(P1, [1, 1])).matrix
    assert np.allclose(m, [[0, 0.5], [0.5, 0]])
    gl = linear(ReductiveSetup(2, "GL_R"))
    assert np.allclose(gradient_map(gl, make_point(gl, [1, 0])).matrix, 0.5 * np.diag([1.0, 0.0]))


def test_fundamental_field_examples():
    assert np.allclose(fundamental_field(P1, BETA, make_point(P1, [1, 0])), 0)
    assert np.allclose(fundamental_field(R2, BETA, make_point(R2, [0, 1])), [[0, -1]])


def test_fundamental_field_norm_matches_derivative():
    # mu^beta(exp(s beta)[1:1]) = tanh(2 s), derivative 2 at s = 0.
    x = make_point(P1, [1, 1])
    v = fundamental_field(P1, BETA, x)
    assert metric_eval(P1, x, v, v) == pytest.approx(2.0, abs=1e-14)
    h = 1e-6
    fd = (mu_beta(P1, act(P1, expm_hermitian(h * BETA), x), BETA)
          - mu_beta(P1, act(P1, expm_hermitian(-h * BETA), x), BETA)) / (2 * h)
    assert fd == pytest.approx(2.0, abs=1e-8)


def test_metric_eval_examples():
    x = make_point(R2, [0.3, 2.0])
    assert metric_eval(R2, x, np.zeros(2), np.zeros(2)) == 0.0
    assert metric_eval(R2, x, [1, 0], [1, 0]) == 1.0
    with pytest.raises(NotTangent):
        metric_eval(P1, make_point(P1, [1, 0]), np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))


@pytest.mark.parametrize("model", ["projective", "linear", "configuration"])
@pytest.mark.parametrize("kind", ["SL_R", "SL_C", "GL_C"])
def test_gradient_identity(model, kind):
    # d mu^beta(x)[u] = g(beta_X(x), u) on random data.
    G = ReductiveSetup(3, kind)
    X = {"projective": projective, "linear": linear}.get(model, lambda s: configuration(s, [1.0, 2.0]))(G)
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = random_point(X, rng)
        beta = G.random_p(rng)
        bx = fundamental_field(X, beta, x)
        for u in tangent_basis(X, x):
            h = 1e-5
            fd = (mu_beta(X, retract(X, x, u, h), beta) - mu_beta(X, retract(X, x, u, -h), beta)) / (2 * h)
            assert fd == pytest.approx(metric_eval(X, x, bx, u), abs=1e-7)


@given(st.integers(0, 10_000), st.sampled_from(["SL_R", "SL_C", "GL_R", "GL_C", "DIAG_TORUS_C"]))
@settings(max_examples=30, deadline=None)
def test_k_equivariance(seed, kind):
    G = ReductiveSetup(3, kind)
    X = projective(G)
    rng = np.random.default_rng(seed)
    x = random_point(X, rng)
    k = G.random_k(rng)
    lhs = gradient_map(X, act(X, k, x)).matrix
    rhs = k @ gradient_map(X, x).matrix @ np.conj(k).T
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_pairing_agrees_with_mu_beta(seed):
    G = ReductiveSetup(3, "SL_C")
    X = configuration(G, [1.0, 0.5, 2.0])
    rng = np.random.default_rng(seed)
    x = random_point(X, rng)
    beta = G.random_p(rng)
    assert pairing(X, x, beta) == pytest.approx(mu_beta(X, x, beta), abs=1e-12)


def test_tangent_basis_orthonormal():
    G = ReductiveSetup(3, "SL_C")
    X = configuration(G, [1.0, 3.0])
    x = random_point(X, np.random.default_rng(1))
    basis = tangent_basis(X, x)
    assert len(basis) == X.tangent_dim
    gram = np.array([[metric_eval(X, x, a, b) for b in basis] for a in basis])
    assert np.allclose(gram, np.eye(len(basis)), atol=1e-12)


def test_norm_square_and_stabilizer():
    x = make_point(P1, [1, 0])
    assert norm_square(P1, x) == pytest.approx(0.25)
    assert stabilizer_dim(P1, x) == 1
    assert stabilizer_dim(P1, make_point(P1, [1, 1])) == 1
    assert stabilizer_dim(R2, make_point(R2, [0, 0])) == 2
    assert stabilizer_dim(R2, make_point(R2, [1, 2])) == 0


def test_distance_projective_ignores_scale():
    a = make_point(P1, [1, 1])
    b = make_point(P1, [-2, -2])
    assert distance(P1, a, b) < 1e-15
    assert field_norm(P1, a, np.zeros((1, 2))) == 0.0


def test_point_validation():
    with pytest.raises(InvalidPoint):
        make_point(P1, [0, 0])
    with pytest.raises(InvalidPoint):
        make_point(P1, [1, 2, 3])
    with pytest.raises(InvalidPoint):
        make_point(P1, [1j, 0])
    with pytest.raises(ValueError):
        ModelSpace("projective", ReductiveSetup(2, "SL_C"), "real")
    with pytest.raises(ValueError):
        configuration(SL2, [1.0, -1.0])
