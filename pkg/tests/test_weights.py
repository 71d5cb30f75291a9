import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realgit.errors import ZeroDirection
from realgit.liealg import ReductiveSetup, ad, expm_hermitian, make_direction
from realgit.kempfness import kn_value
from realgit.spaces import act, configuration, gradient_map, linear, make_point, mu_beta, projective
from realgit.stability import random_point
from realgit.weights import (
    NotProper,
    Proper,
    lambda_t,
    max_weight,
    moment_weight_margin,
    properness_estimate,
    sphere_directions,
    sweep_min_weight,
    transport_weight,
    weight_value,
)

SL2 = ReductiveSetup(2, "SL_R")
BETA = np.diag([1.0, -1.0])
P1 = projective(SL2)
R2 = linear(SL2)


def pt(X, v):
    return make_point(X, v)


def test_lambda_t_examples():
    x = pt(R2, [0, 1])
    for t in (0.0, 0.5, 2.0):
        assert lambda_t(R2, x, BETA, t) == pytest.approx(-0.5 * np.exp(-2 * t), abs=1e-15)
    assert lambda_t(P1, pt(P1, [0, 1]), BETA, 3.0) == -1.0
    y = pt(P1, [1, 2])
    assert lambda_t(P1, y, BETA, 0.0) == pytest.approx((1 - 4) / 5)


def test_max_weight_examples():
    assert max_weight(P1, pt(P1, [1, 1]), BETA).value == 1.0
    assert max_weight(P1, pt(P1, [1, 1]), BETA, method="numeric").value == pytest.approx(1.0, abs=1e-12)
    assert max_weight(P1, pt(P1, [0, 1]), BETA).value == -1.0
    assert max_weight(R2, pt(R2, [1, 0]), BETA).value == np.inf
    assert max_weight(R2, pt(R2, [1, 0]), BETA, method="numeric").value == np.inf
    w = max_weight(R2, pt(R2, [0, 1]), BETA)
    assert w.value == 0.0 and np.allclose(w.limit_point.reps, 0)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_numeric_matches_closed_form(seed):
    G = ReductiveSetup(3, "SL_R")
    X = projective(G)
    rng = np.random.default_rng(seed)
    x = random_point(X, rng)
    # gapped spectrum keeps exp(-40 gap) below the tolerance
    vals = np.sort(rng.uniform(-1, 1, 3))
    while np.min(np.diff(vals)) < 0.25:
        vals = np.sort(rng.uniform(-1, 1, 3))
    k = G.random_k(rng)
    beta = k @ np.diag(vals - vals.mean()) @ k.T
    assert max_weight(X, x, beta, "numeric").value == pytest.approx(max_weight(X, x, beta).value, abs=1e-6)


def test_weight_is_positively_homogeneous():
    x = pt(P1, [1, 3])
    assert weight_value(P1, x, 2.5 * BETA) == pytest.approx(2.5 * weight_value(P1, x, BETA))


def test_transport_weight_examples():
    x = pt(P1, [1, 1])
    assert transport_weight(P1, x, np.eye(2), BETA).value == pytest.approx(max_weight(P1, x, BETA).value, abs=1e-14)
    g = np.array([[1.0, 0.0], [1.0, 1.0]])
    direct = max_weight(P1, act(P1, g, x), BETA).value
    assert transport_weight(P1, x, g, BETA).value == pytest.approx(direct) == pytest.approx(1.0)
    c, s = np.cos(0.4), np.sin(0.4)
    k = np.array([[c, -s], [s, c]])
    assert transport_weight(P1, x, k, BETA).value == pytest.approx(max_weight(P1, x, ad(k.T, BETA)).value)


@given(st.integers(0, 10_000), st.sampled_from(["SL_R", "SL_C"]))
@settings(max_examples=40, deadline=None)
def test_transport_equivariance(seed, kind):
    G = ReductiveSetup(3, kind)
    X = configuration(G, [1.0, 2.0])
    rng = np.random.default_rng(seed)
    x = random_point(X, rng)
    g = G.random_element(rng, scale=1.0)
    beta = G.random_p(rng)
    assert transport_weight(X, x, g, beta).value == pytest.approx(max_weight(X, act(X, g, x), beta).value, abs=1e-6)


def test_moment_weight_sharp_case():
    x = pt(P1, [0, 1])
    lhs, rhs = moment_weight_margin(P1, x, BETA, [np.eye(2)])
    assert lhs == pytest.approx(1 / np.sqrt(2)) and rhs == pytest.approx(1 / np.sqrt(2))
    rng = np.random.default_rng(0)
    _lhs, rhs = moment_weight_margin(P1, x, BETA, [SL2.random_element(rng) for _ in range(100)])
    assert rhs >= 1 / np.sqrt(2) - 1e-9
    lhs, rhs = moment_weight_margin(P1, pt(P1, [1, 1]), BETA, [np.eye(2)])
    assert lhs < 0 <= rhs
    with pytest.raises(ZeroDirection):
        moment_weight_margin(P1, x, np.zeros((2, 2)), [np.eye(2)])


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_moment_weight_inequality(seed):
    G = ReductiveSetup(3, "SL_C")
    X = projective(G)
    rng = np.random.default_rng(seed)
    x = random_point(X, rng)
    beta = G.random_p(rng)
    lhs, rhs = moment_weight_margin(X, x, beta, [G.random_element(rng) for _ in range(10)])
    assert lhs <= rhs + 1e-9


def test_properness_on_subspace():
    # [1:1] has weight 1 along +-diag(1,-1); the span of that direction is proper.
    x = pt(P1, [1, 1])
    res = properness_estimate(P1, x, [BETA / np.sqrt(2)], count=0)
    assert isinstance(res, Proper)
    assert res.min_weight == pytest.approx(1 / np.sqrt(2))
    for r in (0.5, 3.0, 10.0):
        phi = kn_value(P1, x, expm_hermitian(r * BETA / np.sqrt(2)))
        assert r <= res.c1 * phi + res.c2 + 1e-9


def test_properness_full_p_of_sl2_fails_at_one_one():
    # Off-diagonal -[[0,1],[1,0]] pushes [1:1] to its bottom eigenline.
    res = properness_estimate(P1, pt(P1, [1, 1]), SL2.p_basis)
    assert isinstance(res, NotProper)
    assert res.weight == pytest.approx(-1 / np.sqrt(2), abs=1e-9)


def test_properness_not_proper_examples():
    res = properness_estimate(R2, pt(R2, [0, 1]), SL2.p_basis)
    assert isinstance(res, NotProper) and res.weight == pytest.approx(0.0, abs=1e-12)
    res = properness_estimate(P1, pt(P1, [0, 1]), SL2.p_basis)
    assert isinstance(res, NotProper) and res.weight < 0


def test_sweep_finds_bottom_of_projective_line():
    lam, arg = sweep_min_weight(P1, pt(P1, [0.6, 0.8]))
    assert lam == pytest.approx(-1 / np.sqrt(2), abs=1e-9)
    assert np.linalg.norm(arg) == pytest.approx(1.0)


def test_sphere_directions_unit_and_deterministic():
    a = sphere_directions(4, 50)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)
    assert np.array_equal(a, sphere_directions(4, 50))


def test_limit_point_weight_equals_max_weight():
    G = ReductiveSetup(3, "SL_C")
    X = projective(G)
    rng = np.random.default_rng(4)
    x = random_point(X, rng)
    beta = G.random_p(rng)
    w = max_weight(X, x, beta)
    d = make_direction(G, beta)
    assert mu_beta(X, w.limit_point, d) == pytest.approx(w.value, abs=1e-12)
    assert np.isfinite(gradient_map(X, w.limit_point).norm)


@given(st.integers(0, 10_000), st.sampled_from(["SL_R", "SL_C"]))
@settings(max_examples=40, deadline=None)
def test_transport_when_gx_sits_low_in_the_flag(seed, kind):
    # g x is the bottom eigenline of beta, so lambda(g x, beta) is the least eigenvalue.
    G = ReductiveSetup(3, kind)
    X = projective(G)
    rng = np.random.default_rng(seed)
    g = G.random_element(rng, scale=1.0)
    d = make_direction(G, G.random_p(rng))
    x = make_point(X, np.linalg.solve(g, d.eigenvectors[:, -1]))
    assert transport_weight(X, x, g, d).value == pytest.approx(d.eigenvalues[-1], abs=1e-6)
