"""One-parameter flows exp(t beta) x, their limits and energies, Hessians at
fixed points, and the negative gradient flow of f = 1/2 |mu_p|^2."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import BudgetExceeded, Diverged, NotFixed, NumericFailure, Overflow
from .liealg import Direction, ReductiveSetup, bform, make_direction
from .spaces import (
    ModelPoint,
    ModelSpace,
    field_norm,
    fundamental_field,
    gradient_map,
    metric_eval,
    mu_beta,
    norm_square,
    retract,
    tangent_basis,
)

SUPPORT_THRESHOLD = 1e-12
OVERFLOW_CAP = 1e150
STRATUM_CLUSTER_TOL = 1e-6


def _dir(X: ModelSpace, beta) -> Direction:
    return make_direction(X.setup, beta)


def _support(c: np.ndarray, scale: float) -> np.ndarray:
    return np.abs(c) > SUPPORT_THRESHOLD * max(scale, 1e-300)


def flow_at(X: ModelSpace, x: ModelPoint, beta, t: float) -> ModelPoint:
    """exp(t beta) x in closed form through beta's eigendecomposition."""
    d = _dir(X, beta)
    v = d.eigenvectors
    c = d.coords(x.reps)
    if X.projective:
        # Shift exponents per factor so the largest supported term is exp(0).
        expo = t * d.eigenvalues[None, :] + np.where(c != 0, 0.0, -np.inf)
        shift = np.max(expo, axis=1, keepdims=True)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        scaled = c * np.exp(t * d.eigenvalues[None, :] - shift)
        reps = scaled @ v.T
        reps = reps / np.linalg.norm(reps, axis=1)[:, None]
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            scaled = c * np.exp(t * d.eigenvalues[None, :])
        if not np.all(np.isfinite(scaled)) or np.max(np.abs(scaled), initial=0.0) > OVERFLOW_CAP:
            raise Overflow(f"linear flow exceeds {OVERFLOW_CAP:g} at t={t}")
        reps = scaled @ v.T
    if X.field == "real":
        reps = np.real(reps)
    return ModelPoint(reps)


def flow_limit(X: ModelSpace, x: ModelPoint, beta, tol: float = 1e-9) -> ModelPoint:
    """lim_{t -> +inf} exp(t beta) x, or Diverged.

    Projective factors collapse onto the top-eigenvalue-on-support eigenspace;
    linear points keep their kernel component when every supported weight is
    nonpositive.
    """
    d = _dir(X, beta)
    a = d.eigenvalues
    c = d.coords(x.reps)
    out = np.zeros_like(c)
    for j in range(X.factors):
        scale = np.linalg.norm(x.reps[j])
        supp = _support(c[j], scale)
        if not np.any(supp):
            continue
        top = np.max(a[supp])
        if not X.projective and top > 1e-12 * max(1.0, np.max(np.abs(a))):
            raise Diverged("linear flow has positive weight on the support")
        keep = supp & (np.abs(a - top) < 1e-9 * max(1.0, abs(top)))
        if not X.projective:
            keep = supp & (np.abs(a) <= 1e-12 * max(1.0, np.max(np.abs(a))))
        out[j, keep] = c[j, keep]
    reps = out @ d.eigenvectors.T
    if X.field == "real":
        reps = np.real(reps)
    if X.projective:
        reps = reps / np.linalg.norm(reps, axis=1)[:, None]
    y = ModelPoint(reps)
    speed = field_norm(X, y, fundamental_field(X, d, y))
    if speed > tol:
        raise NumericFailure(f"limit point is not fixed: |beta_X(y)| = {speed:.2e}")
    return y


def speed2(X: ModelSpace, x: ModelPoint, beta) -> float:
    """|beta_X(x)|^2 in the model metric."""
    f = fundamental_field(X, beta, x)
    return metric_eval(X, x, f, f, check=False)


def _linear_energy(X: ModelSpace, x: ModelPoint, d: Direction) -> float:
    c = d.coords(x.reps)[0]
    a = d.eigenvalues
    supp = _support(c, np.linalg.norm(x.reps[0]))
    if np.any(supp & (a > 1e-12 * max(1.0, np.max(np.abs(a))))):
        return np.inf
    neg = supp & (a < 0)
    # int_0^inf a^2 |c|^2 e^{2 a t} dt = |a| |c|^2 / 2 for a < 0
    return float(np.sum(np.abs(a[neg]) * np.abs(c[neg]) ** 2) / 2)


def energy(X: ModelSpace, x: ModelPoint, beta) -> float:
    """E(c_x^beta) = int_0^inf |beta_X(exp(t beta) x)|^2 dt (may be +inf).

    Linear models use the closed form; projective ones integrate the speed
    numerically so that lambda = lambda(., ., 0) + E stays a genuine check.
    """
    d = _dir(X, beta)
    if not X.projective:
        return _linear_energy(X, x, d)
    gaps = np.diff(-d.eigenvalues)
    gaps = gaps[gaps > 1e-9]
    if gaps.size == 0:
        return 0.0
    # Integrate in windows of a few decay lengths until the tail is negligible.
    window = 2.0 / max(float(np.min(gaps)), 1e-3)
    total, t0 = 0.0, 0.0
    f = lambda t: speed2(X, flow_at(X, x, d, t), d)
    for _ in range(400):
        part, _err = integrate.quad(f, t0, t0 + window, epsabs=1e-15, epsrel=1e-12, limit=200)
        total += part
        t0 += window
        if f(t0) * window < 1e-14 * max(1.0, total) and part < 1e-13 * max(1.0, total):
            break
    return float(total)


@dataclass(frozen=True, eq=False)
class HessianData:
    operator_matrix: np.ndarray
    signature: tuple[int, int, int]
    eigenvalues: np.ndarray
    basis: list = field(repr=False, default_factory=list)
    fd_hessian: np.ndarray | None = field(repr=False, default=None)


def _signature(vals: np.ndarray, tol: float) -> tuple[int, int, int]:
    return int(np.sum(vals < -tol)), int(np.sum(np.abs(vals) <= tol)), int(np.sum(vals > tol))


def hessian_fixed_point(X: ModelSpace, x: ModelPoint, beta, h: float = 1e-5, fixed_tol: float = 1e-10) -> HessianData:
    """d beta_X(x) at a zero of beta_X, by central differences in a metric-orthonormal frame.

    Also records the second-difference Hessian of mu^beta in the same frame
    (``fd_hessian``) for the D^2 mu^beta = d beta_X comparison.
    """
    d = _dir(X, beta)
    if np.sqrt(speed2(X, x, d)) >= fixed_tol:
        raise NotFixed(f"|beta_X(x)| = {np.sqrt(speed2(X, x, d)):.2e}")
    basis = tangent_basis(X, x)
    m = len(basis)
    op = np.zeros((m, m))
    for k, u in enumerate(basis):
        plus = fundamental_field(X, d, retract(X, x, u, h))
        minus = fundamental_field(X, d, retract(X, x, u, -h))
        diff = (plus - minus) / (2 * h)
        for l, w in enumerate(basis):
            op[l, k] = metric_eval(X, x, w, diff, check=False)
    op = 0.5 * (op + op.T)

    hh = 1e-4
    hess = np.zeros((m, m))
    for k in range(m):
        for l in range(k, m):
            def val(sk, sl):
                return mu_beta(X, retract(X, x, sk * basis[k] + sl * basis[l], hh), d)

            hess[k, l] = hess[l, k] = (val(1, 1) - val(1, -1) - val(-1, 1) + val(-1, -1)) / (4 * hh * hh)
    vals = np.linalg.eigvalsh(op) if m else np.zeros(0)
    return HessianData(op, _signature(vals, 1e-6 * max(1.0, d.norm)), vals, basis, hess)


@dataclass(eq=False)
class FlowTrajectory:
    times: list[float]
    points: list[ModelPoint]
    lambda_samples: list[float]
    speed2_samples: list[float]
    f_samples: list[float]
    status: str = "Converged"
    limit: ModelPoint | None = None


def sample_beta_flow(X: ModelSpace, x: ModelPoint, beta, times: Sequence[float]) -> FlowTrajectory:
    """Samples of t -> exp(t beta) x with lambda(x, beta, t), speed^2 and f."""
    d = _dir(X, beta)
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    traj = FlowTrajectory([], [], [], [], [], status="Converged")
    for t in times:
        try:
            p = flow_at(X, x, d, t)
        except Overflow:
            traj.status = "Diverged"
            break
        traj.times.append(t)
        traj.points.append(p)
        traj.lambda_samples.append(mu_beta(X, p, d))
        traj.speed2_samples.append(speed2(X, p, d))
        traj.f_samples.append(norm_square(X, p))
    if traj.status == "Converged":
        try:
            traj.limit = flow_limit(X, x, d)
        except Diverged:
            traj.status = "Diverged"
    return traj


def orbit_key(setup: ReductiveSetup, beta: np.ndarray, hermitian: bool = True) -> tuple[float, ...]:
    """Canonical invariant of the K-orbit of a critical value.

    Sorted eigenvalues for the groups with nontrivial Weyl action; for the
    diagonal tori (K acts trivially on p) the diagonal itself.
    """
    b = np.asarray(beta)
    if setup.is_diagonal:
        vals = np.real(np.diag(b))
    elif hermitian:
        vals = np.sort(np.linalg.eigvalsh(0.5 * (b + np.conj(b).T)))[::-1]
    else:
        vals = np.sort(np.real(np.linalg.eigvals(b)))[::-1]
    q = STRATUM_CLUSTER_TOL
    return tuple(float(np.round(v / q) * q) + 0.0 for v in vals)


@dataclass(frozen=True, eq=False)
class StratumLabel:
    critical_beta: np.ndarray
    f_value: float
    orbit_key: tuple[float, ...]


def stratum_label(setup: ReductiveSetup, beta: np.ndarray) -> StratumLabel:
    return StratumLabel(beta, 0.5 * bform(beta, beta), orbit_key(setup, beta))


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def grad_normsq(X: ModelSpace, x: ModelPoint) -> np.ndarray:
    """grad f(x) = (mu_p(x))_X (x)."""
    return fundamental_field(X, gradient_map(X, x).matrix, x)


def _normalize(X: ModelSpace, reps: np.ndarray) -> ModelPoint:
    if X.field == "real":
        reps = np.real(reps)
    if X.projective:
        reps = reps / np.linalg.norm(reps, axis=1)[:, None]
    return ModelPoint(reps)


def integrate_descent(X: ModelSpace, x: ModelPoint, field_fn, f_fn, tol: float, budget: int,
                      rtol: float = 1e-9, atol: float = 1e-12, h0: float = 0.05):
    """Adaptive DP5(4) integration of x' = field_fn(x) with renormalization and
    rejection of steps that increase f_fn.  ``field_fn`` returns (velocity, |grad|).
    Returns (times, points, f values, converged flag)."""
    t, h = 0.0, h0
    cur = x
    vel, gnorm = field_fn(cur)
    fcur = f_fn(cur)
    times, pts, fs = [t], [cur], [fcur]
    steps = 0
    while gnorm >= tol:
        if steps >= budget:
            return times, pts, fs, False
        steps += 1
        y0 = cur.reps
        ks = [vel]
        for i in range(1, 7):
            yi = y0 + h * sum(a * k for a, k in zip(_DP_A[i], ks))
            ks.append(field_fn(ModelPoint(yi))[0])
        y5 = y0 + h * sum(b * k for b, k in zip(_DP_B5, ks))
        y4 = y0 + h * sum(b * k for b, k in zip(_DP_B4, ks))
        err = np.max(np.abs(y5 - y4) / (atol + rtol * np.maximum(np.abs(y0), np.abs(y5))))
        if not np.isfinite(err):
            h *= 0.25
            continue
        cand = _normalize(X, y5)
        fnew = f_fn(cand)
        if err <= 1.0 and fnew <= fcur + 1e-12 * max(1.0, abs(fcur)):
            t += h
            cur, fcur = cand, fnew
            vel, gnorm = field_fn(cur)
            times.append(t)
            pts.append(cur)
            fs.append(fcur)
            h *= min(5.0, 0.9 * max(err, 1e-10) ** -0.2)
        else:
            h *= max(0.1, 0.9 * max(err, 1e-10) ** -0.25) if err > 1.0 else 0.5
        if h < 1e-14:
            raise NumericFailure("step size underflow in norm-square flow")
    return times, pts, fs, True


def neg_flow_normsq(X: ModelSpace, x: ModelPoint, tol: float = 1e-8, budget: int = 20000,
                    rtol: float = 1e-9) -> tuple[FlowTrajectory, ModelPoint, StratumLabel]:
    """Negative gradient flow of f = 1/2 |mu_p|^2 until |grad f| < tol."""

    def field_fn(p):
        g = grad_normsq(X, p)
        return -g, field_norm(X, p, g)

    times, pts, fs, ok = integrate_descent(X, x, field_fn, lambda p: norm_square(X, p), tol, budget, rtol=rtol)
    traj = FlowTrajectory(times, pts, [], [], fs, status="Converged" if ok else "BudgetExceeded")
    if not ok:
        raise BudgetExceeded(f"norm-square flow did not reach |grad f| < {tol} in {budget} steps", partial=traj)
    last = pts[-1]
    traj.limit = last
    return traj, last, stratum_label(X.setup, gradient_map(X, last).matrix)


def unstable_label(X: ModelSpace, x: ModelPoint, beta) -> tuple[float, float]:
    """Critical value c_i = mu^beta(phi_inf(x)) and its clustered component key."""
    d = _dir(X, beta)
    y = flow_limit(X, x, d)
    c = mu_beta(X, y, d)
    q = STRATUM_CLUSTER_TOL
    return c, float(np.round(c / q) * q) + 0.0
