"""Kempf-Ness function Phi(x, g), its axioms as executable checks, and descent
on G/K towards zeros of the gradient map."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import BudgetExceeded
from .liealg import expm_hermitian, inner
from .spaces import ModelPoint, ModelSpace, act, gradient_map

ARMIJO = 1e-4
MAX_STEP_NORM = 5.0
RAY_THRESHOLD = 50.0
POST_TOL_FACTOR = 1e-3
POST_TOL_DISPLACEMENT = 1.0


def kn_value(X: ModelSpace, x: ModelPoint, g: np.ndarray) -> float:
    """Phi(x, g): 1/2 log(|gv|^2/|v|^2) per projective factor (weighted sum),
    1/4 (|gv|^2 - |v|^2) on linear models."""
    g = np.asarray(g)
    v = x.reps
    gv = v @ g.T
    if X.projective:
        num = np.sum(np.abs(gv) ** 2, axis=1)
        den = np.sum(np.abs(v) ** 2, axis=1)
        return float(0.5 * np.sum(np.asarray(X.weights) * np.log(num / den)))
    return float(0.25 * (np.sum(np.abs(gv) ** 2) - np.sum(np.abs(v) ** 2)))


def kn_exp_value(X: ModelSpace, y: ModelPoint, m: np.ndarray, r: float) -> float:
    """Phi(y, exp(r m)) for Hermitian m, accurate for small changes
    (expm1/log1p on the eigenvalues of m)."""
    vals, vecs = np.linalg.eigh(m)
    c = y.reps @ np.conj(vecs)
    delta = np.sum(np.expm1(2 * r * vals)[None, :] * np.abs(c) ** 2, axis=1)
    if X.projective:
        ratio = delta / np.sum(np.abs(c) ** 2, axis=1)
        return float(0.5 * np.sum(np.asarray(X.weights) * np.log1p(ratio)))
    return float(0.25 * delta[0])


def kn_cocycle_defect(X: ModelSpace, x: ModelPoint, g: np.ndarray, h: np.ndarray) -> float:
    """|Phi(x, hg) - Phi(x, g) - Phi(gx, h)|."""
    g, h = np.asarray(g), np.asarray(h)
    return abs(kn_value(X, x, h @ g) - kn_value(X, x, g) - kn_value(X, act(X, g, x), h))


def kn_k_invariance_defect(X: ModelSpace, x: ModelPoint, k: np.ndarray, g: np.ndarray) -> float:
    """|Phi(x, kg) - Phi(x, g)| for k in K."""
    return abs(kn_value(X, x, np.asarray(k) @ np.asarray(g)) - kn_value(X, x, g))


@dataclass(frozen=True)
class ConvexityScan:
    min_second_difference: float
    flat: bool


def kn_convexity_scan(X: ModelSpace, x: ModelPoint, v: np.ndarray, grid: Sequence[float]) -> ConvexityScan:
    """Minimum central second difference of t -> Phi(x, exp(t v)) on a uniform grid."""
    ts = np.asarray(grid, dtype=float)
    if ts.size < 3:
        raise ValueError("grid needs at least three points")
    h = ts[1] - ts[0]
    if h <= 0 or np.max(np.abs(np.diff(ts) - h)) > 1e-12 * max(1.0, abs(h)):
        raise ValueError("grid must be uniform and increasing")
    vals = np.array([kn_value(X, x, expm_hermitian(t * np.asarray(v))) for t in ts])
    second = (vals[2:] - 2 * vals[1:-1] + vals[:-2]) / h**2
    return ConvexityScan(float(np.min(second)), bool(np.max(np.abs(second)) < 1e-12))


@dataclass(frozen=True)
class KempfNessReport:
    value: float
    cocycle_defect: float
    k_invariance_defect: float
    min_second_difference: float


def kn_report(X: ModelSpace, x: ModelPoint, g, h, k, v, grid) -> KempfNessReport:
    return KempfNessReport(
        kn_value(X, x, g),
        kn_cocycle_defect(X, x, g, h),
        kn_k_invariance_defect(X, x, k, g),
        kn_convexity_scan(X, x, v, grid).min_second_difference,
    )


@dataclass(eq=False)
class DescentResult:
    """Outcome of descent on G/K.

    ``minimizer`` is g with ``point`` = g x; ``final_grad_norm`` is
    |mu_p(g x)| there.  ``direction`` is the normalized late displacement
    of the iterates for DivergentRay results; ``ray_samples`` keeps recent
    (g, mu_p(g x)) pairs from the moderate part of an escaping trajectory.
    """

    minimizer: np.ndarray
    point: ModelPoint
    final_grad_norm: float
    iterations: int
    status: str
    inf_grad_norm: float
    phi_value: float
    xi_norm: float
    direction: np.ndarray | None = None
    ray_samples: list = field(default_factory=list, repr=False)
    phi_history: list = field(default_factory=list, repr=False)


def _xi_norm(g: np.ndarray, ginv: np.ndarray) -> float:
    # |log of singular values|; small ones are read off the inverse for accuracy.
    s = np.linalg.svd(g, compute_uv=False)
    si = np.linalg.svd(ginv, compute_uv=False)[::-1]
    logs = np.where(s >= 1.0, np.log(np.maximum(s, 1e-300)), -np.log(np.maximum(si, 1e-300)))
    return float(np.sqrt(np.sum(logs**2)))


def cartan_direction(g: np.ndarray) -> np.ndarray | None:
    """Unit Hermitian direction of xi = 1/2 log(g^* g)."""
    _u, s, vh = np.linalg.svd(g)
    v = np.conj(vh).T
    xi = (v * np.log(s)) @ vh
    xi = 0.5 * (xi + np.conj(xi).T)
    nx = np.linalg.norm(xi)
    return xi / nx if nx > 0 else None


def _line_search(phi, s_prev: float, s_max: float, slope: float, speed: float):
    """Bracket a minimizer of phi(s) on (0, s_max] starting at s_prev, refine
    with a bounded scalar search and enforce the Armijo decrease
    phi(s) <= -ARMIJO * s * slope.  ``speed`` converts s into a step length.
    Returns (s, phi(s)) or (None, 0.0) when no decrease is found."""
    s = min(s_prev, s_max)
    f = phi(s)
    if f < 0:
        while 2 * s <= s_max:
            f2 = phi(2 * s)
            if f2 >= f:
                break
            s, f = 2 * s, f2
        hi = min(2 * s, s_max)
    else:
        while f >= 0:
            s *= 0.5
            if s * speed < 1e-14:
                return None, 0.0
            f = phi(s)
        hi = 2 * s
    lo = 0.5 * s
    if hi > lo:
        res = optimize.minimize_scalar(phi, bounds=(lo, hi), method="bounded", options={"xatol": 1e-3 * s})
        if res.fun < f:
            s, f = float(res.x), float(res.fun)
    while f > -ARMIJO * s * slope:
        s *= 0.5
        if s * speed < 1e-14:
            return None, 0.0
        f = phi(s)
    return s, f


def kn_descend(X: ModelSpace, x: ModelPoint, tol: float = 1e-8, budget: int = 5000, step0: float = 0.5,
               ray_threshold: float = RAY_THRESHOLD, subspace: Sequence[np.ndarray] | None = None) -> DescentResult:
    """Gradient descent of Phi(x, .) on G/K by left multiplication.

    Update g <- exp(-s m) g with m = mu_p(g x) (projected onto ``subspace``
    if given), step from a bracketed line search with Armijo acceptance.
    Stops with Converged when |m| < tol and the iterates stop moving,
    DivergentRay when |xi| exceeds ``ray_threshold`` or the iterates keep
    travelling after |m| has dropped below tol, Stalled on step collapse.
    """
    setup = X.setup
    n = X.n
    basis = None if subspace is None else [np.asarray(b) for b in subspace]
    dtype = setup.dtype
    g = np.eye(n, dtype=dtype)
    ginv = np.eye(n, dtype=dtype)
    y = x
    phi = 0.0

    def grad(pt):
        m = gradient_map(X, pt).matrix
        if basis is not None:
            m = sum((inner(m, b) * b for b in basis), np.zeros((n, n), dtype=dtype))
        return m, float(np.linalg.norm(m))

    m, gn = grad(y)
    inf_gn = gn
    s = step0
    it = 0
    phis = [phi]
    post_start: float | None = None
    post_disp = np.zeros((n, n), dtype=complex)
    late: list[np.ndarray] = []
    ray_samples = []
    status = None
    prev_move = None
    accel_len = 1.0

    def move(step, dphi):
        nonlocal g, ginv, y, phi, post_disp
        e = expm_hermitian(step)
        g = e @ g
        ginv = ginv @ expm_hermitian(-step)
        if setup.is_real:
            g, ginv = g.real, ginv.real
        y = act(X, e, y)
        phi += dphi
        if post_start is not None:
            post_disp = post_disp + step

    while True:
        if gn < tol:
            if post_start is None:
                post_start = gn
            if gn < tol * POST_TOL_FACTOR or gn == 0.0:
                disp = float(np.linalg.norm(post_disp))
                status = "DivergentRay" if disp > POST_TOL_DISPLACEMENT else "Converged"
                break
            if np.linalg.norm(post_disp) > POST_TOL_DISPLACEMENT:
                status = "DivergentRay"
                break
        if it >= budget:
            res = DescentResult(g, y, gn, it, "BudgetExceeded", inf_gn, phi, _xi_norm(g, ginv), None, ray_samples, phis)
            raise BudgetExceeded(f"descent used its budget of {budget} iterations (|mu_p| = {gn:.3e})", partial=res)
        it += 1
        s, dphi = _line_search(lambda r: kn_exp_value(X, y, m, -r), s, MAX_STEP_NORM / gn, gn * gn, gn)
        if s is None:
            status = "Stalled"
            break
        total = -s * m
        move(total, dphi)
        m, gn = grad(y)
        # Parallel-tangent step along the sum of this and the previous move;
        # it follows valleys that plain steepest descent zig-zags across.
        if prev_move is not None and gn > 0:
            d = total + prev_move
            nd = np.linalg.norm(d)
            if nd > 0:
                d = d / nd
                slope = -inner(m, d)
                if slope > 1e-3 * gn:
                    r, dphi2 = _line_search(lambda r: kn_exp_value(X, y, d, r), accel_len, MAX_STEP_NORM, slope, 1.0)
                    if r is not None:
                        accel_len = r
                        move(r * d, dphi2)
                        total = total + r * d
                        m, gn = grad(y)
        prev_move = total
        phis.append(phi)
        late.append(total)
        if len(late) > 50:
            late.pop(0)
        inf_gn = min(inf_gn, gn)
        xin = _xi_norm(g, ginv)
        if 3.0 < xin < 25.0:
            ray_samples.append((g.copy(), m.copy()))
            if len(ray_samples) > 12:
                ray_samples.pop(0)
        if xin > ray_threshold:
            status = "DivergentRay"
            break
    direction = None
    if status == "DivergentRay":
        src = post_disp if post_start is not None and np.linalg.norm(post_disp) > 0 else sum(late)
        nd = np.linalg.norm(src)
        if nd > 0:
            direction = src / nd
            direction = np.real(direction) if setup.is_real else direction
    return DescentResult(g, y, gn, it, status, inf_gn, phi, _xi_norm(g, ginv), direction, ray_samples, phis)
