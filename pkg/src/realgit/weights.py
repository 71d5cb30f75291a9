"""Maximal weights lambda(x, beta): finite-time values, limits, transport along
G, the moment-weight margin and linear properness on subspaces of p."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm as _normal, qmc

from .errors import Overflow, ZeroDirection
from .flows import SUPPORT_THRESHOLD, energy, flow_at, flow_limit
from .liealg import ReductiveSetup, ad, expm_hermitian, inner, make_direction, parabolic_split, project_p
from .spaces import ModelPoint, ModelSpace, act, gradient_map, mu_beta

NUMERIC_T = 40.0
DEFAULT_SWEEP = 2000
ZERO_WEIGHT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MaximalWeight:
    value: float
    method: str
    limit_point: ModelPoint | None
    energy_value: float
    t_reached: float

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.value))


def lambda_t(X: ModelSpace, x: ModelPoint, beta, t: float) -> float:
    """lambda(x, beta, t) = <mu_p(exp(t beta) x), beta>."""
    d = make_direction(X.setup, beta)
    return mu_beta(X, flow_at(X, x, d, t), d)


def weight_value(X: ModelSpace, x: ModelPoint, beta) -> float:
    """Closed-form maximal weight: top eigenvalue on the support, summed over factors."""
    d = make_direction(X.setup, beta)
    a = d.eigenvalues
    c = d.coords(x.reps)
    scale_a = max(1.0, float(np.max(np.abs(a))))
    total = 0.0
    for j in range(X.factors):
        supp = np.abs(c[j]) > SUPPORT_THRESHOLD * max(np.linalg.norm(x.reps[j]), 1e-300)
        if not np.any(supp):
            continue
        top = float(np.max(a[supp]))
        if X.projective:
            total += X.weights[j] * top
        elif top > 1e-12 * scale_a:
            return np.inf
    return total


def max_weight(X: ModelSpace, x: ModelPoint, beta, method: str = "closed", t: float = NUMERIC_T,
               with_energy: bool = True) -> MaximalWeight:
    """lambda(x, beta) = lim_{t -> inf} lambda(x, beta, t), +inf allowed.

    ``method="closed"`` uses the support rule; ``method="numeric"`` evaluates
    the flow at time ``t``.
    """
    d = make_direction(X.setup, beta)
    if method == "closed":
        value = weight_value(X, x, d)
        t_reached = np.inf
    elif method == "numeric":
        try:
            late = lambda_t(X, x, d, t)
            mid = lambda_t(X, x, d, t / 2)
            # Linear weights are 0 or unbounded; unbounded growth shows up as a jump.
            value = np.inf if (not X.projective and late - mid > 1.0) else late
        except Overflow:
            value = np.inf
        t_reached = t
    else:
        raise ValueError(f"unknown method {method!r}")
    limit = flow_limit(X, x, d) if np.isfinite(value) else None
    e = energy(X, x, d) if with_energy else np.nan
    return MaximalWeight(float(value), "ClosedForm" if method == "closed" else "NumericFlow", limit, e, t_reached)


def transport_weight(X: ModelSpace, x: ModelPoint, g: np.ndarray, beta) -> MaximalWeight:
    """lambda(g x, beta) computed at x.

    Writing g^{-1} = k h with h in G^{beta-} gives g = h^{-1} k^{-1}; the
    G^{beta-} factor leaves lambda(., beta) unchanged and the K factor moves
    beta by Ad(k).
    """
    g = X.setup.check_member(g)
    d = make_direction(X.setup, beta)
    k, _h = parabolic_split(X.setup, np.linalg.inv(g), d)
    moved = project_p(X.setup, ad(k, d.matrix))
    return max_weight(X, x, moved, with_energy=False)


def moment_weight_margin(X: ModelSpace, x: ModelPoint, beta, g_samples: Sequence[np.ndarray]) -> tuple[float, float]:
    """(-lambda(x, beta)/|beta|, min_g |mu_p(g x)|)."""
    d = make_direction(X.setup, beta)
    if d.norm == 0:
        raise ZeroDirection("moment-weight margin needs beta != 0")
    lam = weight_value(X, x, d)
    lhs = -lam / d.norm if np.isfinite(lam) else -np.inf
    rhs = min(gradient_map(X, act(X, g, x)).norm for g in g_samples)
    return float(lhs), float(rhs)


# -- direction sets for "for all beta" sweeps


def sphere_directions(dim: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform unit vectors in R^dim (Halton mapped through
    the normal quantile), plus the coordinate axes with both signs."""
    eye = np.eye(dim)
    axes = np.vstack([eye, -eye])
    if dim == 1 or count <= 0:
        return axes
    pts = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    z = _normal.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    z = z / np.linalg.norm(z, axis=1)[:, None]
    return np.vstack([axes, z])


def aligned_directions(X: ModelSpace, x: ModelPoint) -> list[np.ndarray]:
    """Directions adapted to the data: each support vector pushed to the
    bottom (and top) of a two-block flag, and -mu_p(x)."""
    setup = X.setup
    n = X.n
    out = []
    cands = []
    for v in x.reps:
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        q = v / nv
        cands.append(np.eye(n) / n - np.outer(q, np.conj(q)))
    cands.append(-gradient_map(X, x).matrix)
    for c in cands:
        b = project_p(setup, c)
        nb = np.linalg.norm(b)
        if nb > 1e-12:
            out.append(b / nb)
            out.append(-b / nb)
    return out


def subspace_directions(setup: ReductiveSetup, basis: Sequence[np.ndarray], count: int) -> list[np.ndarray]:
    basis = [np.asarray(b) for b in basis]
    if not basis:
        return []
    coeffs = sphere_directions(len(basis), count)
    out = []
    for c in coeffs:
        m = sum(ci * b for ci, b in zip(c, basis))
        out.append(np.real(m) if setup.is_real else m)
    return out


def _project_to_span(basis: Sequence[np.ndarray], m: np.ndarray) -> np.ndarray:
    return sum(inner(m, b) * b for b in basis)


def sweep_min_weight(X: ModelSpace, x: ModelPoint, basis: Sequence[np.ndarray] | None = None,
                     count: int = DEFAULT_SWEEP) -> tuple[float, np.ndarray]:
    """Minimum of the closed-form weight over unit directions of span(basis)
    (default all of p), including projections of the data-aligned candidates."""
    setup = X.setup
    basis = list(setup.p_basis) if basis is None else [np.asarray(b) for b in basis]
    if not basis:
        return np.inf, np.zeros((X.n, X.n))
    dirs = subspace_directions(setup, basis, count)
    for c in aligned_directions(X, x):
        pc = _project_to_span(basis, c)
        npc = np.linalg.norm(pc)
        if npc > 1e-9:
            dirs.append(np.real(pc / npc) if setup.is_real else pc / npc)
    best, arg = np.inf, dirs[0]
    for b in dirs:
        lam = weight_value(X, x, b)
        if lam < best:
            best, arg = lam, b
    return float(best), arg


@dataclass(frozen=True, eq=False)
class Proper:
    c1: float
    c2: float
    min_weight: float


@dataclass(frozen=True, eq=False)
class NotProper:
    witness: np.ndarray
    weight: float


def properness_estimate(X: ModelSpace, x: ModelPoint, basis: Sequence[np.ndarray],
                        probe_radii: Sequence[float] = (0.5, 1.0, 2.0, 4.0, 8.0),
                        count: int = DEFAULT_SWEEP, zero_tol: float = ZERO_WEIGHT_TOL):
    """Linear properness of Phi(x, exp(.)) on span(basis).

    NotProper when some unit direction has lambda <= zero_tol; otherwise
    Proper with constants verified on the probes, |v| <= c1 Phi(x, exp v) + c2.
    """
    from .kempfness import kn_value

    basis = [np.asarray(b) for b in basis]
    gram = np.array([[np.real(np.vdot(b, c)) for c in basis] for b in basis])
    if basis and np.max(np.abs(gram - np.eye(len(basis)))) > 1e-8:
        raise ValueError("subspace basis must be orthonormal")
    lam, arg = sweep_min_weight(X, x, basis, count)
    if lam <= zero_tol:
        return NotProper(arg, lam)
    c1 = 2.0 / lam
    c2 = 0.0
    for b in subspace_directions(X.setup, basis, min(count, 200)):
        for r in probe_radii:
            phi = kn_value(X, x, expm_hermitian(r * b))
            c2 = max(c2, r - c1 * phi)
    return Proper(c1, c2, lam)
