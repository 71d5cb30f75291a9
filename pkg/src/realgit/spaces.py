"""Catalog model spaces with their gradient maps and Riemannian metrics.

Normalization: the projective pairing is ``<beta v, v> / <v, v>`` and the
linear one ``1/2 <beta v, v>``.  The metric is then forced by requiring
grad mu^beta = beta_X: Euclidean on linear models and twice the round
metric on projective ones (``2 Re<v, w> / <x, x>`` on horizontal vectors).

Points are stored as an (m, n) array of representatives, m = 1 for linear
and projective models and m = number of factors for configurations.
Tangent vectors use the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidPoint, NotTangent
from .liealg import Direction, ReductiveSetup, bform, inner, make_direction, project_p

MODEL_KINDS = ("linear", "projective", "configuration")
PROJECTIVE_METRIC_SCALE = 2.0


@dataclass(frozen=True)
class ModelSpace:
    kind: str
    setup: ReductiveSetup
    field: str = "real"
    weights: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.field not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        if self.field == "real" and not self.setup.is_real:
            raise ValueError(f"{self.setup.kind} does not preserve a real model")
        w = tuple(float(x) for x in self.weights)
        if not w or any(x <= 0 for x in w):
            raise ValueError("weights must be strictly positive")
        if self.kind != "configuration" and len(w) != 1:
            raise ValueError("only configuration models carry several weights")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.setup.n

    @property
    def factors(self) -> int:
        return len(self.weights)

    @property
    def dtype(self):
        return float if self.field == "real" else complex

    @property
    def projective(self) -> bool:
        return self.kind != "linear"

    @property
    def tangent_dim(self) -> int:
        per = self.n - 1 if self.projective else self.n
        return self.factors * per * (1 if self.field == "real" else 2)

    @property
    def metric_scales(self) -> np.ndarray:
        c = PROJECTIVE_METRIC_SCALE if self.projective else 1.0
        return c * np.asarray(self.weights)


@dataclass(frozen=True, eq=False)
class ModelPoint:
    reps: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return self.reps[0]


@dataclass(frozen=True, eq=False)
class GradientValue:
    matrix: np.ndarray
    norm: float


def linear(setup: ReductiveSetup, field: str | None = None) -> ModelSpace:
    return ModelSpace("linear", setup, field or ("real" if setup.is_real else "complex"))


def projective(setup: ReductiveSetup, field: str | None = None) -> ModelSpace:
    return ModelSpace("projective", setup, field or ("real" if setup.is_real else "complex"))


def configuration(setup: ReductiveSetup, weights: Sequence[float], field: str | None = None) -> ModelSpace:
    return ModelSpace("configuration", setup, field or ("real" if setup.is_real else "complex"), tuple(weights))


def make_point(X: ModelSpace, data) -> ModelPoint:
    """Validate representatives; projective ones are normalized to unit length."""
    if isinstance(data, ModelPoint):
        data = data.reps
    arr = np.asarray(data)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape != (X.factors, X.n):
        raise InvalidPoint(f"expected {X.factors} vector(s) of length {X.n}, got shape {arr.shape}")
    if X.field == "real":
        if np.iscomplexobj(arr) and np.max(np.abs(arr.imag)) > 1e-12:
            raise InvalidPoint("real model requires real representatives")
        arr = np.real(arr).astype(float)
    else:
        arr = arr.astype(complex)
    if not np.all(np.isfinite(arr)):
        raise InvalidPoint("non-finite representative")
    if X.projective:
        norms = np.linalg.norm(arr, axis=1)
        if np.any(norms == 0):
            raise InvalidPoint("projective representative is zero")
        arr = arr / norms[:, None]
    return ModelPoint(arr)


def embed_complex(X: ModelSpace, x: ModelPoint) -> tuple[ModelSpace, ModelPoint]:
    """The inclusion of a real model into its complexification."""
    Xc = ModelSpace(X.kind, X.setup, "complex", X.weights)
    return Xc, ModelPoint(x.reps.astype(complex))


def act(X: ModelSpace, g: np.ndarray, x: ModelPoint) -> ModelPoint:
    reps = x.reps @ np.asarray(g).T
    if X.field == "real":
        reps = np.real(reps)
    if X.projective:
        reps = reps / np.linalg.norm(reps, axis=1)[:, None]
    return ModelPoint(reps)


def _ambient_moment(X: ModelSpace, x: ModelPoint) -> np.ndarray:
    # sum_j w_j v v^* / |v|^2 (projective), 1/2 v v^* (linear)
    v = x.reps
    if X.projective:
        sq = np.sum(np.abs(v) ** 2, axis=1)
        return np.einsum("j,ja,jb->ab", np.asarray(X.weights) / sq, v, np.conj(v))
    return 0.5 * np.outer(v[0], np.conj(v[0]))


def gradient_map(X: ModelSpace, x: ModelPoint) -> GradientValue:
    """mu_p(x): orthogonal projection of the ambient moment onto p."""
    m = project_p(X.setup, _ambient_moment(X, x))
    return GradientValue(m, float(np.sqrt(max(bform(m, m), 0.0))))


def mu_beta(X: ModelSpace, x: ModelPoint, beta) -> float:
    """mu_p^beta(x) = <mu_p(x), beta>, evaluated from the defining formula."""
    b = beta.matrix if isinstance(beta, Direction) else np.asarray(beta)
    v = x.reps
    q = np.real(np.einsum("ja,ab,jb->j", np.conj(v), b, v))
    if X.projective:
        return float(np.sum(np.asarray(X.weights) * q / np.sum(np.abs(v) ** 2, axis=1)))
    return float(0.5 * q[0])


def fundamental_field(X: ModelSpace, beta, x: ModelPoint) -> np.ndarray:
    """beta_X(x) as an (m, n) tangent array."""
    b = beta.matrix if isinstance(beta, Direction) else np.asarray(beta)
    v = x.reps
    bv = v @ b.T
    if X.projective:
        coef = np.einsum("ja,ja->j", np.conj(v), bv) / np.sum(np.abs(v) ** 2, axis=1)
        bv = bv - coef[:, None] * v
    return np.real(bv) if X.field == "real" else bv


def metric_eval(X: ModelSpace, x: ModelPoint, v: np.ndarray, w: np.ndarray, check: bool = True) -> float:
    v = np.asarray(v).reshape(X.factors, X.n)
    w = np.asarray(w).reshape(X.factors, X.n)
    if X.projective:
        reps = x.reps
        sq = np.sum(np.abs(reps) ** 2, axis=1)
        if check:
            for u in (v, w):
                along = np.abs(np.einsum("ja,ja->j", np.conj(reps), u)) / np.sqrt(sq)
                if np.any(along > 1e-8):
                    raise NotTangent(f"tangent vector has component {along.max():.2e} along the point")
        per = np.real(np.einsum("ja,ja->j", np.conj(v), w)) / sq
    else:
        per = np.real(np.einsum("ja,ja->j", np.conj(v), w))
    return float(np.sum(X.metric_scales * per))


def tangent_basis(X: ModelSpace, x: ModelPoint) -> list[np.ndarray]:
    """Metric-orthonormal real basis of T_x X, each element an (m, n) array."""
    out = []
    scales = X.metric_scales
    for j in range(X.factors):
        if X.projective:
            v = x.reps[j] / np.linalg.norm(x.reps[j])
            # Orthonormal complement of v: full QR of [v | I].
            q, _ = np.linalg.qr(np.column_stack([v, np.eye(X.n, dtype=v.dtype)]))
            comp = q[:, 1 : X.n]
        else:
            comp = np.eye(X.n)
        units = [1.0] if X.field == "real" else [1.0, 1j]
        for c in range(comp.shape[1]):
            for u in units:
                t = np.zeros((X.factors, X.n), dtype=X.dtype)
                t[j] = u * comp[:, c] / np.sqrt(scales[j])
                out.append(t)
    return out


def retract(X: ModelSpace, x: ModelPoint, u: np.ndarray, s: float = 1.0) -> ModelPoint:
    """The curve s -> [x + s u]; velocity u at s = 0."""
    reps = x.reps + s * np.asarray(u).reshape(x.reps.shape)
    if X.projective:
        reps = reps / np.linalg.norm(reps, axis=1)[:, None]
    return ModelPoint(reps)


def distance(X: ModelSpace, x: ModelPoint, y: ModelPoint) -> float:
    """Chordal distance; projective factors are compared through their projectors."""
    if not X.projective:
        return float(np.linalg.norm(x.reps - y.reps))
    total = 0.0
    for a, b in zip(x.reps, y.reps):
        pa = np.outer(a, np.conj(a)) / np.vdot(a, a).real
        pb = np.outer(b, np.conj(b)) / np.vdot(b, b).real
        total += np.linalg.norm(pa - pb) ** 2
    return float(np.sqrt(total))


def field_norm(X: ModelSpace, x: ModelPoint, v: np.ndarray) -> float:
    return float(np.sqrt(max(metric_eval(X, x, v, v, check=False), 0.0)))


def norm_square(X: ModelSpace, x: ModelPoint) -> float:
    """f(x) = 1/2 B(mu_p(x), mu_p(x))."""
    m = gradient_map(X, x).matrix
    return 0.5 * bform(m, m)


def stabilizer_dim(X: ModelSpace, x: ModelPoint, tol: float = 1e-8) -> int:
    """dim p_x: kernel dimension of xi -> xi_X(x) over the p basis."""
    # Rows weighted so the Euclidean norm of a column is the metric norm of xi_X(x).
    w = np.sqrt(X.metric_scales / np.sum(np.abs(x.reps) ** 2, axis=1)) if X.projective else np.ones(X.factors)
    cols = []
    for b in X.setup.p_basis:
        f = np.asarray(fundamental_field(X, b, x), dtype=complex) * w[:, None]
        f = f.ravel()
        cols.append(np.concatenate([f.real, f.imag]))
    m = np.array(cols).T
    s = np.linalg.svd(m, compute_uv=False)
    s = np.concatenate([s, np.zeros(max(0, len(cols) - len(s)))])
    return int(np.sum(s < tol))


def pairing(X: ModelSpace, x: ModelPoint, beta) -> float:
    """<mu_p(x), beta> through the gradient matrix (cross-check of mu_beta)."""
    b = beta.matrix if isinstance(beta, Direction) else np.asarray(beta)
    return inner(gradient_map(X, x).matrix, b)


def as_direction(X: ModelSpace, beta) -> Direction:
    return make_direction(X.setup, beta)
