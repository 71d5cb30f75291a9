"""Compatible matrix groups G = K exp(p) inside GL(n, C).

The catalog is closed: six kinds, each with explicit orthonormal bases of k,
p and a fixed maximal abelian a (diagonal matrices).  The scalar product on
u + iu is ``<X, Y> = Re tr(X Y^*)``, which makes multiplication by i an
isometry u -> iu.  The Ad-invariant form B reduces to ``Re tr(X Y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import NonMember, NotInParabolic, NumericFailure

GROUP_KINDS = ("GL_C", "SL_C", "GL_R", "SL_R", "DIAG_TORUS_R", "DIAG_TORUS_C")
REAL_KINDS = ("GL_R", "SL_R", "DIAG_TORUS_R")

EIG_CLUSTER_TOL = 1e-9
PARABOLIC_T = 20.0
PARABOLIC_GROWTH_CAP = 1e8


def inner(x: np.ndarray, y: np.ndarray) -> float:
    """Re tr(x y^*)."""
    return float(np.real(np.vdot(y, x)))


def bform(x: np.ndarray, y: np.ndarray) -> float:
    """B(X1 + iX2, Y1 + iY2) = -<iX1, iY1> + <iX2, iY2>.

    Splitting into anti-Hermitian and Hermitian parts, the cross terms are
    purely imaginary, so B collapses to ``Re tr(X Y)``.
    """
    return float(np.real(np.sum(np.asarray(x) * np.asarray(y).T)))


def theta(x: np.ndarray) -> np.ndarray:
    """Cartan involution on the algebra: X -> -X^*."""
    return -np.conj(np.asarray(x)).T


def theta_group(g: np.ndarray) -> np.ndarray:
    """Cartan involution on the group: g -> (g^*)^{-1}."""
    return np.linalg.inv(np.conj(np.asarray(g)).T)


def herm(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + np.conj(x).T)


def ad(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Ad(g) X = g X g^{-1}."""
    return g @ x @ np.linalg.inv(g)


def _traceless_diagonals(n: int) -> list[np.ndarray]:
    # Orthonormal basis of traceless real diagonals: (1,-1,0..)/sqrt2, (1,1,-2,0..)/sqrt6, ...
    out = []
    for m in range(1, n):
        d = np.zeros(n)
        d[:m] = 1.0
        d[m] = -float(m)
        out.append(np.diag(d / np.linalg.norm(d)))
    return out


def _symmetric_offdiag(n: int) -> list[np.ndarray]:
    out = []
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n))
            e[j, k] = e[k, j] = 1 / np.sqrt(2)
            out.append(e)
    return out


def _antisymmetric(n: int) -> list[np.ndarray]:
    out = []
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n))
            e[j, k] = 1 / np.sqrt(2)
            e[k, j] = -1 / np.sqrt(2)
            out.append(e)
    return out


def _hermitian_basis(n: int, traceless: bool) -> list[np.ndarray]:
    if traceless:
        diag = _traceless_diagonals(n)
    else:
        diag = [np.diag(np.eye(n)[j]) for j in range(n)]
    out = [d.astype(complex) for d in diag]
    out += [s.astype(complex) for s in _symmetric_offdiag(n)]
    out += [1j * a for a in _antisymmetric(n)]
    return out


@dataclass(frozen=True)
class ReductiveSetup:
    """Cartan data for one catalog group of n x n matrices."""

    n: int
    kind: str

    def __post_init__(self):
        if self.kind not in GROUP_KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}; expected one of {GROUP_KINDS}")
        if self.n < 1 or (self.kind.startswith(("SL", "DIAG")) and self.n < 2):
            raise ValueError(f"n={self.n} too small for {self.kind}")

    @property
    def is_real(self) -> bool:
        return self.kind in REAL_KINDS

    @property
    def is_diagonal(self) -> bool:
        return self.kind.startswith("DIAG")

    @property
    def is_special(self) -> bool:
        # DIAG tori are the maximal tori of the SL kinds, hence det 1.
        return self.kind.startswith(("SL", "DIAG"))

    @property
    def dtype(self):
        return float if self.is_real else complex

    @cached_property
    def p_basis(self) -> tuple[np.ndarray, ...]:
        n = self.n
        if self.kind == "GL_C":
            return tuple(_hermitian_basis(n, traceless=False))
        if self.kind == "SL_C":
            return tuple(_hermitian_basis(n, traceless=True))
        if self.kind == "GL_R":
            return tuple([np.diag(np.eye(n)[j]) for j in range(n)] + _symmetric_offdiag(n))
        if self.kind == "SL_R":
            return tuple(_traceless_diagonals(n) + _symmetric_offdiag(n))
        return tuple(_traceless_diagonals(n))

    @cached_property
    def k_basis(self) -> tuple[np.ndarray, ...]:
        n = self.n
        if self.kind in ("GL_C", "SL_C"):
            return tuple(1j * b for b in self.p_basis)
        if self.kind in ("GL_R", "SL_R"):
            return tuple(_antisymmetric(n))
        if self.kind == "DIAG_TORUS_C":
            return tuple(1j * b.astype(complex) for b in self.p_basis)
        return ()

    @cached_property
    def a_basis(self) -> tuple[np.ndarray, ...]:
        if self.kind in ("GL_C", "GL_R"):
            return tuple(np.diag(np.eye(self.n)[j]) for j in range(self.n))
        return tuple(_traceless_diagonals(self.n))

    @cached_property
    def _p_stack(self) -> np.ndarray:
        return np.array(self.p_basis)

    @property
    def dim_p(self) -> int:
        return len(self.p_basis)

    @property
    def dim_a(self) -> int:
        return len(self.a_basis)

    def p_coords(self, xi: np.ndarray) -> np.ndarray:
        """Coefficients of the orthogonal projection of xi onto p."""
        xi = np.asarray(xi)
        return np.real(np.einsum("kij,ij->k", np.conj(self._p_stack), xi))

    def from_p_coords(self, c: Sequence[float]) -> np.ndarray:
        m = np.einsum("k,kij->ij", np.asarray(c, dtype=float), self._p_stack)
        return np.real(m) if self.is_real else m

    def in_p_residual(self, xi: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(xi) - project_p(self, xi)))

    def check_member(self, g: np.ndarray) -> np.ndarray:
        """Validate g as an element of G; returns it as an array."""
        g = np.asarray(g)
        if g.shape != (self.n, self.n):
            raise NonMember(f"expected {self.n}x{self.n} matrix, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NonMember("non-finite entries")
        if self.is_real and np.iscomplexobj(g):
            if np.max(np.abs(g.imag)) > 1e-12:
                raise NonMember(f"{self.kind} requires real entries")
            g = g.real
        if self.is_diagonal and np.max(np.abs(g - np.diag(np.diag(g)))) > 1e-12:
            raise NonMember(f"{self.kind} requires a diagonal matrix")
        s = np.linalg.svd(g, compute_uv=False)
        if s[-1] <= 0 or s[0] / s[-1] > 1e14:
            raise NonMember("matrix is singular or too ill-conditioned")
        if self.is_special and abs(np.linalg.det(g) - 1) > 1e-10:
            raise NonMember(f"{self.kind} requires det = 1 (got {np.linalg.det(g)})")
        return g

    # -- random sampling used by tests and the verify suite

    def random_p(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        return self.from_p_coords(scale * rng.standard_normal(self.dim_p))

    def random_k_algebra(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        if not self.k_basis:
            return np.zeros((self.n, self.n), dtype=self.dtype)
        c = scale * rng.standard_normal(len(self.k_basis))
        m = sum(ci * b for ci, b in zip(c, self.k_basis))
        return np.real(m) if self.is_real else m

    def random_k(self, rng: np.random.Generator) -> np.ndarray:
        from scipy.linalg import expm

        k = expm(self.random_k_algebra(rng, scale=2.0))
        return np.real(k) if self.is_real else k

    def random_element(self, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
        return self.random_k(rng) @ expm_hermitian(self.random_p(rng, scale))


def project_p(setup: ReductiveSetup, xi: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto p: sum over the p basis of <xi, b> b."""
    return setup.from_p_coords(setup.p_coords(xi))


def _eigh_sorted(h: np.ndarray, real: bool) -> tuple[np.ndarray, np.ndarray]:
    """Eigendata with eigenvalues descending and deterministic eigenspace bases.

    Diagonal input keeps the standard basis exactly.  Repeated eigenvalues
    get their eigenspace re-orthonormalized by projecting e_1, e_2, ... in
    order (first-pivot Gram-Schmidt), so block structure is reproducible.
    """
    n = h.shape[0]
    if np.max(np.abs(h - np.diag(np.diag(h)))) == 0.0:
        vals = np.real(np.diag(h)).copy()
        order = np.argsort(-vals, kind="stable")
        vecs = np.eye(n, dtype=float if real else complex)[:, order]
        return vals[order], vecs
    vals, vecs = np.linalg.eigh(h)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    out = np.zeros_like(vecs)
    i = 0
    while i < n:
        j = i + 1
        while j < n and vals[i] - vals[j] < EIG_CLUSTER_TOL * max(1.0, abs(vals[i])):
            j += 1
        block = vecs[:, i:j]
        proj = block @ np.conj(block).T
        chosen: list[np.ndarray] = []
        for e in np.eye(n):
            w = proj @ e
            for c in chosen:
                w = w - np.vdot(c, w) * c
            nw = np.linalg.norm(w)
            if nw > 1e-6:
                chosen.append(w / nw)
            if len(chosen) == j - i:
                break
        out[:, i:j] = np.array(chosen).T
        i = j
    return vals, out


@dataclass(frozen=True, eq=False)
class Direction:
    """An element beta of p with cached eigendata (eigenvalues descending)."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def exp(self, t: float) -> np.ndarray:
        v = self.eigenvectors
        return (v * np.exp(t * self.eigenvalues)) @ np.conj(v).T

    def coords(self, vec: np.ndarray) -> np.ndarray:
        """Coordinates of vectors (last axis) in the eigenbasis."""
        return np.asarray(vec) @ np.conj(self.eigenvectors)

    def scaled(self, c: float) -> "Direction":
        if c >= 0:
            return Direction(c * self.matrix, c * self.eigenvalues, self.eigenvectors)
        return Direction(c * self.matrix, (c * self.eigenvalues)[::-1].copy(), self.eigenvectors[:, ::-1].copy())


def make_direction(setup: ReductiveSetup, beta, tol: float = 1e-10) -> Direction:
    """Validate beta as an element of p and cache its eigendata."""
    if isinstance(beta, Direction):
        return beta
    b = np.asarray(beta, dtype=complex)
    if b.shape != (setup.n, setup.n):
        raise ValueError(f"direction must be {setup.n}x{setup.n}, got {b.shape}")
    scale = max(1.0, float(np.max(np.abs(b))))
    if np.max(np.abs(b - np.conj(b).T)) > tol * scale:
        raise ValueError("direction is not Hermitian")
    if setup.in_p_residual(b) > tol * scale:
        raise ValueError(f"direction does not lie in p for {setup.kind}")
    b = herm(b)
    if setup.is_real:
        b = b.real
    vals, vecs = _eigh_sorted(b, setup.is_real)
    return Direction(b, vals, vecs)


def expm_hermitian(h: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h)
    out = (vecs * np.exp(vals)) @ np.conj(vecs).T
    return np.real(out) if not np.iscomplexobj(h) else out


def cartan_decompose(setup: ReductiveSetup, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """g = k exp(xi) with k in K and xi in p (polar decomposition)."""
    g = setup.check_member(g)
    try:
        u, s, vh = np.linalg.svd(g)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"polar factorization failed: {exc}") from exc
    k = u @ vh
    v = np.conj(vh).T
    xi = (v * np.log(s)) @ vh
    xi = herm(xi)
    if setup.is_real:
        xi = xi.real
        k = k.real
    res = np.linalg.norm(k @ expm_hermitian(xi) - g)
    if res > 1e-10 * max(1.0, np.linalg.norm(g)):
        raise NumericFailure(f"Cartan round-trip residual {res:.2e}")
    return k, xi


def centralizer_basis(setup: ReductiveSetup, beta) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Orthonormal bases of p^beta and k^beta (elements commuting with beta)."""
    d = make_direction(setup, beta)
    b = d.matrix

    def kernel(basis):
        if not basis:
            return []
        cols = []
        for e in basis:
            c = (b @ e - e @ b).ravel()
            cols.append(np.concatenate([c.real, c.imag]))
        m = np.array(cols).T
        _, s, vh = np.linalg.svd(m)
        thresh = 1e-10 * max(1.0, d.norm)
        rank = int(np.sum(s > thresh))
        null = vh[rank:]
        out = []
        for row in null:
            x = sum(ci * e for ci, e in zip(row, basis))
            out.append(np.real(x) if setup.is_real else x)
        return out

    return kernel(list(setup.p_basis)), kernel(list(setup.k_basis))


@dataclass(frozen=True, eq=False)
class ParabolicData:
    """Block structure of G^{beta+-} in beta's descending eigenbasis.

    Masks are expressed in eigen-coordinates: entry (i, j) of V^* g V is
    scaled by exp(t (a_i - a_j)) under conjugation by exp(t beta).
    """

    direction: Direction
    block_order: list[tuple[float, int]]
    block_index: np.ndarray
    flag: list[np.ndarray] = field(repr=False)
    levi_mask: np.ndarray = field(repr=False)
    upper_mask: np.ndarray = field(repr=False)
    lower_mask: np.ndarray = field(repr=False)


def parabolic_data(setup: ReductiveSetup, beta) -> ParabolicData:
    d = make_direction(setup, beta)
    vals = d.eigenvalues
    n = len(vals)
    idx = np.zeros(n, dtype=int)
    order: list[tuple[float, int]] = []
    for i in range(n):
        if i and vals[i - 1] - vals[i] < EIG_CLUSTER_TOL * max(1.0, abs(vals[i - 1])):
            idx[i] = idx[i - 1]
            order[-1] = (order[-1][0], order[-1][1] + 1)
        else:
            idx[i] = len(order)
            order.append((float(vals[i]), 1))
    levi = idx[:, None] == idx[None, :]
    upper = idx[:, None] < idx[None, :]
    lower = idx[:, None] > idx[None, :]
    ends = np.cumsum([m for _, m in order])
    flag = [d.eigenvectors[:, :e] for e in ends]
    return ParabolicData(d, order, idx, flag, levi, upper, lower)


def _in_eigenbasis(d: Direction, g: np.ndarray) -> np.ndarray:
    v = d.eigenvectors
    return np.conj(v).T @ g @ v


def _from_eigenbasis(setup: ReductiveSetup, d: Direction, m: np.ndarray) -> np.ndarray:
    v = d.eigenvectors
    out = v @ m @ np.conj(v).T
    return np.real(out) if setup.is_real else out


def parabolic_split(setup: ReductiveSetup, g: np.ndarray, beta) -> tuple[np.ndarray, np.ndarray]:
    """g = k h with k in K and h in G^{beta-} (block lower triangular)."""
    g = setup.check_member(g)
    d = make_direction(setup, beta)
    if setup.is_diagonal:
        diag = np.diag(g)
        mag = np.abs(diag)
        return np.diag(diag / mag).astype(setup.dtype), np.diag(mag).astype(setup.dtype)
    n = setup.n
    gt = _in_eigenbasis(d, g)
    rev = np.arange(n)[::-1]
    q, r = np.linalg.qr(gt[np.ix_(rev, rev)])
    rd = np.diag(r)
    if np.min(np.abs(rd)) < 1e-14 * max(1.0, np.max(np.abs(r))):
        raise NumericFailure("flag orthonormalization degenerated")
    ph = rd / np.abs(rd)
    q = q * ph
    r = r / ph[:, None]
    kt = q[np.ix_(rev, rev)]
    ht = r[np.ix_(rev, rev)]
    if setup.is_special:
        det = np.linalg.det(kt)
        # Rotate the last eigen-column so det k = 1; the fix is block-diagonal, so h stays in G^{beta-}.
        fix = np.ones(n, dtype=complex)
        fix[-1] = np.conj(det) / abs(det)
        kt = kt * fix
        ht = np.conj(fix)[:, None] * ht
    k = _from_eigenbasis(setup, d, kt)
    h = _from_eigenbasis(setup, d, ht)
    res = np.linalg.norm(k @ h - g)
    if res > 1e-10 * max(1.0, np.linalg.norm(g)):
        raise NumericFailure(f"parabolic split residual {res:.2e}")
    return k, h


def pi_beta(setup: ReductiveSetup, g: np.ndarray, beta, sign: int = +1) -> np.ndarray:
    """Levi projection lim_{t -> -sign*inf} exp(t beta) g exp(-t beta)."""
    g = np.asarray(g)
    data = parabolic_data(setup, beta)
    d = data.direction
    gt = _in_eigenbasis(d, g)
    t = -PARABOLIC_T if sign > 0 else PARABOLIC_T
    a = d.eigenvalues
    conj = gt * np.exp(t * (a[:, None] - a[None, :]))
    growth = np.max(np.abs(conj)) / max(np.max(np.abs(gt)), 1e-300)
    if growth > PARABOLIC_GROWTH_CAP:
        which = "+" if sign > 0 else "-"
        raise NotInParabolic(f"conjugation trajectory grows by {growth:.2e}; g is not in G^(beta{which})")
    return _from_eigenbasis(setup, d, np.where(data.levi_mask, gt, 0))
