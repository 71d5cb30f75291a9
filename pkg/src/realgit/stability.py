"""Stability classification with certificates, the torus weight-polytope oracle,
centralizer reduction, commuting-field fixed sets, stratification by the
norm-square flow and transport of the whole picture by g in G."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    BudgetExceeded,
    EmptyIndexSet,
    NotCommuting,
    NotFixed,
    NotSemistable,
    NumericFailure,
    Undecided,
)
from .flows import (
    SUPPORT_THRESHOLD,
    StratumLabel,
    flow_limit,
    hessian_fixed_point,
    integrate_descent,
    neg_flow_normsq,
    orbit_key,
)
from .kempfness import DescentResult, cartan_direction, kn_descend
from .liealg import ReductiveSetup, ad, bform, inner, make_direction, parabolic_split, project_p
from .spaces import (
    ModelPoint,
    ModelSpace,
    act,
    distance,
    field_norm,
    fundamental_field,
    gradient_map,
    make_point,
    mu_beta,
    stabilizer_dim,
)
from .weights import DEFAULT_SWEEP, NotProper, properness_estimate, sweep_min_weight, weight_value

KLASSES = ("Stable", "Polystable", "StrictlySemistable", "Unstable")
WEIGHT_TOL = 1e-7
SNAP_TOLS = (1e-2, 1e-4, 1e-6)


# -- certificates and verdicts


@dataclass(frozen=True, eq=False)
class DestabilizingDirection:
    beta: np.ndarray
    weight: float


@dataclass(frozen=True, eq=False)
class Minimizer:
    g: np.ndarray
    grad_norm: float
    stabilizer_dim: int
    point: ModelPoint


@dataclass(frozen=True, eq=False)
class ChainStep:
    beta: np.ndarray
    limit: ModelPoint
    weight: float


@dataclass(frozen=True, eq=False)
class ReductionChain:
    steps: list[ChainStep]
    terminal_point: ModelPoint
    terminal_grad_norm: float
    terminal_g: np.ndarray

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True, eq=False)
class StabilityVerdict:
    klass: str
    certificate: object
    tol: float
    budget: int
    descent_status: str
    inf_grad_norm: float
    iterations: int


# -- destabilizing directions


def snap_to_flag(X: ModelSpace, x: ModelPoint, beta, snap_tol: float) -> np.ndarray | None:
    """Rebuild beta on a flag spanned by the data.

    Each representative of x is assigned the first level k of beta's
    ascending flag it lies within ``snap_tol`` of; level k of the new flag is
    spanned by the representatives of level <= k, completed by beta's own
    eigenvectors.  Eigenvalues are kept.  None when the data do not fit.
    """
    setup = X.setup
    if setup.is_diagonal:
        return None
    d = make_direction(setup, beta)
    n = X.n
    vals = d.eigenvalues[::-1]
    vecs = d.eigenvectors[:, ::-1]
    data = [v / np.linalg.norm(v) for v in x.reps if np.linalg.norm(v) > 0]
    levels = []
    for q in data:
        for k in range(1, n + 1):
            sub = vecs[:, :k]
            if np.linalg.norm(q - sub @ (np.conj(sub).T @ q)) < snap_tol:
                levels.append(k)
                break
    basis: list[np.ndarray] = []

    def add(v) -> bool:
        w = np.asarray(v, dtype=complex)
        for b in basis:
            w = w - np.vdot(b, w) * b
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            basis.append(w / nw)
            return True
        return False

    for k in range(1, n + 1):
        for q, lev in zip(data, levels):
            if lev == k:
                add(q)
        if len(basis) > k:
            return None
        c = 0
        while len(basis) < k and c < n:
            add(vecs[:, c])
            c += 1
    b = np.array(basis).T
    m = (b * vals) @ np.conj(b).T
    m = 0.5 * (m + np.conj(m).T)
    if setup.is_real:
        if np.max(np.abs(m.imag)) > 1e-9:
            return None
        m = m.real
    return project_p(setup, m)


def _unit(m: np.ndarray, real: bool) -> np.ndarray | None:
    m = 0.5 * (m + np.conj(m).T)
    if real:
        m = np.real(m)
    nm = np.linalg.norm(m)
    return m / nm if nm > 1e-12 else None


def destabilizer_search(X: ModelSpace, x: ModelPoint, descent: DescentResult | None = None,
                        count: int = DEFAULT_SWEEP) -> tuple[float, np.ndarray]:
    """Most negative normalized weight lambda(x, beta)/|beta| over candidate
    directions: ray data from a descent (moved back to x through the
    parabolic split), their flag-snapped versions, and a sphere sweep."""
    setup = X.setup
    real = setup.is_real
    raw: list[np.ndarray] = []
    if descent is not None:
        for g, m in descent.ray_samples:
            bg = _unit(-m, real)
            if bg is None:
                continue
            try:
                k, _h = parabolic_split(setup, np.linalg.inv(g), bg)
                raw.append(project_p(setup, ad(k, bg)))
            except Exception:
                pass
            c = cartan_direction(g)
            if c is not None:
                raw.append(project_p(setup, c))
        if descent.direction is not None:
            raw.append(project_p(setup, descent.direction))
    cands = []
    for r in raw:
        u = _unit(r, real)
        if u is None:
            continue
        cands.append(u)
        for tol in SNAP_TOLS:
            s = snap_to_flag(X, x, u, tol)
            if s is not None:
                su = _unit(s, real)
                if su is not None:
                    cands.append(su)
    best, arg = sweep_min_weight(X, x, None, count)
    for b in cands:
        lam = weight_value(X, x, b)
        if lam < best:
            best, arg = lam, b
    return float(best), arg


# -- centralizer reduction


def residual_subspace(setup: ReductiveSetup, betas: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Orthonormal basis of {xi in p : [xi, beta_i] = 0, <xi, beta_i> = 0 for all i}."""
    basis = list(setup.p_basis)
    if not betas:
        return basis
    rows = []
    for b in betas:
        b = np.asarray(b)
        comm = [(e @ b - b @ e).ravel() for e in basis]
        cm = np.array(comm).T
        rows.append(np.concatenate([cm.real, cm.imag]))
        rows.append(np.array([[inner(e, b) for e in basis]]))
    m = np.vstack(rows)
    _, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > 1e-10))
    out = []
    for row in vh[rank:]:
        v = sum(c * e for c, e in zip(row, basis))
        out.append(np.real(v) if setup.is_real else v)
    return out


def centralizer_reduction(X: ModelSpace, x: ModelPoint, tol: float = 1e-8, budget: int = 2000,
                          count: int = DEFAULT_SWEEP, weight_tol: float = WEIGHT_TOL) -> ReductionChain:
    """Chain of mutually commuting, orthogonal weight-zero directions.

    At each stage the current point is tested for linear properness on the
    residual subspace of p; a weight-zero witness beta_i is followed to its
    limit, a negative one raises NotSemistable, and once proper a descent
    restricted to the residual subspace reaches a zero of mu_p.
    """
    setup = X.setup
    cur = x
    steps: list[ChainStep] = []
    for _ in range(setup.dim_a + 1):
        here = gradient_map(X, cur).norm
        if here < tol:
            return ReductionChain(steps, cur, here, np.eye(X.n, dtype=setup.dtype))
        sub = residual_subspace(setup, [s.beta for s in steps])
        est = properness_estimate(X, cur, sub, count=count)
        if isinstance(est, NotProper):
            if est.weight < -weight_tol:
                raise NotSemistable(f"direction with weight {est.weight:.3e} < 0", beta=est.witness, weight=est.weight)
            if len(steps) >= setup.dim_a:
                break
            beta = _unit(est.witness, setup.is_real)
            y = flow_limit(X, cur, beta)
            steps.append(ChainStep(beta, y, weight_value(X, cur, beta)))
            cur = y
            continue
        res = kn_descend(X, cur, tol=tol, budget=budget, subspace=sub)
        full = gradient_map(X, res.point).norm
        if res.status != "Converged" or full >= max(tol, 1e-12) * 10:
            raise NumericFailure(f"restricted descent ended {res.status} with |mu_p| = {full:.3e}")
        return ReductionChain(steps, res.point, full, res.minimizer)
    raise BudgetExceeded(f"reduction chain exceeded dim(a) = {setup.dim_a} steps", partial=steps)


# -- classification


def classify(X: ModelSpace, x: ModelPoint, tol: float = 1e-8, budget: int = 2000,
             count: int = DEFAULT_SWEEP, weight_tol: float = WEIGHT_TOL) -> StabilityVerdict:
    """Stable / Polystable / StrictlySemistable / Unstable with a certificate.

    Descent converging at a zero gives Polystable (Stable when the
    stabilizer in p is trivial).  Otherwise a direction with negative weight
    certifies Unstable; failing that, the reduction chain exhibits a zero of
    mu_p in the orbit closure and the verdict is StrictlySemistable.
    """
    try:
        d = kn_descend(X, x, tol=tol, budget=budget)
    except BudgetExceeded as exc:
        d = exc.partial
    meta = dict(tol=tol, budget=budget, descent_status=d.status, iterations=d.iterations)
    if d.status == "Converged":
        dim = stabilizer_dim(X, d.point)
        cert = Minimizer(d.minimizer, d.final_grad_norm, dim, d.point)
        return StabilityVerdict("Stable" if dim == 0 else "Polystable", cert, inf_grad_norm=d.inf_grad_norm, **meta)
    lam, beta = destabilizer_search(X, x, d, count)
    if lam < -weight_tol:
        return StabilityVerdict("Unstable", DestabilizingDirection(beta, lam), inf_grad_norm=d.inf_grad_norm, **meta)
    try:
        chain = centralizer_reduction(X, x, tol=tol, budget=budget, count=count, weight_tol=weight_tol)
    except NotSemistable as exc:
        return StabilityVerdict("Unstable", DestabilizingDirection(exc.beta, exc.weight),
                                inf_grad_norm=d.inf_grad_norm, **meta)
    except (BudgetExceeded, NumericFailure) as exc:
        raise Undecided(f"descent ended {d.status} and the reduction chain failed: {exc}") from exc
    inf_gn = min(d.inf_grad_norm, chain.terminal_grad_norm)
    if not chain.steps:
        # The restricted descent is a full descent here; it found the zero.
        dim = stabilizer_dim(X, chain.terminal_point)
        cert = Minimizer(chain.terminal_g, chain.terminal_grad_norm, dim, chain.terminal_point)
        return StabilityVerdict("Stable" if dim == 0 else "Polystable", cert, inf_grad_norm=inf_gn, **meta)
    return StabilityVerdict("StrictlySemistable", chain, inf_grad_norm=inf_gn, **meta)


# -- exact torus oracle


def _lp_max(A: list[list[Fraction]], b: list[Fraction], c: list[Fraction]):
    """max c.z subject to A z = b, z >= 0, exact two-phase simplex with
    Bland's rule.  Returns (status, value, z)."""
    m, N = len(A), len(c)
    rows = []
    for i in range(m):
        sgn = -1 if b[i] < 0 else 1
        rows.append([sgn * v for v in A[i]] + [Fraction(int(j == i)) for j in range(m)] + [sgn * b[i]])
    basis = [N + i for i in range(m)]

    def pivot(r, col):
        pv = rows[r][col]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(m):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * bb for a, bb in zip(rows[i], rows[r])]
        basis[r] = col

    def run(cost, allowed):
        while True:
            enter = None
            for j in allowed:
                if j in basis:
                    continue
                red = cost[j] - sum(cost[basis[i]] * rows[i][j] for i in range(m))
                if red > 0:
                    enter = j
                    break
            if enter is None:
                return "optimal"
            best = None
            for i in range(m):
                if rows[i][enter] > 0:
                    ratio = rows[i][-1] / rows[i][enter]
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return "unbounded"
            pivot(best[1], enter)

    cost1 = [Fraction(0)] * N + [Fraction(-1)] * m
    run(cost1, range(N + m))
    if sum(cost1[basis[i]] * rows[i][-1] for i in range(m)) < 0:
        return "infeasible", None, None
    for i in range(m):
        if basis[i] >= N:
            for j in range(N):
                if rows[i][j] != 0 and j not in basis:
                    pivot(i, j)
                    break
    cost2 = list(c) + [Fraction(0)] * m
    status = run(cost2, range(N))
    z = [Fraction(0)] * N
    for i in range(m):
        if basis[i] < N:
            z[basis[i]] = rows[i][-1]
    return status, sum(ci * zi for ci, zi in zip(c, z)), z


def _rank(vectors: list[list[Fraction]]) -> int:
    rows = [list(v) for v in vectors]
    r = 0
    ncol = len(rows[0]) if rows else 0
    for col in range(ncol):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


@dataclass(frozen=True, eq=False)
class TorusVerdict:
    klass: str
    weights: list
    beta: np.ndarray | None = None
    hull_dim: int = 0


def torus_weights(X: ModelSpace, x: ModelPoint) -> list[tuple[Fraction, ...]]:
    """Weights of x for the diagonal torus, as exact vectors of diagonal entries.

    A support index i contributes the functional beta -> beta_ii, written
    e_i (minus the mean for traceless kinds).  Configuration weights are the
    weighted Minkowski sums over factors.
    """
    n = X.n
    special = X.setup.is_special
    shift = Fraction(1, n) if special else Fraction(0)

    def unit(i):
        return tuple(Fraction(int(j == i)) - shift for j in range(n))

    per = []
    for j, v in enumerate(x.reps):
        scale = np.linalg.norm(v)
        supp = [i for i in range(n) if abs(v[i]) > SUPPORT_THRESHOLD * max(scale, 1e-300)]
        per.append((Fraction(X.weights[j]).limit_denominator(10**6), [unit(i) for i in supp]))
    pts: set | None = None
    for w, units in per:
        if not units:
            continue
        scaled = [tuple(w * c for c in u) for u in units]
        if pts is None:
            pts = set(scaled)
        else:
            pts = {tuple(a + c for a, c in zip(p, u)) for p in pts for u in scaled}
    return sorted(pts) if pts else []


def torus_oracle(X: ModelSpace, x: ModelPoint) -> TorusVerdict:
    """Verdict for the diagonal torus A = exp(a) from the exact weight polytope."""
    setup = X.setup
    n = X.n
    pts = torus_weights(X, x)
    dim_a = setup.dim_a
    if not pts:
        return TorusVerdict("Polystable", [])
    N = len(pts)
    zero, one = Fraction(0), Fraction(1)
    # 0 in conv(P)?
    A = [[p[i] for p in pts] for i in range(n)] + [[one] * N]
    b = [zero] * n + [one]
    status, _, _ = _lp_max(A, b, [zero] * N)
    hull_dim = _rank([list(p) for p in pts])
    if status == "infeasible":
        if not X.projective:
            # 0 lies in every orbit closure of a linear model.
            return TorusVerdict("StrictlySemistable", pts, None, hull_dim)
        # beta = bp - bm with beta . p <= -1 for all p (and trace 0 for special kinds).
        A2 = []
        b2 = []
        for k, p in enumerate(pts):
            A2.append(list(p) + [-v for v in p] + [one if j == k else zero for j in range(N)])
            b2.append(-one)
        if setup.is_special:
            A2.append([one] * n + [-one] * n + [zero] * N)
            b2.append(zero)
        st, _, z = _lp_max(A2, b2, [zero] * (2 * n + N))
        if st != "optimal":
            raise NumericFailure("separating functional not found although 0 lies outside the hull")
        beta = np.diag([float(z[i] - z[n + i]) for i in range(n)])
        return TorusVerdict("Unstable", pts, beta / np.linalg.norm(beta), hull_dim)
    # relative interior: maximize t with all coefficients >= t.
    S = [sum((p[i] for p in pts), zero) for i in range(n)]
    A3 = [[S[i]] + [p[i] for p in pts] for i in range(n)] + [[Fraction(N)] + [one] * N]
    st, t, _ = _lp_max(A3, [zero] * n + [one], [one] + [zero] * N)
    if st != "optimal" or t <= 0:
        return TorusVerdict("StrictlySemistable", pts, None, hull_dim)
    return TorusVerdict("Stable" if hull_dim == dim_a else "Polystable", pts, None, hull_dim)


def multiplicity_verdict(multiplicities: Sequence[int]) -> str:
    """Closed-form verdict for equal-weight points on CP^1 under SL(2, C),
    given the multiplicities of the distinct points."""
    total = sum(multiplicities)
    top = max(multiplicities)
    if 2 * top < total:
        return "Stable"
    if 2 * top == total:
        return "Polystable" if len(multiplicities) == 2 else "StrictlySemistable"
    return "Unstable"


# -- commuting fields


@dataclass(frozen=True, eq=False)
class CommutingReport:
    alpha: np.ndarray
    beta: np.ndarray
    delta: float
    epsilon_used: float
    fixed_set_equal: bool
    y_point: ModelPoint | None
    z_point: ModelPoint | None
    double_limit_residual: float
    per_sample_delta: list = field(default_factory=list)
    weight_pairs: list = field(default_factory=list)
    failures: list = field(default_factory=list, repr=False)


def _joint_spectrum(A: np.ndarray, B: np.ndarray, cluster: float = 1e-6) -> list[tuple[float, float]]:
    vals, vecs = np.linalg.eigh(A)
    pairs = []
    i = 0
    while i < len(vals):
        j = i + 1
        while j < len(vals) and vals[j] - vals[i] < cluster:
            j += 1
        block = vecs[:, i:j]
        bv = np.linalg.eigvalsh(block.T @ B @ block)
        a = float(np.mean(vals[i:j]))
        pairs.extend((a, float(b)) for b in bv)
        i = j
    return pairs


def fixed_test(X: ModelSpace, gamma, x: ModelPoint, tol: float = 1e-9) -> bool:
    return field_norm(X, x, fundamental_field(X, gamma, x)) < tol


def _eigenspace_probes(X: ModelSpace, gamma: np.ndarray, count: int, rng: np.random.Generator) -> list[ModelPoint]:
    d = make_direction(X.setup, gamma)
    vals = d.eigenvalues
    groups = []
    i = 0
    while i < len(vals):
        j = i + 1
        while j < len(vals) and vals[i] - vals[j] < 1e-9:
            j += 1
        groups.append(d.eigenvectors[:, i:j])
        i = j
    out = []
    for k in range(count):
        reps = []
        for _ in range(X.factors):
            blk = groups[rng.integers(len(groups))]
            c = rng.standard_normal(blk.shape[1])
            if X.field == "complex":
                c = c + 1j * rng.standard_normal(blk.shape[1])
            reps.append(blk @ c)
        out.append(make_point(X, np.array(reps)))
    return out


def random_point(X: ModelSpace, rng: np.random.Generator) -> ModelPoint:
    v = rng.standard_normal((X.factors, X.n))
    if X.field == "complex":
        v = v + 1j * rng.standard_normal((X.factors, X.n))
    return make_point(X, v)


def commuting_limit_check(X: ModelSpace, x: ModelPoint, alpha, beta, epsilon: float):
    """distance(w, z) with y = lim beta x, z = lim alpha y, w = lim (beta + eps alpha) x.
    Returns (residual, y, z, w)."""
    a = np.asarray(make_direction(X.setup, alpha).matrix)
    b = np.asarray(make_direction(X.setup, beta).matrix)
    y = flow_limit(X, x, b)
    z = flow_limit(X, y, a)
    w = flow_limit(X, x, b + epsilon * a)
    return distance(X, w, z), y, z, w


def commuting_delta(X: ModelSpace, alpha, beta, samples: Sequence[ModelPoint], probes: int = 10_000,
                    seed: int = 0, zero_tol: float = 1e-9, epsilon: float | None = None) -> CommutingReport:
    """delta = min over samples and joint Hessian eigenpairs (a_i, b_i) with
    both nonzero of |a_i|/|b_i|, then a probe check that the zeros of
    (beta + eps alpha)_X are the common zeros for eps = delta/2."""
    setup = X.setup
    da, db = make_direction(setup, alpha), make_direction(setup, beta)
    a, b = da.matrix, db.matrix
    if np.linalg.norm(a @ b - b @ a) >= 1e-12 * max(1.0, da.norm * db.norm):
        raise NotCommuting(f"[alpha, beta] has norm {np.linalg.norm(a @ b - b @ a):.2e}")
    per, pairs_all = [], []
    for s in samples:
        if not (fixed_test(X, b, s, 1e-10) and fixed_test(X, a, s, 1e-10)):
            raise NotFixed("sample is not a common zero of alpha_X and beta_X")
        ha = hessian_fixed_point(X, s, db).operator_matrix
        hb = hessian_fixed_point(X, s, da).operator_matrix
        pairs = _joint_spectrum(ha, hb)
        pairs_all.append(pairs)
        ratios = [abs(p) / abs(q) for p, q in pairs if abs(p) > zero_tol and abs(q) > zero_tol]
        per.append(min(ratios) if ratios else np.inf)
    delta = float(min(per)) if per else np.inf
    rng = np.random.default_rng(seed)
    eps = epsilon if epsilon is not None else (delta / 2 if np.isfinite(delta) else 1.0)
    gamma = b + eps * a
    half = probes // 2
    pts = [random_point(X, rng) for _ in range(probes - half)] + _eigenspace_probes(X, gamma, half, rng)
    failures = []
    for p in pts:
        zg = fixed_test(X, gamma, p)
        zc = fixed_test(X, b, p) and fixed_test(X, a, p)
        if zg != zc:
            failures.append(p)
    start = random_point(X, rng)
    res, y, z, _w = commuting_limit_check(X, start, a, b, eps)
    report = CommutingReport(a, b, delta, eps, not failures, y, z, res, per, pairs_all, failures)
    if not np.isfinite(delta):
        raise EmptyIndexSet("no Hessian eigendirection is nonzero for both alpha and beta", report=report)
    return report


def tecnico_check(X: ModelSpace, x: ModelPoint, beta, g_samples: Sequence[np.ndarray]) -> float:
    """max_g |<mu_p(x), beta> - <mu_p(g x), (Ad(g) beta)_p>| at a zero of beta_X."""
    d = make_direction(X.setup, beta)
    if field_norm(X, x, fundamental_field(X, d, x)) >= 1e-10:
        raise NotFixed("beta_X(x) is not zero")
    base = mu_beta(X, x, d)
    worst = 0.0
    for g in g_samples:
        moved = project_p(X.setup, ad(np.asarray(g), d.matrix))
        worst = max(worst, abs(base - inner(gradient_map(X, act(X, g, x)).matrix, moved)))
    return worst


# -- stratification and transport


def stratify(X: ModelSpace, points: Sequence[ModelPoint], tol: float = 1e-8, budget: int = 20000):
    """Norm-square flow label per point; BudgetExceeded instances mark failures."""
    out = []
    for p in points:
        try:
            _traj, _last, label = neg_flow_normsq(X, p, tol=tol, budget=budget)
            out.append((p, label))
        except BudgetExceeded as exc:
            out.append((p, exc))
    return out


def zero_stratum(labels, tol: float = 1e-8) -> list:
    return [p for p, lab in labels if isinstance(lab, StratumLabel) and lab.f_value < tol]


def orbit_key_multiset(labels) -> Counter:
    return Counter(lab.orbit_key for _p, lab in labels if isinstance(lab, StratumLabel))


@dataclass(frozen=True, eq=False)
class TripleTransport:
    """The gradient map of the conjugated triple, mu' = Ad(g) o mu_p o g^{-1},
    with K' = g K g^{-1} described by the conjugated k basis."""

    X: ModelSpace
    g: np.ndarray
    g_inv: np.ndarray
    k_basis: tuple

    def mu(self, y: ModelPoint) -> np.ndarray:
        return self.g @ gradient_map(self.X, act(self.X, self.g_inv, y)).matrix @ self.g_inv

    def f(self, y: ModelPoint) -> float:
        m = self.mu(y)
        return 0.5 * bform(m, m)

    def push(self, x: ModelPoint) -> ModelPoint:
        return act(self.X, self.g, x)

    def flow_label(self, y: ModelPoint, tol: float = 1e-8, budget: int = 20000, rtol: float = 1e-9):
        """Integrate the transported norm-square flow from y; returns (limit, orbit key)."""
        X = self.X

        def field_fn(p):
            q = act(X, self.g_inv, p)
            m = gradient_map(X, q).matrix
            v = fundamental_field(X, self.g @ m @ self.g_inv, p)
            return -v, field_norm(X, q, fundamental_field(X, m, q))

        _t, pts, _fs, ok = integrate_descent(X, y, field_fn, self.f, tol, budget, rtol=rtol)
        if not ok:
            raise BudgetExceeded("transported flow exhausted its budget")
        last = pts[-1]
        return last, orbit_key(X.setup, self.mu(last), hermitian=False)


def triple_transport(X: ModelSpace, g: np.ndarray) -> TripleTransport:
    g = X.setup.check_member(g)
    gi = np.linalg.inv(g)
    return TripleTransport(X, g, gi, tuple(g @ k @ gi for k in X.setup.k_basis))


@dataclass(frozen=True)
class TransportReport:
    f_defect: float
    mu_defect: float
    keys_equal: bool
    original_keys: Counter
    transported_keys: Counter


def transport_report(X: ModelSpace, g: np.ndarray, points: Sequence[ModelPoint], tol: float = 1e-8,
                     budget: int = 20000, with_strata: bool = True,
                     original_keys: Counter | None = None, rtol: float = 1e-9) -> TransportReport:
    """Compare the transported triple with the original on a sample of points.
    ``original_keys`` reuses strata of the original triple computed earlier."""
    T = triple_transport(X, g)
    f_def = 0.0
    mu_def = 0.0
    for p in points:
        gp = T.push(p)
        m = gradient_map(X, p).matrix
        f_def = max(f_def, abs(T.f(gp) - 0.5 * bform(m, m)))
        mu_def = max(mu_def, float(np.linalg.norm(T.mu(gp) - T.g @ m @ T.g_inv)))
    ok, k0, k1 = True, Counter(), Counter()
    if with_strata:
        k0 = original_keys if original_keys is not None else orbit_key_multiset(stratify(X, points, tol, budget))
        for p in points:
            _last, key = T.flow_label(T.push(p), tol, budget, rtol)
            k1[key] += 1
        ok = k0 == k1
    return TransportReport(f_def, mu_def, ok, k0, k1)
