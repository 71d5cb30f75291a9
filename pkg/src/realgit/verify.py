"""The invariant suite: twelve seeded, deterministic checks whose reports are
plain JSON-compatible dictionaries (no timing, so reruns are byte-identical)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .flows import energy, flow_at, hessian_fixed_point
from .kempfness import kn_convexity_scan, kn_cocycle_defect, kn_descend, kn_k_invariance_defect, kn_value
from .liealg import ReductiveSetup, expm_hermitian, make_direction
from .spaces import (
    ModelSpace,
    act,
    configuration,
    distance,
    field_norm,
    fundamental_field,
    linear,
    make_point,
    metric_eval,
    mu_beta,
    projective,
    retract,
    stabilizer_dim,
    tangent_basis,
)
from .stability import (
    centralizer_reduction,
    classify,
    commuting_delta,
    commuting_limit_check,
    multiplicity_verdict,
    orbit_key_multiset,
    random_point,
    stratify,
    torus_oracle,
    transport_report,
)
from .errors import NotSemistable
from .weights import lambda_t, max_weight, moment_weight_margin, transport_weight


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    values: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "values": self.values}


def _rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, k])


def _f(v) -> float | str:
    v = float(v)
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def random_tangent(X: ModelSpace, x, rng) -> np.ndarray:
    basis = tangent_basis(X, x)
    c = rng.standard_normal(len(basis))
    return sum(ci * b for ci, b in zip(c, basis))


def gapped_direction(setup: ReductiveSetup, rng, min_gap: float = 0.25) -> np.ndarray:
    """Random traceless real-symmetric beta whose sorted eigenvalues are at
    least ``min_gap`` apart."""
    n = setup.n
    gaps = rng.uniform(min_gap, 1.5, n - 1)
    a = np.concatenate([[0.0], -np.cumsum(gaps)])
    a -= a.mean()
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    return q @ np.diag(a) @ q.T


# -- 1


def criterion_1(seed: int) -> CriterionResult:
    rng = _rng(seed, 1)
    G = ReductiveSetup(4, "SL_R")
    X = projective(G)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        x = random_point(X, rng)
        beta = G.random_p(rng)
        u = random_tangent(X, x, rng)
        fd = (mu_beta(X, retract(X, x, u, h), beta) - mu_beta(X, retract(X, x, u, -h), beta)) / (2 * h)
        bx = fundamental_field(X, beta, x)
        exact = metric_eval(X, x, bx, u)
        scale = max(abs(exact), field_norm(X, x, bx) * field_norm(X, x, u))
        worst = max(worst, abs(fd - exact) / scale)
    return CriterionResult(1, "gradient identity", worst < 1e-5, {"max_relative_error": worst})


# -- 2


def criterion_2(seed: int) -> CriterionResult:
    rng = _rng(seed, 2)
    G = ReductiveSetup(3, "SL_R")
    X = projective(G)
    flow_err = 0.0
    energy_err = 0.0
    finite = 0
    for _ in range(50):
        x = random_point(X, rng)
        beta = gapped_direction(G, rng)
        closed = max_weight(X, x, beta, with_energy=False).value
        numeric = max_weight(X, x, beta, method="numeric", t=40.0, with_energy=False).value
        flow_err = max(flow_err, abs(numeric - closed))
        e = energy(X, x, beta)
        if np.isfinite(e) and np.isfinite(closed):
            finite += 1
            energy_err = max(energy_err, abs(closed - (mu_beta(X, x, beta) + e)))
    ok = flow_err < 1e-6 and energy_err < 1e-7
    return CriterionResult(2, "maximal-weight agreement", ok,
                           {"max_flow_error": flow_err, "max_energy_identity_error": energy_err, "finite_cases": finite})


# -- 3


def criterion_3(seed: int) -> CriterionResult:
    rng = _rng(seed, 3)
    G = ReductiveSetup(3, "SL_R")
    X = projective(G)
    worst = -np.inf
    for _ in range(100):
        x = random_point(X, rng)
        # Half the points sit in a beta-eigenspace so that the weight can be negative.
        beta = G.random_p(rng)
        if rng.random() < 0.5:
            d = make_direction(G, beta)
            x = make_point(X, d.eigenvectors[:, -1])
        gs = [G.random_element(rng, scale=1.0) for _ in range(100)]
        lhs, rhs = moment_weight_margin(X, x, beta, gs)
        worst = max(worst, lhs - rhs)
    G2 = ReductiveSetup(2, "SL_R")
    X2 = projective(G2)
    x0 = make_point(X2, [0.0, 1.0])
    lhs0, rhs0 = moment_weight_margin(X2, x0, np.diag([1.0, -1.0]), [np.eye(2)])
    ok = worst <= 1e-9 and abs(lhs0 - rhs0) < 1e-9
    return CriterionResult(3, "moment-weight inequality", ok,
                           {"max_lhs_minus_rhs": _f(worst), "sharp_lhs": lhs0, "sharp_rhs": rhs0})


# -- 4


def _kn_models():
    out = []
    for kind in ("SL_R", "GL_R"):
        G = ReductiveSetup(2, kind)
        out.append(linear(G))
    G3 = ReductiveSetup(3, "SL_R")
    out.append(projective(G3))
    C = ReductiveSetup(2, "SL_C")
    out.append(configuration(C, [1.0, 2.0, 0.5]))
    return out


def criterion_4(seed: int) -> CriterionResult:
    rng = _rng(seed, 4)
    models = _kn_models()
    cocycle = kinv = deriv = 0.0
    convex = np.inf
    for i in range(100):
        X = models[i % len(models)]
        G = X.setup
        x = random_point(X, rng)
        g, h = G.random_element(rng), G.random_element(rng)
        cocycle = max(cocycle, kn_cocycle_defect(X, x, g, h))
        kinv = max(kinv, kn_k_invariance_defect(X, x, G.random_k(rng), g))
        beta = G.random_p(rng)
        t = rng.uniform(-1, 1)
        phi = lambda s: kn_value(X, x, expm_hermitian(s * beta))
        e = 1e-3
        fd = (-phi(t + 2 * e) + 8 * phi(t + e) - 8 * phi(t - e) + phi(t - 2 * e)) / (12 * e)
        deriv = max(deriv, abs(fd - lambda_t(X, x, beta, t)))
    grid = np.linspace(-2.0, 2.0, 41)
    for i in range(50):
        X = models[i % len(models)]
        x = random_point(X, rng)
        convex = min(convex, kn_convexity_scan(X, x, X.setup.random_p(rng), grid).min_second_difference)
    ok = cocycle < 1e-9 and kinv < 1e-10 and convex >= -1e-8 and deriv < 1e-7
    return CriterionResult(4, "Kempf-Ness axioms", ok, {
        "max_cocycle_defect": cocycle, "max_k_invariance_defect": kinv,
        "min_second_difference": convex, "max_derivative_error": deriv})


# -- 5


def criterion_5(seed: int) -> CriterionResult:
    G = ReductiveSetup(2, "SL_R")
    X = linear(G)
    x = make_point(X, [0.0, 1.0])
    zero = make_point(X, [0.0, 0.0])
    v1 = classify(X, x)
    v0 = classify(X, zero)
    # Orbit geometry: lambda(x, diag(1,-1)) = 0 and the limit is the origin, which is not in G x.
    beta = np.diag([1.0, -1.0])
    mw = max_weight(X, x, beta)
    limit_is_origin = bool(np.linalg.norm(mw.limit_point.vector) == 0.0)
    d = kn_descend(X, x, tol=1e-8)
    ok = (v1.klass == "StrictlySemistable" and v0.klass == "Polystable" and stabilizer_dim(X, zero) == G.dim_p
          and mw.value == 0.0 and limit_is_origin and d.inf_grad_norm < 1e-6 and d.status != "Converged")
    return CriterionResult(5, "SL(2,R) on R^2", ok, {
        "klass_e2": v1.klass, "klass_origin": v0.klass, "weight_e2": mw.value,
        "descent_status": d.status, "descent_inf_grad_norm": d.inf_grad_norm})


# -- 6


def multiplicity_patterns(max_points: int = 5) -> list[tuple[int, ...]]:
    def parts(n, top):
        if n == 0:
            yield ()
            return
        for k in range(min(n, top), 0, -1):
            for rest in parts(n - k, k):
                yield (k,) + rest

    return [p for n in range(1, max_points + 1) for p in parts(n, n)]


def pattern_point(X: ModelSpace, pattern, rng):
    qs = [rng.standard_normal(2) + 1j * rng.standard_normal(2) for _ in pattern]
    reps = [q for q, m in zip(qs, pattern) for _ in range(m)]
    return make_point(X, np.array(reps)), qs


def hull_semistable(pattern) -> bool:
    """Semistability from torus weight polytopes: every way of moving one
    cluster of coincident points to e_1 or e_2 (others generic) must be
    torus-semistable."""
    C = ReductiveSetup(2, "SL_C")
    total = sum(pattern)
    X = configuration(C, [1.0] * total)
    generic = np.array([1.0, 1.0])
    for i, _m in enumerate(pattern):
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            reps = [e if j == i else generic for j, mj in enumerate(pattern) for _ in range(mj)]
            if torus_oracle(X, make_point(X, np.array(reps))).klass == "Unstable":
                return False
    return True


def criterion_6(seed: int) -> CriterionResult:
    rng = _rng(seed, 6)
    C = ReductiveSetup(2, "SL_C")
    rows = {}
    ok = True
    for pat in multiplicity_patterns(5):
        X = configuration(C, [1.0] * sum(pat))
        x, _ = pattern_point(X, pat, rng)
        got = classify(X, x).klass
        want = multiplicity_verdict(pat)
        hull = hull_semistable(pat) == (want != "Unstable")
        rows["-".join(map(str, pat))] = {"klass": got, "oracle": want, "hull_agrees": hull}
        ok = ok and got == want and hull
    return CriterionResult(6, "configuration oracle equivalence", ok, {"patterns": rows})


# -- 7


def criterion_7(seed: int) -> CriterionResult:
    rng = _rng(seed, 7)
    worst = 0.0
    nontrivial = 0
    for i in range(50):
        G = ReductiveSetup(3, "SL_R" if i % 2 == 0 else "SL_C")
        X = projective(G)
        beta = G.random_p(rng)
        if i % 3 == 0:
            beta = np.diag([1.0, 1.0, -2.0])
        d = make_direction(G, beta)
        g = G.random_element(rng, scale=1.0)
        c = rng.standard_normal(2) if G.is_real else rng.standard_normal(2) + 1j * rng.standard_normal(2)
        low = d.eigenvectors[:, 1:] @ c
        if i % 3 == 0:
            # x on the lower part of beta's flag
            x = make_point(X, low)
        elif i % 3 == 1:
            # g x on the lower part of beta's flag, where a wrong transport shows
            x = make_point(X, np.linalg.solve(g, low))
        else:
            x = random_point(X, rng)
        direct = max_weight(X, act(X, g, x), beta, with_energy=False).value
        moved = transport_weight(X, x, g, beta).value
        if direct < d.eigenvalues[0] - 1e-9:
            nontrivial += 1
        worst = max(worst, 0.0 if (np.isinf(direct) and np.isinf(moved)) else abs(direct - moved))
    return CriterionResult(7, "equivariance of maximal weight", worst < 1e-6,
                           {"max_error": worst, "cases_below_top_eigenvalue": nontrivial})


# -- 8


def semistable_catalog():
    rng = np.random.default_rng(8)
    out = []
    GR = ReductiveSetup(2, "SL_R")
    out.append(("linear SL_R(2) (0,1)", linear(GR), [0.0, 1.0]))
    out.append(("linear SL_R(2) origin", linear(GR), [0.0, 0.0]))
    T = ReductiveSetup(2, "DIAG_TORUS_R")
    out.append(("linear torus (1,0)", linear(T), [1.0, 0.0]))
    C = ReductiveSetup(2, "SL_C")
    for pat in ((1, 1), (2, 1, 1), (2, 2), (1, 1, 1, 1), (2, 2, 1)):
        X = configuration(C, [1.0] * sum(pat))
        x, _ = pattern_point(X, pat, rng)
        out.append((f"CP1 pattern {pat}", X, x.reps))
    T3 = ReductiveSetup(3, "DIAG_TORUS_C")
    out.append(("CP2 torus [1:1:1]", projective(T3), [1.0, 1.0, 1.0]))
    return out


def unstable_catalog():
    C = ReductiveSetup(2, "SL_C")
    rng = np.random.default_rng(81)
    out = []
    for pat in ((3, 1), (2, 1), (1,)):
        X = configuration(C, [1.0] * sum(pat))
        x, _ = pattern_point(X, pat, rng)
        out.append((f"CP1 pattern {pat}", X, x.reps))
    G3 = ReductiveSetup(3, "SL_R")
    out.append(("RP2 [1:0:0]", projective(G3), [1.0, 0.0, 0.0]))
    return out


def criterion_8(seed: int) -> CriterionResult:
    rows = {}
    ok = True
    for name, X, data in semistable_catalog():
        x = make_point(X, data)
        chain = centralizer_reduction(X, x)
        good = len(chain) <= X.setup.dim_a and chain.terminal_grad_norm < 1e-6
        rows[name] = {"chain_length": len(chain), "terminal_grad_norm": chain.terminal_grad_norm, "ok": good}
        ok = ok and good
    for name, X, data in unstable_catalog():
        x = make_point(X, data)
        try:
            centralizer_reduction(X, x)
            raised = False
        except NotSemistable:
            raised = True
        rows[name] = {"raised_not_semistable": raised}
        ok = ok and raised
    return CriterionResult(8, "centralizer reduction", ok, {"cases": rows})


# -- 9


def commuting_example():
    G = ReductiveSetup(4, "SL_C")
    X = projective(G)
    beta = np.diag([1.0, 1.0, -1.0, -1.0])
    alpha = np.diag([1.0, -1.0, 1.0, -1.0])
    return X, alpha, beta


def criterion_9(seed: int) -> CriterionResult:
    X, alpha, beta = commuting_example()
    samples = [make_point(X, np.eye(4)[j]) for j in range(4)]
    rep = commuting_delta(X, alpha, beta, samples, probes=10_000, seed=seed)
    rng = _rng(seed, 9)
    worst = 0.0
    for _ in range(20):
        res, *_ = commuting_limit_check(X, random_point(X, rng), alpha, beta, rep.delta / 2)
        worst = max(worst, res)
    d1 = rep.per_sample_delta[0]
    ok = abs(d1 - 1.0) < 1e-6 and rep.fixed_set_equal and worst < 1e-6
    return CriterionResult(9, "commuting fields", ok, {
        "delta_e1": d1, "delta": rep.delta, "epsilon": rep.epsilon_used,
        "fixed_set_equal": rep.fixed_set_equal, "probe_failures": len(rep.failures), "max_double_limit_residual": worst})


# -- 10


def criterion_10(seed: int) -> CriterionResult:
    rng = _rng(seed, 10)
    G = ReductiveSetup(3, "SL_C")
    X = projective(G)
    hess_err = 0.0
    sig_ok = True
    sigs = []
    for i in range(10):
        beta = gapped_direction(G, rng, min_gap=0.5) if i % 3 else np.diag([1.0, 1.0, -2.0])
        d = make_direction(G, beta)
        x = make_point(X, d.eigenvectors[:, i % 3])
        hd = hessian_fixed_point(X, x, d)
        hess_err = max(hess_err, float(np.max(np.abs(hd.fd_hessian - hd.operator_matrix))))
        sig = probe_signature(X, x, d, hd)
        sigs.append([list(hd.signature), list(sig)])
        sig_ok = sig_ok and tuple(sig) == hd.signature
    return CriterionResult(10, "Hessian identity", hess_err < 1e-4 and sig_ok,
                           {"max_hessian_difference": hess_err, "signatures": sigs})


def probe_signature(X: ModelSpace, x, d, hd, delta: float = 1e-6, t: float = 2.0) -> tuple[int, int, int]:
    """Count directions that shrink, stay or grow under exp(t beta), starting
    a small step away from x along the Hessian eigendirections."""
    _vals, vecs = np.linalg.eigh(hd.operator_matrix)
    counts = [0, 0, 0]
    for k in range(vecs.shape[1]):
        u = sum(c * b for c, b in zip(vecs[:, k], hd.basis))
        p = retract(X, x, u, delta)
        ratio = distance(X, flow_at(X, p, d, t), x) / distance(X, p, x)
        counts[0 if ratio < 0.75 else (2 if ratio > 1.33 else 1)] += 1
    return tuple(counts)


# -- 11


def circle_grid(X: ModelSpace, n_theta: int = 10, n_phi: int = 10):
    pts = []
    for th in np.linspace(0.0, np.pi / 2, n_theta):
        for ph in np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False):
            pts.append(make_point(X, np.array([np.cos(th), np.exp(1j * ph) * np.sin(th)])))
    return pts


def criterion_11(seed: int) -> CriterionResult:
    rng = _rng(seed, 11)
    # f transport on RP^2 under SL_R(3).
    G = ReductiveSetup(3, "SL_R")
    X = projective(G)
    pts = [random_point(X, rng) for _ in range(100)]
    f_def = 0.0
    for _ in range(10):
        g = G.random_element(rng)
        f_def = max(f_def, transport_report(X, g, pts, with_strata=False).f_defect)
    # Strata of a 100-point CP^1 grid under the diagonal torus.
    T = ReductiveSetup(2, "DIAG_TORUS_C")
    XT = projective(T)
    grid = circle_grid(XT)
    keys_ok = True
    # Orbit keys are rounded to 1e-6, so the flows stop at |grad f| < 1e-7.
    k0 = orbit_key_multiset(stratify(XT, grid, tol=1e-7))
    key_sets = sorted([list(k), c] for k, c in k0.items())
    for i in range(10):
        s = 0.3 if i == 0 else rng.uniform(-1, 1)
        g = np.diag([np.exp(s + 1j * rng.uniform(0, 1)), np.exp(-s - 1j * rng.uniform(0, 1))])
        g = g / np.sqrt(np.linalg.det(g))
        keys_ok = keys_ok and transport_report(XT, g, grid, tol=1e-7, original_keys=k0, rtol=1e-8).keys_equal
    # Verdicts of CP^1 configurations under SL_C(2) moved by g^{-1}.
    C = ReductiveSetup(2, "SL_C")
    verdicts_ok = True
    for pat in ((1, 1, 1), (1, 1), (2, 1)):
        Xc = configuration(C, [1.0] * sum(pat))
        x, _ = pattern_point(Xc, pat, rng)
        base = classify(Xc, x).klass
        for _ in range(10):
            g = C.random_element(rng)
            verdicts_ok = verdicts_ok and classify(Xc, act(Xc, np.linalg.inv(g), x)).klass == base
    ok = f_def < 1e-12 and keys_ok and verdicts_ok
    return CriterionResult(11, "triple invariance", ok,
                           {"max_f_defect": f_def, "orbit_keys_equal": keys_ok, "orbit_keys": key_sets,
                            "verdicts_unchanged": verdicts_ok})


CRITERIA: dict[int, Callable[[int], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}


def run_suite(seed: int = 0, only: list[int] | None = None) -> dict:
    results = []
    for k, fn in CRITERIA.items():
        if only is None or k in only:
            results.append(fn(seed).as_dict())
    return {"seed": seed, "criteria": results, "all_passed": all(r["passed"] for r in results)}


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False)


def criterion_12(seed: int) -> CriterionResult:
    a = dumps(run_suite(seed))
    b = dumps(run_suite(seed))
    return CriterionResult(12, "determinism", a == b, {"report_bytes": len(a.encode()), "identical": a == b})
