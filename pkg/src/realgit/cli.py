"""Command line entry point: JSON scenarios in, deterministic JSON or CSV reports out.

Scenario schema (all keys except ``group``, ``model`` and ``command`` optional)::

    {
      "group": {"kind": "SL_R", "n": 2},
      "model": {"kind": "linear", "field": "real", "weights": [1.0]},
      "point": [0, 1],
      "points": [[1, 0], [0, 1]],
      "direction": [[1, 0], [0, -1]],
      "group_element": [[2, 0], [0, 0.5]],
      "command": "classify",
      "method": "closed",
      "criteria": [1, 2],
      "params": {"tol": 1e-8, "t_max": 40, "budget": 2000, "seed": 0, "sweep": 2000}
    }

Complex entries are written ``{"re": 1, "im": 2}`` or as strings such as
``"1+2j"``.  Configuration points list one vector per factor.

Exit codes: 0 success, 1 malformed input, 2 budget exhausted or undecided,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from typing import Sequence

import numpy as np

from . import __version__
from .errors import (
    BudgetExceeded,
    Diverged,
    InvalidPoint,
    NotFixed,
    NumericFailure,
    Overflow,
    RealGITError,
    ScenarioError,
    Undecided,
)
from .flows import FlowTrajectory, sample_beta_flow
from .kempfness import kn_descend, kn_value
from .liealg import GROUP_KINDS, ReductiveSetup
from .spaces import MODEL_KINDS, ModelPoint, ModelSpace, make_point
from .stability import (
    ChainStep,
    DestabilizingDirection,
    Minimizer,
    ReductionChain,
    classify,
    stratify,
)
from .weights import DEFAULT_SWEEP, NUMERIC_T, max_weight

COMMANDS = ("classify", "max-weight", "flow", "kempf-ness", "stratify", "verify")
DEFAULTS = {"tol": 1e-8, "t_max": NUMERIC_T, "budget": 2000, "seed": 0, "sweep": DEFAULT_SWEEP}
FLOW_SAMPLES = 41
HERMITIAN_TOL = 1e-10

EXIT_OK, EXIT_MALFORMED, EXIT_BUDGET, EXIT_NUMERIC = 0, 1, 2, 3


# -- parsing


def _scalar(v, where: str) -> complex:
    if isinstance(v, bool):
        raise ScenarioError(f"{where}: booleans are not numbers")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, dict) and set(v) <= {"re", "im"} and "re" in v:
        return complex(float(v["re"]), float(v.get("im", 0.0)))
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            pass
    raise ScenarioError(f"{where}: cannot read {v!r} as a number")


def _array(data, where: str) -> np.ndarray:
    def walk(v, path):
        if isinstance(v, list):
            return [walk(e, f"{path}[{i}]") for i, e in enumerate(v)]
        return _scalar(v, path)

    try:
        arr = np.array(walk(data, where), dtype=complex)
    except ValueError as exc:
        raise ScenarioError(f"{where}: ragged array") from exc
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{where}: non-finite entry")
    return arr


def _real_if_possible(arr: np.ndarray, real: bool) -> np.ndarray:
    if real:
        if np.max(np.abs(arr.imag), initial=0.0) > 0:
            raise ScenarioError("complex entries given for a real group")
        return arr.real.copy()
    return arr


def parse_scenario(raw: dict) -> dict:
    """Validate a decoded scenario; returns the objects the commands need."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    command = raw.get("command")
    if command not in COMMANDS:
        raise ScenarioError(f"command must be one of {COMMANDS}, got {command!r}")
    out = {"command": command, "params": dict(DEFAULTS)}
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ScenarioError("params must be an object")
    for key, val in params.items():
        if key not in DEFAULTS:
            raise ScenarioError(f"unknown parameter {key!r}")
        out["params"][key] = val
    out["criteria"] = raw.get("criteria")
    if command == "verify":
        return out
    group, model = raw.get("group"), raw.get("model")
    if not isinstance(group, dict) or not isinstance(model, dict):
        raise ScenarioError("group and model descriptors are required")
    if group.get("kind") not in GROUP_KINDS:
        raise ScenarioError(f"group kind must be one of {GROUP_KINDS}")
    n = group.get("n")
    if not isinstance(n, int) or isinstance(n, bool):
        raise ScenarioError("group n must be an integer")
    if model.get("kind") not in MODEL_KINDS:
        raise ScenarioError(f"model kind must be one of {MODEL_KINDS}")
    try:
        setup = ReductiveSetup(n, group["kind"])
        field = model.get("field", "real" if setup.is_real else "complex")
        X = ModelSpace(model["kind"], setup, field, tuple(model.get("weights", [1.0])))
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc)) from exc
    out["space"] = X
    real = X.field == "real"

    def point(data, where):
        arr = _real_if_possible(_array(data, where), real)
        try:
            return make_point(X, arr)
        except InvalidPoint as exc:
            raise ScenarioError(f"{where}: {exc}") from exc

    if "point" in raw:
        out["point"] = point(raw["point"], "point")
    if "points" in raw:
        if not isinstance(raw["points"], list) or not raw["points"]:
            raise ScenarioError("points must be a nonempty list")
        out["points"] = [point(p, f"points[{i}]") for i, p in enumerate(raw["points"])]
    if "direction" in raw:
        b = _real_if_possible(_array(raw["direction"], "direction"), setup.is_real)
        if b.shape != (n, n):
            raise ScenarioError(f"direction: expected {n}x{n} matrix, got shape {b.shape}")
        asym = float(np.max(np.abs(b - np.conj(b).T)))
        if asym > HERMITIAN_TOL:
            raise ScenarioError(f"direction: not Hermitian (max |b - b^*| = {asym:.3e})")
        if setup.in_p_residual(b) > HERMITIAN_TOL * max(1.0, float(np.linalg.norm(b))):
            raise ScenarioError(f"direction: not in p for {setup.kind}")
        out["direction"] = b
    if "group_element" in raw:
        g = _real_if_possible(_array(raw["group_element"], "group_element"), setup.is_real)
        try:
            out["group_element"] = setup.check_member(g)
        except RealGITError as exc:
            raise ScenarioError(f"group_element: {exc}") from exc
    if "method" in raw:
        if raw["method"] not in ("closed", "numeric"):
            raise ScenarioError("method must be 'closed' or 'numeric'")
    out["method"] = raw.get("method", "closed")
    needs = {"classify": ("point",), "max-weight": ("point", "direction"), "flow": ("point", "direction"),
             "kempf-ness": ("point",), "stratify": ()}[command]
    for key in needs:
        if key not in out:
            raise ScenarioError(f"command {command} needs {key!r}")
    if command == "stratify" and "point" not in out and "points" not in out:
        raise ScenarioError("command stratify needs 'point' or 'points'")
    return out


# -- serialization


def jsonable(obj):
    """Plain JSON data; non-finite floats become strings, complex arrays split into re/im."""
    if isinstance(obj, ModelPoint):
        return jsonable(obj.reps)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
        return [jsonable(v) for v in obj.tolist()] if obj.ndim else jsonable(obj.item())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def certificate_dict(cert) -> dict:
    if isinstance(cert, Minimizer):
        return {"type": "Minimizer", "g": cert.g, "grad_norm": cert.grad_norm,
                "stabilizer_dim": cert.stabilizer_dim, "point": cert.point}
    if isinstance(cert, DestabilizingDirection):
        return {"type": "DestabilizingDirection", "beta": cert.beta, "weight": cert.weight}
    if isinstance(cert, ReductionChain):
        return {"type": "ReductionChain", "steps": [step_dict(s) for s in cert.steps],
                "terminal_point": cert.terminal_point, "terminal_grad_norm": cert.terminal_grad_norm,
                "terminal_g": cert.terminal_g}
    return {"type": type(cert).__name__}


def step_dict(step: ChainStep) -> dict:
    return {"beta": step.beta, "limit": step.limit, "weight": step.weight}


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_csv(report: dict) -> str:
    """key,value rows of the scalar leaves of the result, in sorted key order."""
    rows = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k in sorted(v):
                walk(f"{prefix}.{k}" if prefix else str(k), v[k])
        elif isinstance(v, list):
            for i, e in enumerate(v):
                walk(f"{prefix}[{i}]", e)
        else:
            rows.append((prefix, v))

    walk("", jsonable({k: v for k, v in report.items() if k != "scenario"}))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in rows:
        w.writerow([k, repr(v) if isinstance(v, float) else v])
    return buf.getvalue()


def export_trace(trajectory: FlowTrajectory, path: str) -> None:
    """CSV trace t,lambda,speed2,f with full double precision and LF endings."""
    if not trajectory.times:
        raise ValueError("refusing to export an empty trajectory")
    cols = (trajectory.times, trajectory.lambda_samples, trajectory.speed2_samples, trajectory.f_samples)
    if len({len(c) for c in cols}) != 1:
        raise ValueError("trajectory columns have different lengths")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "lambda", "speed2", "f"])
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


# -- commands


def _classify(sc: dict) -> dict:
    p = sc["params"]
    v = classify(sc["space"], sc["point"], tol=float(p["tol"]), budget=int(p["budget"]), count=int(p["sweep"]))
    return {"klass": v.klass, "certificate": certificate_dict(v.certificate), "descent_status": v.descent_status,
            "inf_grad_norm": v.inf_grad_norm, "iterations": v.iterations}


def _max_weight(sc: dict) -> dict:
    w = max_weight(sc["space"], sc["point"], sc["direction"], method=sc["method"], t=float(sc["params"]["t_max"]))
    return {"value": w.value, "method": w.method, "limit_point": w.limit_point, "energy": w.energy_value,
            "t_reached": w.t_reached}


def _flow(sc: dict, trace: str | None) -> dict:
    t_max = float(sc["params"]["t_max"])
    times = np.linspace(0.0, t_max, FLOW_SAMPLES)
    traj = sample_beta_flow(sc["space"], sc["point"], sc["direction"], times)
    if trace:
        export_trace(traj, trace)
    return {"status": traj.status, "times": traj.times, "lambda": traj.lambda_samples,
            "speed2": traj.speed2_samples, "f": traj.f_samples, "limit_point": traj.limit}


def _kempf_ness(sc: dict) -> dict:
    p = sc["params"]
    X, x = sc["space"], sc["point"]
    out = {}
    if "group_element" in sc:
        out["value"] = kn_value(X, x, sc["group_element"])
    d = kn_descend(X, x, tol=float(p["tol"]), budget=int(p["budget"]))
    out["descent"] = {"status": d.status, "final_grad_norm": d.final_grad_norm, "inf_grad_norm": d.inf_grad_norm,
                      "iterations": d.iterations, "phi": d.phi_value, "xi_norm": d.xi_norm,
                      "minimizer": d.minimizer, "point": d.point, "direction": d.direction}
    return out


def _stratify(sc: dict) -> dict:
    p = sc["params"]
    pts = sc.get("points") or [sc["point"]]
    labels = []
    for pt, lab in stratify(sc["space"], pts, tol=float(p["tol"]), budget=int(p["budget"])):
        if isinstance(lab, BudgetExceeded):
            labels.append({"point": pt, "status": "BudgetExceeded"})
        else:
            labels.append({"point": pt, "status": "Converged", "f_value": lab.f_value,
                           "orbit_key": list(lab.orbit_key), "critical_beta": lab.critical_beta})
    return {"labels": labels, "failures": sum(1 for lab in labels if lab["status"] != "Converged")}


def _verify(sc: dict) -> dict:
    from .verify import run_suite

    only = sc.get("criteria")
    if only is not None and (not isinstance(only, list) or not all(isinstance(k, int) for k in only)):
        raise ScenarioError("criteria must be a list of integers")
    return run_suite(int(sc["params"]["seed"]), only)


def execute(raw: dict, trace: str | None = None, timing: bool = False) -> dict:
    """Run one decoded scenario; returns the report (errors propagate)."""
    sc = parse_scenario(raw)
    start = time.perf_counter()
    cmd = sc["command"]
    if cmd == "classify":
        result = _classify(sc)
    elif cmd == "max-weight":
        result = _max_weight(sc)
    elif cmd == "flow":
        result = _flow(sc, trace)
    elif cmd == "kempf-ness":
        result = _kempf_ness(sc)
    elif cmd == "stratify":
        result = _stratify(sc)
    else:
        result = _verify(sc)
    report = {"version": __version__, "command": cmd, "scenario": raw, "parameters": sc["params"],
              "result": result}
    if timing:
        report["timing_seconds"] = time.perf_counter() - start
    return report


def run_scenario(path: str, overrides: dict | None = None, trace: str | None = None,
                 timing: bool = False) -> dict:
    """Load a JSON scenario file, apply parameter overrides and execute it."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    if overrides and isinstance(raw, dict):
        params = dict(raw.get("params", {}))
        params.update(overrides)
        raw = dict(raw, params=params)
    return execute(raw, trace=trace, timing=timing)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="realgit", description="Stability computations on matrix-group models.")
    ap.add_argument("scenario", help="path to a JSON scenario file")
    ap.add_argument("--tol", type=float, help=f"gradient-norm tolerance (default {DEFAULTS['tol']})")
    ap.add_argument("--t-max", dest="t_max", type=float, help=f"flow horizon (default {DEFAULTS['t_max']})")
    ap.add_argument("--budget", type=int, help=f"iteration budget (default {DEFAULTS['budget']})")
    ap.add_argument("--seed", type=int, help=f"seed for the verify suite (default {DEFAULTS['seed']})")
    ap.add_argument("--sweep", type=int, help=f"directions in weight sweeps (default {DEFAULTS['sweep']})")
    ap.add_argument("--trace", help="write the flow trace CSV to this path")
    ap.add_argument("--report", choices=("json", "csv"), default="json")
    ap.add_argument("--timing", action="store_true", help="add wall-clock time (breaks byte-identity)")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in DEFAULTS if getattr(args, k) is not None}
    code = EXIT_OK
    try:
        report = run_scenario(args.scenario, overrides, trace=args.trace, timing=args.timing)
    except ScenarioError as exc:
        print(f"realgit: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (BudgetExceeded, Undecided) as exc:
        print(f"realgit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (NumericFailure, Overflow, Diverged, NotFixed, OSError) as exc:
        print(f"realgit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RealGITError, ValueError) as exc:
        print(f"realgit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    if report["command"] == "verify" and not report["result"]["all_passed"]:
        code = EXIT_NUMERIC
    if report["command"] == "stratify" and report["result"]["failures"]:
        code = EXIT_BUDGET
    sys.stdout.write(dumps(report) if args.report == "json" else to_csv(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
