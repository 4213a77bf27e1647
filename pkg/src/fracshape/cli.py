"""Command line scenario runner.

Reads a JSON scenario config, runs the requested validation suite (formula vs
oracle, identity checks, property sweeps), and emits a JSON report plus an
optional CSV of per-point errors. Exit code 0 means every check passed, 1
means at least one failed, 2 means the config was unusable.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone

import numpy as np

from .core_math import FracParams
from .errors import ConfigError, FracshapeError
from .geometry import AffineFlow, BallDomain, VectorField, signed_distance
from .hadamard import (
    ShapeScenario,
    shape_deriv_green,
    shape_deriv_robin,
    shape_deriv_solution,
    solution_trace_profile,
)
from .operators import (
    SmoothBump,
    SourceTerm,
    duality_check,
    frozen_weight_identity,
    gradient_identity_check,
)
from .oracles import FDSchedule, oracle_green, oracle_robin, oracle_solution
from .props import run_property_suites

_DEFAULT_SEED = 20260815
_DEFAULT_TOL = {
    "green": 1e-3,
    "solution": None,  # resolved from the source kind
    "robin": 1e-3,
    "identity": 2e-2,
    "duality": 1e-3,
    "gradient": 1e-3,
    "representation": 1e-3,
    "absolute": 1e-6,
}
_ZERO_REFERENCE = 1e-9  # |oracle| below this switches the check to absolute mode


# -- config ------------------------------------------------------------------


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _expect_keys(obj: dict, path: str, allowed: set[str], required: set[str] = frozenset()):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    for k in obj:
        if k not in allowed:
            _fail(f"{path}.{k}", f"unknown field (allowed: {', '.join(sorted(allowed))})")
    for k in required:
        if k not in obj:
            _fail(f"{path}.{k}", "required field is missing")


def _as_number(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {type(v).__name__}")
    return float(v)


def _as_vector(v, dim: int, path: str) -> np.ndarray:
    if not isinstance(v, list) or len(v) != dim:
        _fail(path, f"expected a list of {dim} numbers")
    return np.array([_as_number(q, f"{path}[{i}]") for i, q in enumerate(v)])


class Scenario:
    """Validated scenario: parsed objects plus the normalized config echo."""

    def __init__(self, raw: dict, seed_override: int | None = None):
        _expect_keys(
            raw,
            "config",
            {
                "dimension", "s", "ball", "flow", "source", "points", "pairs",
                "orders", "fd", "tolerances", "seed", "identity", "duality",
            },
            {"dimension", "s", "flow"},
        )
        dim = raw["dimension"]
        if dim not in (1, 2, 3):
            _fail("config.dimension", f"must be 1, 2, or 3, got {dim!r}")
        s = _as_number(raw["s"], "config.s")
        try:
            self.params = FracParams(dim, s)
        except FracshapeError as exc:
            _fail("config.s", str(exc))

        ball = raw.get("ball", {"center": [0.0] * dim, "radius": 1.0})
        _expect_keys(ball, "config.ball", {"center", "radius"})
        center = _as_vector(ball.get("center", [0.0] * dim), dim, "config.ball.center")
        radius = _as_number(ball.get("radius", 1.0), "config.ball.radius")
        if radius <= 0:
            _fail("config.ball.radius", "must be positive")
        self.domain = BallDomain(center, radius)

        self.flow = self._parse_flow(raw["flow"], dim)
        self.source = self._parse_source(raw.get("source", {"kind": "constant", "value": 1.0}), dim)

        orders = raw.get("orders", {})
        _expect_keys(orders, "config.orders", {"boundary", "volume", "solve"})
        self.orders = {k: orders.get(k) for k in ("boundary", "volume", "solve")}
        for k, v in self.orders.items():
            if v is not None and (not isinstance(v, int) or v < 2):
                _fail(f"config.orders.{k}", "must be an integer >= 2 or null")

        fd = raw.get("fd", {})
        _expect_keys(fd, "config.fd", {"t0", "levels", "ratio_tol", "noise_floor"})
        try:
            self.schedule = FDSchedule(**{k: fd[k] for k in fd})
        except (FracshapeError, TypeError) as exc:
            _fail("config.fd", str(exc))

        tol = dict(_DEFAULT_TOL)
        user_tol = raw.get("tolerances", {})
        _expect_keys(user_tol, "config.tolerances", set(_DEFAULT_TOL))
        for k, v in user_tol.items():
            tol[k] = _as_number(v, f"config.tolerances.{k}")
        if tol["solution"] is None:
            tol["solution"] = 1e-3 if self.source.is_constant else 5e-3
        self.tolerances = tol

        seed = raw.get("seed", _DEFAULT_SEED)
        if not isinstance(seed, int) or seed < 0:
            _fail("config.seed", "must be a nonnegative integer")
        self.seed = seed_override if seed_override is not None else seed

        self.points = self._parse_points(raw.get("points"), "config.points")
        self.pairs = self._parse_pairs(raw.get("pairs"))
        self.identity_spec = self._parse_identity(raw.get("identity", {}))
        self.duality_spec = self._parse_duality(raw.get("duality", {}))

        self.echo = self._echo(raw)

    def _parse_flow(self, spec, dim) -> AffineFlow:
        _expect_keys(spec, "config.flow", {"kind", "vector", "rate", "scale_rate", "shift_rate"}, {"kind"})
        kind = spec["kind"]
        if kind == "translation":
            v = _as_vector(spec.get("vector", [1.0] + [0.0] * (dim - 1)), dim, "config.flow.vector")
            return AffineFlow.translation(v)
        if kind == "dilation":
            return AffineFlow.dilation(dim, _as_number(spec.get("rate", 1.0), "config.flow.rate"))
        if kind == "affine":
            a = _as_number(spec.get("scale_rate", 0.0), "config.flow.scale_rate")
            v = _as_vector(spec.get("shift_rate", [0.0] * dim), dim, "config.flow.shift_rate")
            return AffineFlow(a, v)
        _fail("config.flow.kind", f"expected translation, dilation, or affine, got {kind!r}")

    def _parse_source(self, spec, dim) -> SourceTerm:
        _expect_keys(spec, "config.source", {"kind", "value", "offset", "slope"}, {"kind"})
        kind = spec["kind"]
        if kind == "constant":
            return SourceTerm.constant(_as_number(spec.get("value", 1.0), "config.source.value"), dim)
        if kind == "affine":
            offset = _as_number(spec.get("offset", 1.0), "config.source.offset")
            slope = _as_vector(spec.get("slope", [0.5] + [0.0] * (dim - 1)), dim, "config.source.slope")
            return SourceTerm.affine(offset, slope)
        _fail("config.source.kind", f"expected constant or affine, got {kind!r}")

    def _parse_points(self, spec, path, count=5):
        dim = self.params.dim
        if spec is None:
            return self._default_points(count)
        if not isinstance(spec, list) or not spec:
            _fail(path, "expected a nonempty list of points")
        pts = np.array([_as_vector(q, dim, f"{path}[{i}]") for i, q in enumerate(spec)])
        margins = signed_distance(self.domain, pts)
        if np.any(margins <= 0):
            _fail(path, "every evaluation point must lie strictly inside the ball")
        return pts

    def _parse_pairs(self, spec):
        dim = self.params.dim
        if spec is None:
            rng = np.random.default_rng(self.seed + 1)
            pairs = []
            while len(pairs) < 5:
                x = self._draw_point(rng)
                y = self._draw_point(rng)
                if np.linalg.norm(x - y) >= 0.2 * self.domain.radius:
                    pairs.append((x, y))
            return pairs
        if not isinstance(spec, list) or not spec:
            _fail("config.pairs", "expected a nonempty list of [x, y] pairs")
        pairs = []
        for i, item in enumerate(spec):
            if not isinstance(item, list) or len(item) != 2:
                _fail(f"config.pairs[{i}]", "expected [x, y]")
            x = _as_vector(item[0], dim, f"config.pairs[{i}][0]")
            y = _as_vector(item[1], dim, f"config.pairs[{i}][1]")
            if signed_distance(self.domain, x) <= 0 or signed_distance(self.domain, y) <= 0:
                _fail(f"config.pairs[{i}]", "both points must lie strictly inside the ball")
            pairs.append((x, y))
        return pairs

    def _draw_point(self, rng):
        d, r = self.domain, self.domain.radius
        while True:
            q = d.center + rng.uniform(-0.7 * r, 0.7 * r, self.params.dim)
            if signed_distance(d, q) >= 0.25 * r:
                return q

    def _default_points(self, count):
        """Seeded interior points with a safe margin and mild separation."""
        rng = np.random.default_rng(self.seed)
        r = self.domain.radius
        # keep the separation demand feasible in one dimension
        sep = (0.15 if self.params.dim == 1 else 0.2) * r
        pts = []
        while len(pts) < count:
            q = self._draw_point(rng)
            if all(np.linalg.norm(q - p) >= sep for p in pts):
                pts.append(q)
        return np.array(pts)

    def _parse_identity(self, spec):
        _expect_keys(spec, "config.identity", {"widths", "fields", "base_point", "bump_center"})
        widths = spec.get("widths", [0.35, 0.5, 0.65])
        if not isinstance(widths, list) or not widths:
            _fail("config.identity.widths", "expected a nonempty list")
        widths = [_as_number(w, f"config.identity.widths[{i}]") for i, w in enumerate(widths)]
        if any(w <= 0 for w in widths):
            _fail("config.identity.widths", "widths must be positive")
        kinds = spec.get("fields", ["identity", "random"])
        for i, k in enumerate(kinds):
            if k not in ("identity", "random"):
                _fail(f"config.identity.fields[{i}]", f"expected identity or random, got {k!r}")
        dim = self.params.dim
        base = _as_vector(spec.get("base_point", [0.0] * dim), dim, "config.identity.base_point")
        ctr = _as_vector(spec.get("bump_center", [0.1] + [0.0] * (dim - 1)), dim, "config.identity.bump_center")
        return {"widths": widths, "fields": kinds, "base_point": base, "bump_center": ctr}

    def _parse_duality(self, spec):
        _expect_keys(spec, "config.duality", {"functions"})
        names = spec.get("functions", ["one", "normal-first"])
        for i, nm in enumerate(names):
            if nm not in ("one", "normal-first"):
                _fail(f"config.duality.functions[{i}]", f"expected one or normal-first, got {nm!r}")
        return {"functions": names}

    def _echo(self, raw) -> dict:
        """Normalized config with defaults filled; reparsing it is a no-op."""
        return {
            "dimension": self.params.dim,
            "s": self.params.s,
            "ball": {"center": self.domain.center.tolist(), "radius": self.domain.radius},
            "flow": {
                "kind": "affine",
                "scale_rate": self.flow.scale_rate,
                "shift_rate": self.flow.shift_rate.tolist(),
            },
            "source": {
                "kind": "affine",
                "offset": self.source.offset,
                "slope": self.source.slope.tolist(),
            },
            "points": self.points.tolist(),
            "pairs": [[x.tolist(), y.tolist()] for x, y in self.pairs],
            "orders": self.orders,
            "fd": {
                "t0": self.schedule.t0,
                "levels": self.schedule.levels,
                "ratio_tol": self.schedule.ratio_tol,
                "noise_floor": self.schedule.noise_floor,
            },
            "tolerances": self.tolerances,
            "seed": self.seed,
            "identity": {
                "widths": self.identity_spec["widths"],
                "fields": list(self.identity_spec["fields"]),
                "base_point": self.identity_spec["base_point"].tolist(),
                "bump_center": self.identity_spec["bump_center"].tolist(),
            },
            "duality": {"functions": list(self.duality_spec["functions"])},
        }

    def shape_scenario(self) -> ShapeScenario:
        return ShapeScenario(self.domain, self.flow, self.params, boundary_order=self.orders["boundary"])


# -- checks ------------------------------------------------------------------


def _record(name, point, formula, oracle, tol_rel, tol_abs, runtime):
    absolute = abs(oracle) < _ZERO_REFERENCE
    abs_err = abs(formula - oracle)
    rel_err = abs_err / abs(oracle) if not absolute else None
    passed = abs_err <= tol_abs if absolute else rel_err <= tol_rel
    return {
        "name": name,
        "point": point,
        "formula_value": formula,
        "oracle_value": oracle,
        "abs_error": abs_err,
        "rel_error": rel_err,
        "tolerance": tol_abs if absolute else tol_rel,
        "mode": "absolute" if absolute else "relative",
        "pass": bool(passed),
        "runtime_s": runtime,
    }


def _error_record(name, point, exc, runtime):
    return {
        "name": name,
        "point": point,
        "formula_value": None,
        "oracle_value": None,
        "abs_error": None,
        "rel_error": None,
        "tolerance": None,
        "mode": "error",
        "pass": False,
        "error": f"{type(exc).__name__}: {exc}",
        "runtime_s": runtime,
    }


def _guarded(name, point, tol_rel, tol_abs, compute):
    t0 = time.perf_counter()
    try:
        formula, oracle = compute()
    except FracshapeError as exc:
        return _error_record(name, point, exc, time.perf_counter() - t0)
    return _record(name, point, float(formula), float(oracle), tol_rel, tol_abs, time.perf_counter() - t0)


def run_green(cfg: Scenario) -> list[dict]:
    sc = cfg.shape_scenario()
    tol, tol_abs = cfg.tolerances["green"], cfg.tolerances["absolute"]
    out = []
    for i, (x, y) in enumerate(cfg.pairs):
        out.append(
            _guarded(
                f"green[{i}]",
                [x.tolist(), y.tolist()],
                tol,
                tol_abs,
                lambda x=x, y=y: (shape_deriv_green(sc, x, y), oracle_green(sc, x, y, cfg.schedule)),
            )
        )
    return out


def run_solution(cfg: Scenario) -> list[dict]:
    sc = cfg.shape_scenario()
    tol, tol_abs = cfg.tolerances["solution"], cfg.tolerances["absolute"]
    profile, method = solution_trace_profile(sc, cfg.source, solve_order=cfg.orders["solve"])
    out = []
    for i, x in enumerate(cfg.points):
        out.append(
            _guarded(
                f"solution[{i}]({method})",
                x.tolist(),
                tol,
                tol_abs,
                lambda x=x: (
                    shape_deriv_solution(sc, cfg.source, x, trace_profile=profile),
                    oracle_solution(sc, cfg.source, x, cfg.schedule, volume_order=cfg.orders["volume"]),
                ),
            )
        )
    return out


def run_robin(cfg: Scenario) -> list[dict]:
    sc = cfg.shape_scenario()
    tol, tol_abs = cfg.tolerances["robin"], cfg.tolerances["absolute"]
    out = []
    for i, x in enumerate(cfg.points):
        out.append(
            _guarded(
                f"robin[{i}]",
                x.tolist(),
                tol,
                tol_abs,
                lambda x=x: (shape_deriv_robin(sc, x), oracle_robin(sc, x, cfg.schedule)),
            )
        )
    pure_dilation = (
        cfg.flow.scale_rate != 0.0
        and not np.any(cfg.flow.shift_rate)
        and not np.any(cfg.domain.center)
    )
    if pure_dilation:
        p, a = cfg.params, cfg.flow.scale_rate
        for i, x in enumerate(cfg.points):
            def law(x=x):
                g = sc.green
                closed = a * ((2.0 * p.s - p.dim) * g.robin(x) - float(g.robin_grad(x) @ x))
                return shape_deriv_robin(sc, x), closed
            out.append(_guarded(f"robin-dilation-law[{i}]", x.tolist(), tol, tol_abs, law))
    return out


def run_identity(cfg: Scenario) -> list[dict]:
    """Far-field frozen-weight identity, lhs vs rhs."""
    spec = cfg.identity_spec
    p = cfg.params
    tol, tol_abs = cfg.tolerances["identity"], cfg.tolerances["absolute"]
    rng = np.random.default_rng(cfg.seed)
    out = []
    for kind in spec["fields"]:
        if kind == "identity":
            field = VectorField.linear(np.eye(p.dim))
        else:
            field = VectorField.linear(rng.normal(size=(p.dim, p.dim)))
        for w in spec["widths"]:
            bump = SmoothBump(spec["bump_center"], w)
            name = f"identity[{kind},width={w:g}]"
            meta = {"width": w, "field": kind, "base_point": spec["base_point"].tolist()}
            out.append(
                _guarded(
                    name,
                    meta,
                    tol,
                    tol_abs,
                    lambda bump=bump, field=field: frozen_weight_identity(
                        bump, field, spec["base_point"], p
                    ),
                )
            )
    return out


def run_duality(cfg: Scenario) -> list[dict]:
    p = cfg.params
    tol, tol_abs = cfg.tolerances["duality"], cfg.tolerances["absolute"]
    named = {
        "one": lambda nodes, normals: np.ones(len(nodes)),
        "normal-first": lambda nodes, normals: normals[:, 0],
    }
    out = []
    for nm in cfg.duality_spec["functions"]:
        out.append(
            _guarded(
                f"duality[{nm}]",
                nm,
                tol,
                tol_abs,
                lambda nm=nm: duality_check(
                    cfg.domain,
                    named[nm],
                    cfg.source,
                    p,
                    boundary_order=cfg.orders["boundary"],
                    volume_order=cfg.orders["volume"],
                    solve_order=cfg.orders["solve"],
                ),
            )
        )
    return out


def run_gradient_identity(cfg: Scenario) -> list[dict]:
    p = cfg.params
    tol, tol_abs = cfg.tolerances["gradient"], cfg.tolerances["absolute"]
    field = cfg.flow.generator()
    out = []
    for i, x in enumerate(cfg.points):
        out.append(
            _guarded(
                f"gradient-identity[{i}]",
                x.tolist(),
                tol,
                tol_abs,
                lambda x=x: gradient_identity_check(
                    cfg.domain, cfg.source, field, x, p, volume_order=cfg.orders["volume"]
                ),
            )
        )
    return out


def run_props(cfg: Scenario | None, seed: int) -> list[dict]:
    t0 = time.perf_counter()
    results = run_property_suites(seed=seed)
    per_check = (time.perf_counter() - t0) / max(len(results), 1)
    out = []
    for r in results:
        out.append(
            {
                "name": f"props:{r.name}",
                "point": None,
                "formula_value": r.observed,
                "oracle_value": r.bound,
                "abs_error": max(r.observed - r.bound, 0.0),
                "rel_error": r.observed / r.bound,
                "tolerance": r.bound,
                "mode": "sweep",
                "pass": r.passed,
                "samples": r.samples,
                "violations": r.violations,
                "runtime_s": per_check,
            }
        )
    return out


_RUNNERS = {
    "green": run_green,
    "solution": run_solution,
    "robin": run_robin,
    "appendix-c": run_identity,
    "duality": run_duality,
    "gradient-identity": run_gradient_identity,
}
_ALL_ORDER = ("green", "solution", "robin", "appendix-c", "duality", "gradient-identity", "props")


# -- report ------------------------------------------------------------------


def _json_text(obj, indent=0) -> str:
    """Deterministic JSON: insertion order kept, floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [f"{inner}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        rows = [f"{inner}{_json_text(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not np.isfinite(obj):
            return json.dumps(None)
        return format(obj, ".17g")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return json.dumps(obj)


def _build_report(command, cfg: Scenario | None, checks, no_timestamp: bool) -> dict:
    if no_timestamp:
        checks = [dict(c, runtime_s=0.0) for c in checks]
    passed = sum(1 for c in checks if c["pass"])
    report = {
        "command": command,
        "config": cfg.echo if cfg is not None else None,
        "checks": checks,
        "summary": {
            "total": len(checks),
            "passed": passed,
            "failed": len(checks) - passed,
            "runtime_s": 0.0 if no_timestamp else sum(c["runtime_s"] for c in checks),
        },
    }
    if not no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    return report


def _write_csv(path: str, checks: list[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "point", "formula", "oracle", "abs_err", "rel_err", "pass"])
        for c in checks:
            writer.writerow(
                [
                    c["name"],
                    json.dumps(c["point"]),
                    "" if c["formula_value"] is None else format(c["formula_value"], ".17g"),
                    "" if c["oracle_value"] is None else format(c["oracle_value"], ".17g"),
                    "" if c["abs_error"] is None else format(c["abs_error"], ".17g"),
                    "" if c["rel_error"] is None else format(c["rel_error"], ".17g"),
                    str(c["pass"]).lower(),
                ]
            )


# -- entry point ---------------------------------------------------------------


def _load_config(path: str, seed_override) -> Scenario:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return Scenario(raw, seed_override)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracshape",
        description="Validate fractional Hadamard shape-derivative formulas against oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    help_by_command = {
        "green": "shape derivative of the Green function vs finite-difference oracle",
        "solution": "shape derivative of the Dirichlet solution vs oracle",
        "robin": "shape derivative of the Robin function vs oracle",
        "appendix-c": "far-field frozen-weight identity, lhs vs rhs",
        "duality": "boundary/volume pairing identity",
        "gradient-identity": "volume transport identity vs directional derivative",
        "props": "seeded property sweeps at the frozen constants",
        "all": "every suite above, in a fixed order",
    }
    for name, blurb in help_by_command.items():
        sp = sub.add_parser(name, help=blurb)
        sp.add_argument("--config", required=(name != "props"), help="JSON scenario file")
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--csv", help="also write a per-check CSV table")
        sp.add_argument("--seed", type=int, help="override the config RNG seed")
        sp.add_argument(
            "--no-timestamp",
            action="store_true",
            help="omit timestamp and zero runtimes for byte-identical reports",
        )
    args = parser.parse_args(argv)

    try:
        if args.command == "props" and args.config is None:
            cfg = None
            seed = args.seed if args.seed is not None else _DEFAULT_SEED
        else:
            cfg = _load_config(args.config, args.seed)
            seed = cfg.seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "props":
            checks = run_props(cfg, seed)
        elif args.command == "all":
            checks = []
            for name in _ALL_ORDER:
                checks.extend(run_props(cfg, seed) if name == "props" else _RUNNERS[name](cfg))
        else:
            checks = _RUNNERS[args.command](cfg)
    except FracshapeError as exc:
        # scenario-level failures (not per-check ones) still mean a bad setup
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    report = _build_report(args.command, cfg, checks, args.no_timestamp)
    text = _json_text(report) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        _write_csv(args.csv, report["checks"])
    return 0 if report["summary"]["failed"] == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
