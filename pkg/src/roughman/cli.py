"""Scenario runner: drivers, fields and charts from a config file, checks, solves and CSV artifacts.

Config files are flat ``key = value`` text with ``[section]`` headers and
``#`` comments::

    [scenario]
    fields = circle_rot_corrected   # built-in id, or "external"
    x_mode = from_driver_bracket    # or "explicit" (with x = ...) or "zero"
    tol = 1e-8
    seeds = 8
    seed = 0

    [fields]                        # keyword arguments of the built-in builder
    drift = -0.5

    [driver]
    kind = ito_wiener               # ito_wiener, geometric_fbm, pure_area, smooth
    lambdas = 1

    [signal]
    T = 1
    N = 256
    refine = 16

See the README for every key. Command-line flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import importlib.util
import inspect
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, NonFinite, RoughmanError
from .manifold import check_invariance, distance_monitor, validate_chart
from .rde import VectorFieldSet, fd_jacobian, reduced_vs_ambient, solve, write_solution_csv
from .refinement import EXACT_FLOOR, LEVELS, observed_order, pairwise_orders, vanishes_under_refinement
from .roughpath import bracket, coarsen
from .scenarios import BUILTINS, affine_chart, builtin, circle_chart, halfline_chart, sphere_chart
from .signals import QSpec, SignalConfig, geometric_fbm_lift, ito_wiener_lift, pure_area_path, smooth_lift

DRIVERS = ("ito_wiener", "geometric_fbm", "pure_area", "smooth")
X_MODES = ("from_driver_bracket", "explicit", "zero")
CHARTS = {"circle": circle_chart, "sphere": sphere_chart, "plane": affine_chart, "halfline": halfline_chart}
MIN_LINEARITY = 0.99
# external fields: central-difference Jacobians at two step sizes must agree to this
FD_AGREEMENT = 1e-5

SECTIONS = {
    "scenario": {"name", "fields", "chart", "xi", "x_mode", "x", "tol", "seeds", "seed"},
    "fields": None,  # builder keyword arguments, checked against its signature
    "driver": {"kind", "lambdas", "hurst", "symmetric_part", "fbm_method", "area", "amplitude"},
    "signal": {"T", "N", "refine"},
}


@dataclass
class RunConfig:
    fields: str = "circle_rot_corrected"
    name: Optional[str] = None
    field_kwargs: dict = field(default_factory=dict)
    external: Optional[str] = None
    chart: Optional[str] = None
    xi: Optional[tuple] = None
    x_mode: str = "from_driver_bracket"
    x: Optional[tuple] = None
    tol: float = 1e-8
    seeds: int = 8
    seed: int = 0
    driver: str = "ito_wiener"
    lambdas: Optional[tuple] = None
    hurst: Optional[float] = None
    symmetric_part: str = "exact"
    fbm_method: str = "circulant"
    area: Optional[tuple] = None
    amplitude: float = 1.0
    T: float = 1.0
    N: int = 256
    refine: int = 16
    jobs: int = 1
    source: Optional[Path] = None

    @property
    def label(self):
        return self.name or self.fields


# config parsing -----------------------------------------------------------


def _floats(text):
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ValueError(f"expected numbers, got {text!r}") from exc


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


_PARSERS = {
    ("scenario", "name"): str,
    ("scenario", "fields"): str,
    ("scenario", "chart"): _choice(tuple(CHARTS)),
    ("scenario", "xi"): _floats,
    ("scenario", "x_mode"): _choice(X_MODES),
    ("scenario", "x"): _floats,
    ("scenario", "tol"): float,
    ("scenario", "seeds"): _int,
    ("scenario", "seed"): _int,
    ("driver", "kind"): _choice(DRIVERS),
    ("driver", "lambdas"): _floats,
    ("driver", "hurst"): float,
    ("driver", "symmetric_part"): _choice(("exact", "left_point")),
    ("driver", "fbm_method"): _choice(("circulant", "cholesky")),
    ("driver", "area"): _floats,
    ("driver", "amplitude"): float,
    ("signal", "T"): float,
    ("signal", "N"): _int,
    ("signal", "refine"): _int,
}

_ATTR = {("scenario", "fields"): "fields", ("driver", "kind"): "driver"}


def parse_config(text, source=None):
    """Parse config text into a :class:`RunConfig`; errors name the line and field."""
    cfg = RunConfig(source=source)
    section = None
    seen = set()
    field_lines = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = (s.strip() for s in line.split("=", 1))
        if (section, key) in seen:
            raise ConfigError(f"line {lineno}: field '{key}' repeated in [{section}]")
        seen.add((section, key))
        if section == "fields":
            field_lines[key] = lineno
            if key == "source":
                cfg.external = value
            elif key == "d":
                try:
                    cfg.field_kwargs[key] = _int(value)
                except ValueError as exc:
                    raise ConfigError(f"line {lineno}: field 'd': {exc}") from None
            else:
                try:
                    vals = _floats(value)
                except ValueError as exc:
                    raise ConfigError(f"line {lineno}: field '{key}': {exc}") from None
                cfg.field_kwargs[key] = vals[0] if len(vals) == 1 else vals
            continue
        if key not in SECTIONS[section]:
            raise ConfigError(f"line {lineno}: unknown field '{key}' in [{section}]")
        try:
            parsed = _PARSERS[(section, key)](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: field '{key}': {exc}") from None
        setattr(cfg, _ATTR.get((section, key), key), parsed)
    if cfg.fields == "external":
        if cfg.external is None:
            raise ConfigError("field 'source': external fields need [fields] source = <file.py>")
        if cfg.chart is None:
            raise ConfigError("field 'chart': external fields need a built-in chart id")
        cfg.field_kwargs = {k: v for k, v in cfg.field_kwargs.items() if k == "d"}
    elif cfg.fields in BUILTINS:
        params = inspect.signature(BUILTINS[cfg.fields]).parameters
        for key in cfg.field_kwargs:
            if key not in params:
                raise ConfigError(f"line {field_lines[key]}: field '{key}' is not a parameter of {cfg.fields}")
    else:
        raise ConfigError(f"field 'fields': unknown built-in {cfg.fields!r}; choose from {sorted(BUILTINS)}")
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror}") from None
    return parse_config(text, source=path)


def validate(cfg):
    """Range checks shared by file and flag input."""
    if cfg.seeds < 1:
        raise ConfigError("field 'seeds': need at least one seed")
    if cfg.seed < 0:
        raise ConfigError("field 'seed': must be nonnegative")
    if not cfg.tol > 0:
        raise ConfigError("field 'tol': must be positive")
    if cfg.N < 2 or cfg.N & (cfg.N - 1):
        raise ConfigError("field 'N': grid size must be a power of two")
    if cfg.refine < 16 or cfg.refine & (cfg.refine - 1):
        raise ConfigError("field 'refine': must be a power of two >= 16")
    if not cfg.T > 0:
        raise ConfigError("field 'T': horizon must be positive")
    if cfg.x_mode == "explicit" and cfg.x is None:
        raise ConfigError("field 'x': x_mode = explicit needs x = ...")
    if cfg.driver == "pure_area" and cfg.area is None:
        raise ConfigError("field 'area': the pure_area driver needs area = ...")
    if cfg.hurst is not None and cfg.driver == "ito_wiener" and cfg.hurst != 0.5:
        raise ConfigError("field 'hurst': the ito_wiener driver needs H = 0.5")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be positive")


# scenario assembly ---------------------------------------------------------


def _load_external(cfg, n, d):
    path = Path(cfg.external)
    if not path.is_absolute() and cfg.source is not None:
        path = Path(cfg.source).parent / path
    spec = importlib.util.spec_from_file_location("roughman_external_fields", path)
    if spec is None or not path.exists():
        raise ConfigError(f"field 'source': cannot load {path}")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    for name in ("f0", "f"):
        if not callable(getattr(mod, name, None)):
            raise ConfigError(f"field 'source': {path} must define {name}(y)")
    return VectorFieldSet.from_functions(mod.f0, mod.f, n, d)


def _check_numeric_fields(vf, chart):
    """Central differences at two step sizes must agree at every probe point."""
    worst = 0.0
    for z in chart.probe:
        y = np.asarray(chart.phi(z), dtype=float)
        for k in range(vf.d):
            a = fd_jacobian(lambda u: vf.fmat(u)[:, k], y, 1e-6)
            b = fd_jacobian(lambda u: vf.fmat(u)[:, k], y, 1e-4)
            worst = max(worst, float(np.max(np.abs(a - b))))
    if worst > FD_AGREEMENT:
        raise ConfigError(f"field 'source': finite-difference Jacobians disagree by {worst:.3g}; "
                          "fields look non-smooth")
    return worst


def build_problem(cfg):
    """Fields, chart, initial point and noise dimension for a config."""
    if cfg.fields == "external":
        chart = CHARTS[cfg.chart]()
        d = len(cfg.lambdas) if cfg.lambdas else int(cfg.field_kwargs.get("d", 1))
        vf = _load_external(cfg, chart.n, d)
        xi = np.asarray(chart.phi(np.zeros(chart.m)), dtype=float)
    else:
        try:
            sc = builtin(cfg.fields, **cfg.field_kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[fields] for {cfg.fields}: {exc}") from None
        vf, chart, xi = sc.fields, sc.chart, sc.xi
    if cfg.xi is not None:
        xi = np.asarray(cfg.xi, dtype=float)
        if xi.shape != (vf.n,):
            raise ConfigError(f"field 'xi': need {vf.n} coordinates, got {xi.size}")
    if cfg.lambdas is not None and len(cfg.lambdas) != vf.d:
        raise ConfigError(f"field 'lambdas': fields have {vf.d} noise directions, got {len(cfg.lambdas)}")
    return vf, chart, xi


def _square(vals, d, key):
    a = np.asarray(vals, dtype=float)
    if a.size == d * d:
        return a.reshape(d, d)
    if a.size == d:
        return np.diag(a)
    raise ConfigError(f"field '{key}': need {d} diagonal or {d * d} entries, got {a.size}")


def top_grid(cfg):
    return max(cfg.N, LEVELS[-1])


def make_driver(cfg, d, seed):
    """Rough path on the finest grid used by the run (``max(N, 2048)`` steps)."""
    n_top = top_grid(cfg)
    lambdas = cfg.lambdas if cfg.lambdas is not None else (1.0,) * d
    c = SignalConfig(T=cfg.T, N=n_top, refine=cfg.refine, seed=seed)
    if cfg.driver == "ito_wiener":
        return ito_wiener_lift(QSpec(lambdas, 0.5), c, symmetric_part=cfg.symmetric_part)
    if cfg.driver == "geometric_fbm":
        q = QSpec(lambdas, 0.5 if cfg.hurst is None else cfg.hurst)
        return geometric_fbm_lift(q, c, method=cfg.fbm_method)
    if cfg.driver == "pure_area":
        return pure_area_path(_square(cfg.area, d, "area"), cfg.T, n_top)
    # smooth: sines with seed-dependent phases, scaled by sqrt(lambda)
    phase = np.random.default_rng(seed).uniform(0.0, 2 * np.pi, d)
    freq = np.arange(1, d + 1)
    scale = cfg.amplitude * np.sqrt(np.asarray(lambdas, dtype=float))

    def path(t):
        t = np.asarray(t)[:, None]
        return scale * (np.sin(2 * np.pi * freq * t / cfg.T + phase) - np.sin(phase))

    return smooth_lift(path, c)


def bracket_fit(drivers, n):
    """Mean bracket slope over seeds at grid ``n`` and the worst linearity (R^2)."""
    slopes, r2 = [], []
    for p in drivers:
        bp = bracket(coarsen(p, p.N // n))
        slopes.append(np.zeros((p.d, p.d)) if bp.is_zero else bp.slope())
        r2.append(bp.linearity())
    x = np.mean(slopes, axis=0)
    return 0.5 * (x + x.T), float(min(r2))


# per-seed work -------------------------------------------------------------


@dataclass
class SeedResult:
    seed: int
    defects: dict
    gaps: dict
    solution: object = None
    distance: object = None
    failure: Optional[str] = None

    def at(self, n):
        return self.defects[n], self.gaps[n]


def _seed_work(vf, chart, xi, x, tol, invariant, levels, grid, p_fine, seed):
    defects, gaps = {}, {}
    res = SeedResult(seed, defects, gaps)
    reducible = invariant and chart.contains(chart.coords(xi))
    for n in sorted(set(levels) | {grid}):
        p = coarsen(p_fine, p_fine.N // n)
        try:
            sol = solve(vf, p, xi)
        except NonFinite as exc:
            defects[n] = float("inf")
            gaps[n] = float("nan")
            if n == grid:
                res.failure = str(exc)
            continue
        dist = distance_monitor(sol, chart)
        defects[n] = dist.max_defect
        if n == grid:
            res.solution, res.distance = sol, dist
        gaps[n] = float("nan")
        if reducible:
            try:
                gaps[n] = reduced_vs_ambient(vf, chart, p, xi, x, tol).gap
            except (RoughmanError, ValueError):
                pass
    return res


# artifacts -----------------------------------------------------------------


def _g(v):
    return format(float(v), ".17g")


@dataclass
class RunResult:
    verdict: object
    x: np.ndarray
    seeds: list
    roundtrip: bool
    lines: list

    @property
    def exit_code(self):
        return 0 if self.roundtrip else 2


def run(cfg, out):
    """Execute a scenario and write its artifact bundle into ``out``."""
    validate(cfg)
    vf, chart, xi = build_problem(cfg)
    validate_chart(chart)
    lines = [f"scenario {cfg.label} fields={cfg.fields} driver={cfg.driver} chart={chart.name}"]
    if vf.numeric:
        worst = _check_numeric_fields(vf, chart)
        lines.append(f"numeric_jacobian=true (lower accuracy) fd_agreement={_g(worst)}")

    seeds = [cfg.seed + k for k in range(cfg.seeds)]
    drivers = [make_driver(cfg, vf.d, s) for s in seeds]

    if cfg.x_mode == "zero":
        x = np.zeros((vf.d, vf.d))
    elif cfg.x_mode == "explicit":
        x = _square(cfg.x, vf.d, "x")
    else:
        x, r2 = bracket_fit(drivers, cfg.N)
        lines.append(f"bracket_fit r2_min={_g(r2)}")
        if r2 < MIN_LINEARITY:
            raise ConfigError(f"field 'x_mode': driver bracket is not linear in t (R^2 = {r2:.4f} < "
                              f"{MIN_LINEARITY}); use x_mode = explicit")
    lines.append("x=[" + " ".join(_g(v) for v in x.ravel()) + "]")

    verdict = check_invariance(vf, chart, x, cfg.tol)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verdict.txt").write_text(verdict.report())

    def work(args):
        s, p = args
        return _seed_work(vf, chart, xi, x, cfg.tol, verdict.invariant, LEVELS, cfg.N, p, s)

    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(work, zip(seeds, drivers)))

    for r in results:
        if r.solution is not None:
            write_solution_csv(r.solution, out / f"solution_seed{r.seed}.csv", r.distance.defect)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "max_defect", "final_defect", "reduced_vs_ambient_gap"])
        for r in results:
            final = r.distance.final_defect if r.distance is not None else float("inf")
            w.writerow([r.seed, _g(r.defects[cfg.N]), _g(final), _g(r.gaps[cfg.N])])
    _write_refinement(out / "refinement.csv", results)

    ok, detail = roundtrip(verdict, results, cfg.T)
    lines.append(f"verdict invariant={str(verdict.invariant).lower()} max_residual={_g(verdict.max_residual)} "
                 f"tol={_g(cfg.tol)}")
    lines.extend(detail)
    lines.append(f"ROUNDTRIP holds={str(ok).lower()} exit={0 if ok else 2}")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    return RunResult(verdict, x, results, ok, lines)


def _write_refinement(path, results):
    ns = list(LEVELS)
    mean_def = [float(np.mean([r.defects[n] for r in results])) for n in ns]
    worst_def = [float(np.max([r.defects[n] for r in results])) for n in ns]
    gaps = [float(np.mean([r.gaps[n] for r in results])) for n in ns]
    with np.errstate(all="ignore"):
        o_def = [float("nan")] + list(pairwise_orders(ns, mean_def))
        o_gap = [float("nan")] + list(pairwise_orders(ns, gaps))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "mean_max_defect", "worst_max_defect", "order_defect", "mean_gap", "order_gap"])
        for row in zip(ns, mean_def, worst_def, o_def, gaps, o_gap):
            w.writerow([row[0]] + [_g(v) for v in row[1:]])


def roundtrip(verdict, results, T):
    """Invariant: every seed's defect vanishes under refinement. Otherwise some seed
    must exceed ``max_residual * T / 4`` on the finest grid."""
    ns = list(LEVELS)
    lines = []
    if verdict.invariant:
        ok = True
        for r in results:
            errs = [r.defects[n] for n in ns]
            if not np.all(np.isfinite(errs)):
                fit_ok, desc = False, "non-finite solve"
            else:
                fit = vanishes_under_refinement(ns, errs)
                fit_ok = fit.vanishes
                desc = "exact" if fit.exact else f"order={fit.order:.3f} last={_g(errs[-1])} bound={_g(fit.bound)}"
            ok &= fit_ok
            lines.append(f"seed={r.seed} vanishes={str(fit_ok).lower()} {desc}")
        gaps = [float(np.mean([r.gaps[n] for r in results])) for n in ns]
        if np.all(np.isfinite(gaps)):
            if max(gaps) <= EXACT_FLOOR:
                lines.append(f"reduced_vs_ambient exact max_gap={_g(max(gaps))}")
            else:
                lines.append(f"reduced_vs_ambient observed_order={observed_order(ns, gaps):.3f}")
        return ok, lines
    threshold = verdict.max_residual * T / 4
    worst = max(r.defects[ns[-1]] for r in results)
    escaped = sum(r.defects[ns[-1]] > threshold for r in results)
    lines.append(f"escape_threshold={_g(threshold)} seeds_escaped={escaped}/{len(results)} worst={_g(worst)}")
    return bool(escaped > 0), lines


# command line ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="roughman", description="Invariance checks for rough differential equations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run a scenario and write its artifact bundle")
    r.add_argument("name", nargs="?", help="built-in scenario id (overrides the file's fields)")
    r.add_argument("--scenario", help="config file")
    r.add_argument("--out", help="output directory (default $ROUGHMAN_OUT or ./roughman_out/<name>)")
    r.add_argument("--driver", choices=DRIVERS)
    r.add_argument("--seeds", type=int)
    r.add_argument("--seed", type=int, help="first seed")
    r.add_argument("--grid", type=int, help="grid size N for the per-seed solutions")
    r.add_argument("--refine", type=int, help="fine steps per coarse step")
    r.add_argument("--tol", type=float)
    r.add_argument("--hurst", type=float)
    r.add_argument("--jobs", type=int, default=1, help="seeds solved concurrently")
    sub.add_parser("list", help="list built-in scenarios")
    return parser


def config_from_args(args):
    cfg = load_config(args.scenario) if args.scenario else RunConfig()
    if args.name:
        if args.name not in BUILTINS:
            raise ConfigError(f"unknown built-in scenario {args.name!r}; choose from {sorted(BUILTINS)}")
        if args.scenario and args.name != cfg.fields:
            cfg = replace(cfg, field_kwargs={})
        cfg = replace(cfg, fields=args.name)
    elif not args.scenario:
        raise ConfigError("give a built-in scenario name or --scenario <file>")
    overrides = {"driver": args.driver, "seeds": args.seeds, "seed": args.seed, "N": args.grid,
                 "refine": args.refine, "tol": args.tol, "hurst": args.hurst, "jobs": args.jobs}
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in sorted(BUILTINS):
            print(name)
        return 0
    try:
        cfg = config_from_args(args)
        out = args.out or os.environ.get("ROUGHMAN_OUT") or os.path.join("roughman_out", cfg.label)
        result = run(cfg, out)
    except (ConfigError, RoughmanError, ValueError) as exc:
        print(f"roughman: error: {exc}", file=sys.stderr)
        return 1
    for line in result.lines:
        print(line)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
