"""Acceptance criteria 1-10; each test prints one PASS/FAIL line."""

import time

import numpy as np
import pytest

from roughman.cli import RunConfig, run
from roughman.controlled import ito_formula_residual
from roughman.manifold import check_invariance, distance_monitor
from roughman.rde import concatenate, decomposition_residual, reduced_vs_ambient, solution_terms, solve
from roughman.refinement import LEVELS, levels_of, observed_order, vanishes_under_refinement
from roughman.roughpath import bracket, chen_reconstruct, is_weakly_geometric
from roughman.scenarios import (BUILTINS, affine_linear, circle_rot, circle_rot_corrected, sphere_so3)
from roughman.signals import (QSpec, SignalConfig, geometric_fbm_lift, ito_wiener_lift, pure_area_path,
                              smooth_lift)

SEEDS = range(8)
FINE = SignalConfig(N=LEVELS[-1], refine=16)


def fine_config(seed):
    return SignalConfig(N=FINE.N, refine=FINE.refine, seed=seed)


def max_defects(vf, chart, xi, fine):
    return [distance_monitor(solve(vf, p, xi), chart).max_defect for p in levels_of(fine).values()]


# 1 -------------------------------------------------------------------------

def chen_error(p, rng, triples=200):
    worst = 0.0
    for _ in range(triples):
        i, j, k = np.sort(rng.choice(p.N + 1, size=3, replace=False))
        lhs = chen_reconstruct(p, i, k)
        rhs = chen_reconstruct(p, i, j) + chen_reconstruct(p, j, k) + np.outer(p.values[j] - p.values[i],
                                                                               p.values[k] - p.values[j])
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def test_criterion_1_structure(criterion):
    lam = (1.0, 0.5, 0.25)
    c = SignalConfig(N=1024, refine=16, seed=11)
    t = c.T / c.fine_steps * np.arange(c.fine_steps + 1)
    x = np.array([[1.0, 0.2, 0.0], [0.2, 0.5, 0.1], [0.0, 0.1, 0.25]])
    generators = {
        "ito_wiener_lift": (lambda: ito_wiener_lift(QSpec(lam), c), False),
        "geometric_fbm_lift": (lambda: geometric_fbm_lift(QSpec(lam, hurst=0.4), c), True),
        "pure_area_path": (lambda: pure_area_path(x, 1.0, c.fine_steps), False),
        "smooth_lift": (lambda: smooth_lift(lambda s: np.stack([np.sin(2 * np.pi * s), s * s,
                                                                np.cos(3 * s)], axis=1), c), True),
    }
    rng = np.random.default_rng(0)
    details, ok = [], True
    for name, (make, geometric) in generators.items():
        start = time.perf_counter()
        p = make()
        chen = chen_error(p, rng)
        b = bracket(p).values
        symmetric = np.array_equal(b, np.swapaxes(b, 1, 2))
        wg = is_weakly_geometric(p, 1e-10)
        elapsed = time.perf_counter() - start
        good = chen <= 1e-12 and symmetric and wg is geometric and elapsed <= 10.0
        ok &= good
        details.append(f"{name} chen={chen:.1e} wg={wg} {elapsed:.2f}s")
    assert criterion(1, ok, "; ".join(details))


# 2 -------------------------------------------------------------------------

@pytest.mark.parametrize("symmetric_part", ["exact", "left_point"])
def test_criterion_2_bracket_calibration(criterion, symmetric_part):
    lam = np.array([1.0, 0.5, 0.25])
    start = time.perf_counter()
    slopes = [bracket(ito_wiener_lift(QSpec(tuple(lam)), SignalConfig(N=256, seed=s),
                                      symmetric_part=symmetric_part)).slope() for s in range(64)]
    slope = np.mean(slopes, axis=0)
    elapsed = time.perf_counter() - start
    diag_err = np.max(np.abs(np.diag(slope) - lam) / lam)
    scale = np.sqrt(np.outer(lam, lam))
    off = np.max(np.abs(slope - np.diag(np.diag(slope))) / scale)
    ok = diag_err <= 0.05 and off <= 0.05 and elapsed <= 60.0
    assert criterion(2, ok, f"{symmetric_part} lift: diag rel err {diag_err:.2e}, off-diag {off:.2e}, "
                            f"{elapsed:.1f}s")


# 3 -------------------------------------------------------------------------

def test_criterion_3_ito_formula(criterion):
    s = circle_rot_corrected()
    sq = (lambda y: np.array([y @ y]), lambda y: 2 * y[None, :], lambda y: 2 * np.eye(y.size)[None])
    factors = []
    for seed in SEEDS:
        paths = levels_of(ito_wiener_lift(QSpec([1.0]), fine_config(seed)), (LEVELS[0], LEVELS[-1]))
        res = []
        for p in paths.values():
            sol = solve(s.fields, p, s.xi)
            ypp, drift = solution_terms(sol, s.fields)
            res.append(ito_formula_residual(*sq, sol.controlled, ypp, drift, p))
        factors.append(res[0] / res[1])
    ok = min(factors) >= 4
    assert criterion(3, ok, f"residual reduction 2^8 -> 2^11, worst seed factor {min(factors):.1f}")


# 4 -------------------------------------------------------------------------

@pytest.mark.parametrize("make", [circle_rot_corrected, sphere_so3, affine_linear])
def test_criterion_4_positive_roundtrip(criterion, make):
    s = make()
    d = s.fields.d
    verdict = check_invariance(s.fields, s.chart, np.eye(d))
    fits = [vanishes_under_refinement(LEVELS, max_defects(s.fields, s.chart, s.xi,
                                                          ito_wiener_lift(QSpec([1.0] * d), fine_config(seed))))
            for seed in SEEDS]
    ok = verdict.invariant and all(f.vanishes for f in fits)
    worst = max(f.errs[-1] / f.bound if not f.exact else 0.0 for f in fits)
    order = min(f.order for f in fits)
    assert criterion(4, ok, f"{s.name}: verdict={verdict.invariant}, vanishing on "
                            f"{sum(f.vanishes for f in fits)}/8 seeds, min order {order:.2f}, "
                            f"worst defect/bound at 2^11 {worst:.2f}")


# 5 -------------------------------------------------------------------------

def test_criterion_5_negative_roundtrip(criterion):
    s = circle_rot()
    verdict = check_invariance(s.fields, s.chart, [[1.0]])
    residual_ok = np.all(np.abs(verdict.drift_residuals - 0.5) <= 1e-10)
    defects = [distance_monitor(solve(s.fields, ito_wiener_lift(QSpec([1.0]), fine_config(seed)), s.xi),
                                s.chart).max_defect for seed in SEEDS]
    escaped = sum(dd > 0.05 for dd in defects)
    ok = not verdict.invariant and residual_ok and escaped >= 7
    assert criterion(5, ok, f"verdict={verdict.invariant}, drift residual 0.5 at all probes={residual_ok}, "
                            f"{escaped}/8 seeds with defect > 0.05")


# 6 -------------------------------------------------------------------------

@pytest.mark.parametrize("hurst", [0.4, 0.5])
def test_criterion_6_geometric(criterion, hurst):
    s = circle_rot()
    fbm = [geometric_fbm_lift(QSpec([1.0], hurst=hurst), fine_config(seed)) for seed in SEEDS]
    x = np.mean([bracket(p).slope() for p in fbm], axis=0)
    verdict = check_invariance(s.fields, s.chart, x)
    fits = [vanishes_under_refinement(LEVELS, max_defects(s.fields, s.chart, s.xi, p)) for p in fbm]
    ok = all(bracket(p).is_zero for p in fbm) and verdict.invariant and all(f.vanishes for f in fits)
    assert criterion(6, ok, f"H={hurst}: bracket zero, verdict={verdict.invariant}, vanishing on "
                            f"{sum(f.vanishes for f in fits)}/8 seeds")


# 7 -------------------------------------------------------------------------

def smooth_driver(d, seed):
    phase = np.random.default_rng(seed).uniform(0, 2 * np.pi, size=d)
    k = np.arange(1, d + 1)
    return smooth_lift(lambda t: np.sin(2 * np.pi * np.outer(t, k) / 3 + phase) - np.sin(phase), fine_config(seed))


CHART_CASES = {
    "circle/ito": (circle_rot_corrected, "ito"),
    "circle/smooth": (circle_rot, "smooth"),
    "sphere/ito": (sphere_so3, "ito"),
    "sphere/smooth": (lambda: sphere_so3(drift_weights=(0.0, 0.0, 0.0)), "smooth"),
}


@pytest.mark.parametrize("case", list(CHART_CASES))
def test_criterion_7_chart_reduction(criterion, case):
    make, kind = CHART_CASES[case]
    s = make()
    d = s.fields.d
    x = np.eye(d) if kind == "ito" else np.zeros((d, d))
    orders, lasts, ok = [], [], True
    for seed in range(4):
        fine = ito_wiener_lift(QSpec([1.0] * d), fine_config(seed)) if kind == "ito" else smooth_driver(d, seed)
        gaps = [reduced_vs_ambient(s.fields, s.chart, p, s.xi, x).gap for p in levels_of(fine).values()]
        fit = vanishes_under_refinement(LEVELS, gaps)
        orders.append(fit.order)
        lasts.append(gaps[-1])
        ok &= fit.vanishes and (kind == "ito" or fit.order >= 1)
    assert criterion(7, ok, f"{case}: gap at 2^11 <= {max(lasts):.1e}, observed orders "
                            + " ".join(f"{o:.2f}" for o in orders))


# 8 -------------------------------------------------------------------------

def test_criterion_8_decomposition(criterion):
    worst = {name: max(decomposition_residual(s.fields, s.chart, z) for z in s.chart.probe)
             for name, s in ((n, make()) for n, make in BUILTINS.items())}
    ok = max(worst.values()) <= 1e-6
    assert criterion(8, ok, "max residual " + " ".join(f"{k}={v:.1e}" for k, v in worst.items()))


# 9 -------------------------------------------------------------------------

def test_criterion_9_concatenation(criterion):
    same = {}
    for name, make in BUILTINS.items():
        s = make()
        p = ito_wiener_lift(QSpec([1.0] * s.fields.d), SignalConfig(N=256, seed=5))
        direct = solve(s.fields, p, s.xi)
        first = solve(s.fields, p.restrict(0, 97), s.xi)
        spliced = concatenate(first, solve(s.fields, p.restrict(97, p.N), first.values[-1]))
        same[name] = (np.array_equal(direct.values, spliced.values)
                      and np.array_equal(direct.gubinelli, spliced.gubinelli))
    ok = all(same.values())
    assert criterion(9, ok, "bitwise identical: " + " ".join(f"{k}={v}" for k, v in same.items()))


# 10 ------------------------------------------------------------------------

def test_criterion_10_determinism(criterion, tmp_path):
    differing = []
    for name in BUILTINS:
        cfg = RunConfig(fields=name, seeds=2)
        run(cfg, tmp_path / name / "a")
        run(cfg, tmp_path / name / "b")
        files = sorted(f.name for f in (tmp_path / name / "a").iterdir())
        differing += [f"{name}/{f}" for f in files
                      if (tmp_path / name / "a" / f).read_bytes() != (tmp_path / name / "b" / f).read_bytes()]
    ok = not differing
    assert criterion(10, ok, f"{len(BUILTINS)} scenarios re-run, differing artifacts: {differing or 'none'}")
