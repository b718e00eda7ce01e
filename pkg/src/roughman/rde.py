"""Explicit solver for ``dY = f0(Y) dt + f(Y) dX`` and the chart-reduced equation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .controlled import ControlledPath
from .errors import ChartDomain, JunctionMismatch, NonFinite, NotSymmetric
from .linalg import apply_bilinear, is_symmetric
from .manifold import check_invariance
from .roughpath import concat

DEFAULT_BOUND = 1e8


@dataclass(frozen=True)
class VectorFieldSet:
    """Drift ``f0: R^n -> R^n`` and diffusion ``f: R^n -> L(R^d, R^n)``.

    ``f(y)`` returns an (n, d) matrix whose column k is ``f_k(y) = f(y) e_k``
    and ``df(y)`` a (d, n, n) array with ``df(y)[k]`` the Jacobian of
    ``f_k``. ``df0`` and ``d2f`` are optional and only used for diagnostics.
    """

    n: int
    d: int
    f0: Callable
    f: Callable
    df: Callable
    df0: Optional[Callable] = None
    d2f: Optional[Callable] = None
    numeric: bool = False

    def fmat(self, y):
        return np.asarray(self.f(y), dtype=float).reshape(self.n, self.d)

    def dff(self, y, fy=None):
        """``Df(y) f(y)`` in L(V (x) V, R^n): column ``i*d + j`` is ``Df_j(y) f_i(y)``."""
        fy = self.fmat(y) if fy is None else fy
        dfy = np.asarray(self.df(y), dtype=float).reshape(self.d, self.n, self.n)
        return np.einsum("jab,bi->aij", dfy, fy).reshape(self.n, self.d * self.d)

    @classmethod
    def from_functions(cls, f0, f, n, d, eps=1e-6):
        """Fields with Jacobians by central differences (lower accuracy)."""

        def df(y):
            y = np.asarray(y, dtype=float)
            out = np.empty((d, n, n))
            for a in range(n):
                e = np.zeros(n)
                e[a] = eps
                col = (np.asarray(f(y + e), float).reshape(n, d) - np.asarray(f(y - e), float).reshape(n, d))
                out[:, :, a] = col.T / (2 * eps)
            return out

        return cls(n, d, f0, f, df, numeric=True)


def fd_jacobian(fun, y, eps=1e-6):
    y = np.asarray(y, dtype=float)
    cols = []
    for a in range(y.size):
        e = np.zeros(y.size)
        e[a] = eps
        cols.append((np.asarray(fun(y + e), float) - np.asarray(fun(y - e), float)) / (2 * eps))
    return np.stack(cols, axis=-1)


def check_derivatives(vf, points, eps=1e-6):
    """Largest gap between ``df`` and central differences of ``f_k`` over ``points``."""
    worst = 0.0
    for y in np.atleast_2d(points):
        dfy = np.asarray(vf.df(y), dtype=float).reshape(vf.d, vf.n, vf.n)
        for k in range(vf.d):
            fd = fd_jacobian(lambda u: vf.fmat(u)[:, k], y, eps)
            worst = max(worst, float(np.max(np.abs(dfy[k] - fd))))
    return worst


@dataclass(frozen=True)
class RDESolution:
    """Grid solution ``(Y, f(Y))``; ``exit_index`` marks a stopped local solution."""

    controlled: ControlledPath
    xi: np.ndarray
    exit_index: Optional[int] = None

    @property
    def values(self):
        return self.controlled.values

    @property
    def gubinelli(self):
        return self.controlled.gubinelli

    @property
    def base(self):
        return self.controlled.base

    @property
    def times(self):
        return self.controlled.base.times


def solve(vf, p, xi, bound=DEFAULT_BOUND, domain=None):
    """Second-order rough Euler scheme.

    One step is ``Y + f0(Y) dt + f(Y) X_{s,t} + (Df f)(Y) XX_{s,t}``. Raises
    :class:`NonFinite` when the state is not finite or exceeds ``bound`` in
    norm. If ``domain(y)`` turns false the solve stops and the returned
    local solution ends at the last admissible point.
    """
    y = np.array(xi, dtype=float).reshape(vf.n)
    if p.d != vf.d:
        raise ValueError(f"fields expect {vf.d} noise dimensions, driver has {p.d}")
    dx = p.increments
    area = p.area
    dt = p.dt
    vals = [y]
    bound2 = bound * bound
    exit_index = None
    for k in range(p.N):
        fy = vf.fmat(y)
        y = y + np.asarray(vf.f0(y), dtype=float) * dt + fy @ dx[k] + vf.dff(y, fy) @ area[k].ravel()
        # also false for nan/inf entries
        if not y @ y <= bound2:
            raise NonFinite(f"state left the admissible region at t={p.t0 + dt * (k + 1):.6g}",
                            p.t0 + dt * (k + 1))
        if domain is not None and not domain(y):
            exit_index = k + 1
            break
        vals.append(y)
    values = np.array(vals)
    if len(values) < 2:
        raise NonFinite("left the domain on the first step", p.t0 + dt)
    base = p if len(values) == p.N + 1 else p.restrict(0, len(values) - 1)
    gub = np.array([vf.fmat(v) for v in values])
    return RDESolution(ControlledPath(base, values, gub), np.array(xi, dtype=float), exit_index)


def solution_terms(sol, vf):
    """``Y'' = Df(Y) f(Y)`` (flattened) and drift samples ``f0(Y)`` along a solution."""
    ypp = np.array([vf.dff(v) for v in sol.values])
    drift = np.array([np.asarray(vf.f0(v), dtype=float) for v in sol.values])
    return ypp, drift


def concatenate(sol1, sol2, tol=1e-12):
    """Splice a solution on ``[0, T0]`` with one restarted from its end point."""
    gap = float(np.max(np.abs(sol1.values[-1] - np.asarray(sol2.xi, dtype=float))))
    if gap > tol:
        raise JunctionMismatch(f"second solution starts {gap:.3g} away from the first's end")
    base = concat(sol1.base, sol2.base)
    values = np.vstack([sol1.values, sol2.values[1:]])
    gub = np.concatenate([sol1.gubinelli, sol2.gubinelli[1:]])
    return RDESolution(ControlledPath(base, values, gub), sol1.xi, sol2.exit_index)


def _reduced_parts(vf, chart, z):
    y = np.asarray(chart.phi(z), dtype=float)
    jac = np.atleast_2d(chart.dphi(z)).reshape(chart.n, chart.m)
    fy = vf.fmat(y)
    g = chart.ell @ fy
    dfy = np.asarray(vf.df(y), dtype=float).reshape(vf.d, vf.n, vf.n)
    dg = np.einsum("ma,kab,bc->kmc", chart.ell, dfy, jac)
    # (Dg g)(z): column i*d + j is Dg_j(z) g_i(z)
    dgg = np.einsum("jab,bi->aij", dg, g).reshape(chart.m, vf.d * vf.d)
    return y, jac, fy, g, dg, dgg


def chart_reduce(vf, chart, x):
    """Coefficients of the intrinsic equation on R^m.

    ``g = ell f(phi)`` and ``g0 = ell(f0(y) - 1/2 (Df f)(y) x + 1/2 Dphi(z)
    (Dg g)(z) x)`` with ``y = phi(z)``; ``Dg`` follows from the chain rule.
    The reduced drift carries no Jacobian.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if not is_symmetric(x):
        raise NotSymmetric("x must be symmetric")
    for z in chart.probe:
        if not chart.contains(z):
            raise ChartDomain(f"probe point {z} outside the chart box")

    def g(z):
        return chart.ell @ vf.fmat(chart.phi(z))

    def dg(z):
        return _reduced_parts(vf, chart, z)[4]

    def g0(z):
        y, jac, fy, _, _, dgg = _reduced_parts(vf, chart, z)
        inner = (np.asarray(vf.f0(y), dtype=float) - 0.5 * apply_bilinear(vf.dff(y, fy), x)
                 + 0.5 * jac @ apply_bilinear(dgg, x))
        return chart.ell @ inner

    return VectorFieldSet(chart.m, vf.d, g0, g, dg)


def decomposition_residual(vf, chart, z):
    """``|Df f - Dphi (Dg g) - D2phi(g, g)|`` at ``y = phi(z)`` (Frobenius norm)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    y, jac, fy, g, dg, dgg = _reduced_parts(vf, chart, z)
    hess = np.asarray(chart.d2phi(z), dtype=float).reshape(chart.n, chart.m, chart.m)
    second = np.einsum("apq,pi,qj->aij", hess, g, g).reshape(chart.n, vf.d * vf.d)
    return float(np.linalg.norm(vf.dff(y, fy) - jac @ dgg - second))


@dataclass
class ReducedComparison:
    """Ambient vs chart-reduced solve on one driver.

    ``gap`` is ``max |phi(Z_t) - Y_t|`` over grid points before the reduced
    path leaves the chart box; ``exit_index`` is the first index outside it.
    """

    gap: float
    exit_index: Optional[int]
    ambient: RDESolution
    reduced: RDESolution

    @property
    def exited(self):
        return self.exit_index is not None


def reduced_vs_ambient(vf, chart, p, xi, x, tol=1e-8, bound=DEFAULT_BOUND):
    verdict = check_invariance(vf, chart, x, tol)
    if not verdict.invariant:
        raise ValueError(f"tangency conditions fail (max residual {verdict.max_residual:.3g})")
    eta = chart.coords(xi)
    if not chart.contains(eta):
        raise ChartDomain(f"initial point maps to {eta}, outside the chart box")
    reduced_vf = chart_reduce(vf, chart, x)
    ambient = solve(vf, p, xi, bound)
    reduced = solve(reduced_vf, p, eta, bound, domain=chart.contains)
    k = len(reduced.values)
    mapped = np.array([chart.phi(z) for z in reduced.values])
    gap = float(np.max(np.linalg.norm(mapped - ambient.values[:k], axis=1)))
    return ReducedComparison(gap, reduced.exit_index, ambient, reduced)


def write_solution_csv(sol, path, dist=None):
    """Write ``t, y_1..y_n[, dist_to_manifold]`` with 17 significant digits."""
    n = sol.values.shape[1]
    header = ["t"] + [f"y_{i + 1}" for i in range(n)] + (["dist_to_manifold"] if dist is not None else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, (t, y) in enumerate(zip(sol.times, sol.values)):
            row = [format(float(t), ".17g")] + [format(float(v), ".17g") for v in y]
            if dist is not None:
                row.append(format(float(dist[k]), ".17g"))
            w.writerow(row)


__all__ = [
    "RDESolution", "ReducedComparison", "VectorFieldSet", "chart_reduce", "check_derivatives",
    "concatenate", "decomposition_residual", "fd_jacobian", "reduced_vs_ambient", "solution_terms",
    "solve", "write_solution_csv",
]
