"""Level-2 rough paths sampled on a uniform grid.

A :class:`RoughPath` stores the first level ``X(t_i)`` at every grid point and
the second level only over adjacent steps, ``XX[k] = XX_{t_k, t_{k+1}}``.
Longer increments are rebuilt with Chen's relation

    XX_{s,u} = XX_{s,t} + XX_{t,u} + X_{s,t} (x) X_{t,u}.

Tensor norms are Frobenius norms throughout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, IndexOrder, ShapeMismatch


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RoughPath:
    """Grid-sampled rough path ``(X, XX)``.

    Parameters
    ----------
    values : (N+1, d) array
        First level at the grid points.
    area : (N, d, d) array
        Second level over each grid step, ``area[k][i, j]`` the iterated
        integral of ``dX^i dX^j`` over ``[t_k, t_{k+1}]``.
    dt : float
        Uniform step.
    alpha : float
        Hölder exponent in (1/3, 1/2].
    t0 : float
        Time of the first grid point.
    """

    values: np.ndarray
    area: np.ndarray
    dt: float
    alpha: float = 0.45
    t0: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        area = np.array(self.area, dtype=float)
        n, d = values.shape
        if n < 2:
            raise ShapeMismatch("a rough path needs at least one step")
        if area.shape != (n - 1, d, d):
            raise ShapeMismatch(f"second level has shape {area.shape}, expected {(n - 1, d, d)}")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(area))):
            raise ValueError("rough path entries must be finite")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "area", _frozen(area))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def N(self):
        return self.values.shape[0] - 1

    @property
    def d(self):
        return self.values.shape[1]

    @property
    def T(self):
        return self.dt * self.N

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.N + 1)

    @property
    def increments(self):
        return np.diff(self.values, axis=0)

    def restrict(self, i, j):
        """The rough path on grid points ``i..j`` (values are not re-based)."""
        if not 0 <= i < j <= self.N:
            raise IndexOrder(f"need 0 <= i < j <= {self.N}, got ({i}, {j})")
        return RoughPath(self.values[i:j + 1], self.area[i:j], self.dt, self.alpha,
                         self.t0 + self.dt * i)

    def __eq__(self, other):
        if not isinstance(other, RoughPath):
            return NotImplemented
        return (self.dt == other.dt and self.alpha == other.alpha and self.t0 == other.t0
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.area, other.area))

    __hash__ = None


def concat(p, q):
    """Splice two rough paths sharing the junction point."""
    if p.d != q.d or p.dt != q.dt:
        raise DimMismatch("rough paths differ in dimension or step")
    if not np.array_equal(p.values[-1], q.values[0]):
        raise ValueError("rough paths do not meet at the junction")
    return RoughPath(np.vstack([p.values, q.values[1:]]), np.concatenate([p.area, q.area]),
                     p.dt, p.alpha, p.t0)


def chen_blocks(dx, area, factor):
    """Chen-combine consecutive blocks of ``factor`` steps.

    ``dx`` has shape (M, d), ``area`` (M, d, d) with M divisible by
    ``factor``; returns the (M // factor, d, d) second level of the blocks.
    """
    m, d = dx.shape
    if m % factor:
        raise ShapeMismatch(f"{m} steps do not split into blocks of {factor}")
    dx = dx.reshape(m // factor, factor, d)
    prefix = np.cumsum(dx, axis=1) - dx
    cross = np.einsum("nri,nrj->nij", prefix, dx)
    return area.reshape(m // factor, factor, d, d).sum(axis=1) + cross


def coarsen(p, factor):
    """Rough path on every ``factor``-th grid point, second level via Chen."""
    factor = int(factor)
    if factor < 1 or p.N % factor:
        raise ShapeMismatch(f"cannot coarsen {p.N} steps by {factor}")
    if factor == 1:
        return p
    return RoughPath(p.values[::factor], chen_blocks(p.increments, p.area, factor),
                     p.dt * factor, p.alpha, p.t0)


def chen_reconstruct(p, i, j):
    """Second level ``XX_{t_i, t_j}`` by left-to-right Chen accumulation."""
    if not 0 <= i < j <= p.N:
        raise IndexOrder(f"need 0 <= i < j <= {p.N}, got ({i}, {j})")
    dx = p.increments[i:j]
    # running increment X_{t_i, t_k} before step k
    inc = np.cumsum(dx, axis=0) - dx
    return p.area[i:j].sum(axis=0) + inc.T @ dx


ZERO_BRACKET = 1e-12


@dataclass(frozen=True)
class BracketPath:
    """Values ``[X]_{0, t_i}`` of the bracket on the grid of a rough path.

    ``scale`` is the summed squared step size of the first level. A bracket
    below ``ZERO_BRACKET * scale`` everywhere is cancellation noise and
    counts as identically zero.
    """

    times: np.ndarray
    values: np.ndarray
    scale: float = 0.0

    @property
    def is_zero(self):
        return float(np.max(np.abs(self.values), initial=0.0)) <= ZERO_BRACKET * self.scale

    @property
    def increments(self):
        return np.diff(self.values, axis=0)

    def slope(self):
        """Least-squares slope through the origin of ``[X]_t`` against ``t``."""
        t = self.times - self.times[0]
        return np.tensordot(t, self.values, axes=1) / np.dot(t, t)

    def linearity(self):
        """Coefficient of determination of the through-origin linear fit."""
        if self.is_zero:
            return 1.0
        t = self.times - self.times[0]
        fit = np.multiply.outer(t, self.slope())
        ss_res = np.sum((self.values - fit) ** 2)
        ss_tot = np.sum((self.values - self.values.mean(axis=0)) ** 2)
        if ss_tot == 0.0:
            return 1.0 if ss_res == 0.0 else 0.0
        return 1.0 - ss_res / ss_tot


def step_brackets(p):
    """Per-step bracket increments ``X (x) X - 2 Sym(XX)``, shape (N, d, d)."""
    dx = p.increments
    b = np.einsum("ki,kj->kij", dx, dx) - (p.area + np.swapaxes(p.area, 1, 2))
    return 0.5 * (b + np.swapaxes(b, 1, 2))


def bracket(p):
    """Bracket ``[X]_{0, t_i}`` accumulated step by step, symmetric by construction."""
    acc = np.concatenate([np.zeros((1, p.d, p.d)), np.cumsum(step_brackets(p), axis=0)])
    acc = 0.5 * (acc + np.swapaxes(acc, 1, 2))
    return BracketPath(p.times, acc, float(np.sum(p.increments ** 2)))


def weak_geometric_defect(p):
    """Largest per-step ``|Sym(XX) - X (x) X / 2|``."""
    dx = p.increments
    half_sq = 0.5 * np.einsum("ki,kj->kij", dx, dx)
    sym_area = 0.5 * (p.area + np.swapaxes(p.area, 1, 2))
    return float(np.max(np.linalg.norm(sym_area - half_sq, axis=(1, 2))))


def is_weakly_geometric(p, tol):
    if not tol > 0:
        raise ValueError("tol must be positive")
    return weak_geometric_defect(p) <= tol


def _running_area(p):
    # C_j = sum_{k<j} (XX_k + X_k (x) dX_k), so XX_{i,j} = C_j - C_i - X_i (x) X_{i,j}
    dx = p.increments
    terms = p.area + np.einsum("ki,kj->kij", p.values[:-1], dx)
    return np.concatenate([np.zeros((1, p.d, p.d)), np.cumsum(terms, axis=0)])


def holder_seminorm(p, level=1):
    """Grid estimate of the alpha-Hölder (level 1) or 2alpha-Hölder (level 2) seminorm.

    Maximises over every pair of grid points, so the cost is quadratic in N.
    """
    if level not in (1, 2):
        raise ValueError("level must be 1 or 2")
    x = p.values
    c = _running_area(p) if level == 2 else None
    power = p.alpha if level == 1 else 2 * p.alpha
    best = 0.0
    for i in range(p.N):
        lag = p.dt * np.arange(1, p.N - i + 1)
        xij = x[i + 1:] - x[i]
        if level == 1:
            norms = np.linalg.norm(xij, axis=1)
        else:
            xx = c[i + 1:] - c[i] - np.einsum("i,kj->kij", x[i], xij)
            norms = np.linalg.norm(xx, axis=(1, 2))
        best = max(best, float(np.max(norms / lag ** power)))
    return best


@dataclass
class RoughnessReport:
    """Output of :func:`true_roughness_diagnostic`.

    ``ratios[v, k]`` is the largest ``|<v, X_{s,s+h_k}>| / h_k^{2 alpha}``
    over the base points; ``trend[v]`` summarises how it moves as the lag
    shrinks: ``"growing"``, ``"vanishing"``, ``"bounded"`` or ``"zero"``.
    """

    lags: np.ndarray
    ratios: np.ndarray
    slopes: np.ndarray
    trend: list = field(default_factory=list)

    @property
    def max_ratio(self):
        return self.ratios.max(axis=1)


def true_roughness_diagnostic(p, directions, alpha, n_base=16, flat=0.05):
    """Empirical scaling check of ``|<v, X_{s,s+h}>| / h^{2 alpha}`` on dyadic lags.

    Lags are ``T 2^-k`` for ``k = 1..floor(log2 N)`` and base points are
    ``n_base`` grid points spread evenly over ``[0, T/2)``. The fitted
    log-log slope is negative when the ratio grows as the lag shrinks. This
    is evidence only; nothing almost-sure is decided here.
    """
    if not 1 / 3 < alpha < 1 / 2:
        raise ValueError("alpha must lie in (1/3, 1/2)")
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if dirs.shape[1] != p.d:
        raise DimMismatch("direction dimension differs from the path")
    if np.any(np.linalg.norm(dirs, axis=1) == 0):
        raise ValueError("directions must be nonzero")
    levels = int(np.floor(np.log2(p.N)))
    steps = [p.N >> k for k in range(1, levels + 1)]
    lags = p.dt * np.array(steps, dtype=float)
    bases = np.unique(np.linspace(0, p.N // 2, n_base, endpoint=False).astype(int))
    proj = p.values @ dirs.T
    ratios = np.empty((dirs.shape[0], len(steps)))
    for k, (s, h) in enumerate(zip(steps, lags)):
        inc = np.abs(proj[bases + s] - proj[bases])
        ratios[:, k] = inc.max(axis=0) / h ** (2 * alpha)
    slopes = np.full(dirs.shape[0], np.nan)
    trend = []
    for v in range(dirs.shape[0]):
        r = ratios[v]
        if np.all(r == 0):
            trend.append("zero")
            continue
        ok = r > 0
        slopes[v] = np.polyfit(np.log(lags[ok]), np.log(r[ok]), 1)[0]
        trend.append("growing" if slopes[v] < -flat else "vanishing" if slopes[v] > flat else "bounded")
    return RoughnessReport(lags, ratios, slopes, trend)


def _fmt(v):
    return format(float(v), ".17g")


def write_csv(p, path):
    """Write ``t, x_1..x_d, xx_11..xx_dd``; row i carries the step ending at t_i."""
    d = p.d
    header = ["t"] + [f"x_{i + 1}" for i in range(d)]
    header += [f"xx_{i + 1}{j + 1}" for i in range(d) for j in range(d)]
    area = np.concatenate([np.zeros((1, d * d)), p.area.reshape(p.N, d * d)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, x, a in zip(p.times, p.values, area):
            w.writerow([_fmt(t)] + [_fmt(v) for v in x] + [_fmt(v) for v in a])


def read_csv(path, alpha=0.45):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    d = sum(1 for h in header if h.startswith("x_"))
    if len(header) != 1 + d + d * d:
        raise ShapeMismatch(f"header has {len(header)} columns, expected {1 + d + d * d}")
    t = body[:, 0]
    return RoughPath(body[:, 1:1 + d], body[1:, 1 + d:].reshape(-1, d, d), t[1] - t[0], alpha, t[0])


__all__ = [
    "RoughPath", "BracketPath", "RoughnessReport", "bracket", "chen_blocks", "chen_reconstruct",
    "coarsen", "concat", "holder_seminorm", "is_weakly_geometric", "read_csv", "step_brackets",
    "true_roughness_diagnostic", "weak_geometric_defect", "write_csv",
]
