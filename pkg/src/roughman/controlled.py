"""Controlled rough paths, the rough integral and a check of the rough Itô formula."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BaseMismatch, ShapeMismatch
from .roughpath import RoughPath, step_brackets


@dataclass(frozen=True)
class ControlledPath:
    """A path ``Y`` with Gubinelli derivative ``Y'`` relative to ``base``.

    ``values`` has shape ``(N+1, *shape)`` and ``gubinelli`` shape
    ``(N+1, *shape, d)``: ``gubinelli[k] @ v`` is the derivative of ``Y`` in
    the noise direction ``v``. For integrands with values in L(V, W), i.e.
    ``shape = (w, d)``, the last two axes of ``gubinelli[k]`` are
    (integration direction, derivative direction) and the pair is read as
    the map in L(V (x) V, W) sending ``e_i (x) e_j`` to
    ``gubinelli[k][:, j, i]``; see :func:`rough_integral`.
    """

    base: RoughPath
    values: np.ndarray
    gubinelli: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        gub = np.asarray(self.gubinelli, dtype=float)
        n = self.base.N + 1
        if values.shape[0] != n:
            raise ShapeMismatch(f"{values.shape[0]} values for a grid of {n} points")
        if gub.shape != values.shape + (self.base.d,):
            raise ShapeMismatch(f"Gubinelli derivative has shape {gub.shape}, "
                                f"expected {values.shape + (self.base.d,)}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "gubinelli", gub)

    def remainder(self, i, j):
        """``R_{s,t} = Y_{s,t} - Y'_s X_{s,t}`` between grid points i and j."""
        xij = self.base.values[j] - self.base.values[i]
        return self.values[j] - self.values[i] - self.gubinelli[i] @ xij

    def remainder_seminorm(self):
        """Grid proxy for the 2 alpha-Hölder seminorm of the remainder."""
        y = self.values.reshape(self.values.shape[0], -1)
        g = self.gubinelli.reshape(y.shape[0], y.shape[1], -1)
        x = self.base.values
        best = 0.0
        n = self.base.N
        power = 2 * self.base.alpha
        for i in range(n):
            lag = self.base.dt * np.arange(1, n - i + 1)
            r = (y[i + 1:] - y[i]) - (x[i + 1:] - x[i]) @ g[i].T
            best = max(best, float(np.max(np.linalg.norm(r, axis=1) / lag ** power)))
        return best


def rough_integral(y, p):
    """Compensated Riemann sum ``sum Y_s X_{s,t} + Y'_s XX_{s,t}`` along the grid.

    ``y`` takes values in L(V, W) (shape ``(N+1, w, d)``) with Gubinelli
    derivative of shape ``(N+1, w, d, d)``. The compensator on a step is
    ``sum_{i,j} (Y'_s e_i) e_j XX^{ij}``, i.e. ``gubinelli[k][:, j, i]``
    pairs with ``XX^{ij}``. Returns the integral as a controlled path whose
    Gubinelli derivative is ``Y`` itself.
    """
    if y.base is not p and y.base != p:
        raise BaseMismatch("integrand is controlled by a different rough path")
    if y.values.ndim != 3 or y.values.shape[2] != p.d:
        raise ShapeMismatch("integrand must take values in L(V, W)")
    dx = p.increments
    first = np.einsum("kwd,kd->kw", y.values[:-1], dx)
    second = np.einsum("kwji,kij->kw", y.gubinelli[:-1], p.area)
    out = np.concatenate([np.zeros((1, first.shape[1])), np.cumsum(first + second, axis=0)])
    return ControlledPath(p, out, y.values)


def flat_to_gubinelli(m, d):
    """Reshape a (w, d*d) map in L(V (x) V, W) to the (w, d, d) integrand layout.

    Column ``i*d + j`` (image of ``e_i (x) e_j``) lands in ``[:, j, i]``.
    """
    m = np.asarray(m, dtype=float)
    return np.swapaxes(m.reshape(*m.shape[:-1], d, d), -1, -2)


def ito_formula_residual(F, DF, D2F, y, gubinelli2, drift, p, include_bracket=True):
    """Largest defect of the rough Itô formula along a solution-shaped path.

    Parameters
    ----------
    F, DF, D2F : callables
        ``F(y)`` in R^q, ``DF(y)`` of shape (q, w), ``D2F(y)`` of shape (q, w, w).
    y : ControlledPath
        ``Y`` with values (N+1, w) and Gubinelli derivative ``Y'`` (N+1, w, d).
    gubinelli2 : array (N+1, w, d*d)
        ``Y''`` in L(V (x) V, W), column ``i*d + j`` for ``e_i (x) e_j``.
    drift : array (N+1, w)
        Samples of ``Gamma'``; ``Gamma`` is integrated with left-point sums.
    p : RoughPath

    Returns ``max_t |F(Y_t) - F(Y_0) - int DF(Y) Y' dX - int DF(Y) dGamma
    - 1/2 int D2F(Y)(Y', Y') d[X]|`` with every integral a left-point grid sum.
    """
    if y.base is not p and y.base != p:
        raise BaseMismatch("path is controlled by a different rough path")
    vals, yp = y.values, y.gubinelli
    n1, w = vals.shape
    d = p.d
    ypp = np.asarray(gubinelli2, dtype=float)
    drift = np.asarray(drift, dtype=float)
    if yp.shape != (n1, w, d) or ypp.shape != (n1, w, d * d) or drift.shape != (n1, w):
        raise ShapeMismatch("inconsistent shapes for Y, Y', Y'' or drift")
    fy = np.array([np.atleast_1d(F(v)) for v in vals])
    dfy = np.array([np.atleast_2d(DF(v)) for v in vals])
    d2fy = np.array([np.asarray(D2F(v)).reshape(fy.shape[1], w, w) for v in vals])

    # integrand DF(Y) Y' and its Gubinelli derivative D2F(Y)(Y'e_i, Y'e_j) + DF(Y) Y''(i, j)
    z = np.einsum("kqw,kwd->kqd", dfy, yp)
    hess = np.einsum("kqab,kai,kbj->kqij", d2fy, yp, yp)
    zp = hess + np.einsum("kqw,kwij->kqij", dfy, ypp.reshape(n1, w, d, d))
    integral = rough_integral(ControlledPath(p, z, np.swapaxes(zp, -1, -2)), p).values

    gamma_terms = np.einsum("kqw,kw->kq", dfy[:-1], drift[:-1]) * p.dt
    total = integral[1:] + np.cumsum(gamma_terms, axis=0)
    if include_bracket:
        br = step_brackets(p)
        total = total + 0.5 * np.cumsum(np.einsum("kqij,kij->kq", hess[:-1], br), axis=0)
    resid = fy[1:] - fy[0] - total
    return float(np.max(np.linalg.norm(resid, axis=1), initial=0.0))


__all__ = ["ControlledPath", "flat_to_gubinelli", "ito_formula_residual", "rough_integral"]
