"""Built-in vector fields paired with charts of the manifold they act on.

Each builder returns a :class:`Scenario` holding analytic fields, a chart
with a linear left inverse, an initial point on the manifold and the
exact implicit-form defect used for distance monitoring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import Chart
from .rde import VectorFieldSet

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def _e(i, j, n=3):
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


# infinitesimal rotations about the three coordinate axes
SO3 = np.array([_e(1, 2) - _e(2, 1), _e(2, 0) - _e(0, 2), _e(0, 1) - _e(1, 0)])


@dataclass(frozen=True)
class Scenario:
    name: str
    fields: VectorFieldSet
    chart: Chart
    xi: np.ndarray


def linear_fields(drift, mats):
    """Fields ``f0(y) = drift @ y`` and ``f_k(y) = mats[k] @ y``."""
    drift = np.asarray(drift, dtype=float)
    mats = np.asarray(mats, dtype=float)
    n, d = drift.shape[0], mats.shape[0]
    return VectorFieldSet(
        n, d,
        f0=lambda y: drift @ y,
        f=lambda y: np.einsum("kab,b->ak", mats, y),
        df=lambda y: mats,
        df0=lambda y: drift,
        d2f=lambda y: np.zeros((d, n, n, n)),
    )


def circle_chart(theta0=0.0, half_width=0.9):
    """Graph chart of the unit circle around angle ``theta0``.

    ``phi(z) = sqrt(1 - z^2) u + z v`` with ``u`` the base point and ``v``
    the unit tangent there; ``ell = v^T``.
    """
    u = np.array([np.cos(theta0), np.sin(theta0)])
    v = np.array([-np.sin(theta0), np.cos(theta0)])

    def phi(z):
        z = float(np.ravel(z)[0])
        return np.sqrt(1 - z * z) * u + z * v

    def dphi(z):
        z = float(np.ravel(z)[0])
        return (-z / np.sqrt(1 - z * z) * u + v)[:, None]

    def d2phi(z):
        z = float(np.ravel(z)[0])
        return (-(1 - z * z) ** -1.5 * u)[:, None, None]

    return Chart(phi, dphi, d2phi, v[None, :], [-half_width], [half_width],
                 name=f"circle_graph({theta0:g})", level_set=lambda y: abs(np.linalg.norm(y) - 1.0))


def sphere_chart(half_width=0.6):
    """Graph chart of the unit sphere around the north pole, ``ell`` drops the last coordinate."""

    def phi(z):
        z = np.asarray(z, dtype=float)
        return np.array([z[0], z[1], np.sqrt(1 - z @ z)])

    def dphi(z):
        z = np.asarray(z, dtype=float)
        s = np.sqrt(1 - z @ z)
        return np.array([[1.0, 0.0], [0.0, 1.0], [-z[0] / s, -z[1] / s]])

    def d2phi(z):
        z = np.asarray(z, dtype=float)
        s = np.sqrt(1 - z @ z)
        out = np.zeros((3, 2, 2))
        out[2] = -np.eye(2) / s - np.outer(z, z) / s ** 3
        return out

    ell = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return Chart(phi, dphi, d2phi, ell, [-half_width] * 2, [half_width] * 2,
                 name="sphere_graph", level_set=lambda y: abs(np.linalg.norm(y) - 1.0))


def circle_rot(drift=0.0):
    """Rotation noise ``f(y) = R y`` on the unit circle with drift ``drift * y``."""
    vf = linear_fields(drift * np.eye(2), ROT[None])
    return Scenario("circle_rot", vf, circle_chart(), np.array([1.0, 0.0]))


def circle_rot_corrected():
    """Rotation noise with the Itô-compensating drift ``f0(y) = -y/2``."""
    s = circle_rot(-0.5)
    return Scenario("circle_rot_corrected", s.fields, s.chart, s.xi)


def sphere_so3(drift_weights=(1.0, 1.0, 1.0)):
    """so(3) rotation noise on the unit sphere.

    The drift is ``f0(y) = 1/2 sum_k w_k A_k^2 y``; with ``w = lambda`` it
    cancels the Itô correction of a Q-Wiener driver, with ``w = 0`` it
    vanishes (geometric drivers). The default equals ``-y``.
    """
    w = np.asarray(drift_weights, dtype=float)
    drift = 0.5 * np.einsum("k,kab,kbc->ac", w, SO3, SO3)
    vf = linear_fields(drift, SO3)
    return Scenario("sphere_so3", vf, sphere_chart(), np.array([0.0, 0.0, 1.0]))


AFFINE_NORMAL = np.ones(3) / np.sqrt(3.0)
AFFINE_BASIS = np.column_stack([np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0),
                                np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)])


def affine_chart(half_width=5.0):
    """Chart of the plane ``<n, y> = 1`` with ``n = (1,1,1)/sqrt 3``."""
    base, B = AFFINE_NORMAL, AFFINE_BASIS
    return Chart(lambda z: base + B @ np.asarray(z, dtype=float), lambda z: B,
                 lambda z: np.zeros((3, 2, 2)), B.T, [-half_width] * 2, [half_width] * 2,
                 name="affine_plane",
                 level_set=lambda y: abs(float(AFFINE_NORMAL @ y) - 1.0))


def affine_linear():
    """Linear fields projected onto the plane, tangent everywhere on it."""
    P = np.eye(3) - np.outer(AFFINE_NORMAL, AFFINE_NORMAL)
    c0 = np.array([[0.0, -0.4, 0.1], [0.4, 0.0, -0.2], [0.1, 0.2, -0.3]])
    c1 = np.array([[0.3, -0.5, 0.0], [0.5, 0.1, 0.2], [0.0, -0.2, 0.2]])
    c2 = np.array([[-0.2, 0.1, 0.4], [0.0, 0.3, -0.1], [0.2, 0.0, 0.1]])
    vf = linear_fields(P @ c0, np.array([P @ c1, P @ c2]))
    xi = AFFINE_NORMAL + AFFINE_BASIS @ np.array([0.2, -0.1])
    return Scenario("affine_linear", vf, affine_chart(), xi)


def halfline_chart(lower=1e-3, upper=1e3):
    """Identity chart of the open half-line ``(0, inf)``."""
    return Chart(lambda z: np.atleast_1d(np.asarray(z, dtype=float)).copy(), lambda z: np.eye(1),
                 lambda z: np.zeros((1, 1, 1)), np.eye(1), [lower], [upper],
                 probe=np.geomspace(0.1, 10.0, 9)[:, None], name="half_line",
                 level_set=lambda y: max(-float(y[0]), 0.0))


def scalar_geom_bm(sigma=1.0):
    """Scalar ``dY = sigma Y dX``, the geometric Brownian motion test case."""
    vf = linear_fields(np.zeros((1, 1)), np.array([[[sigma]]]))
    return Scenario("scalar_geom_bm", vf, halfline_chart(), np.array([1.0]))


BUILTINS = {
    "circle_rot": circle_rot,
    "circle_rot_corrected": circle_rot_corrected,
    "sphere_so3": sphere_so3,
    "affine_linear": affine_linear,
    "scalar_geom_bm": scalar_geom_bm,
}


def builtin(name, **kwargs):
    if name not in BUILTINS:
        raise KeyError(f"unknown built-in scenario {name!r}; choose from {sorted(BUILTINS)}")
    return BUILTINS[name](**kwargs)


__all__ = [
    "BUILTINS", "ROT", "SO3", "Scenario", "affine_chart", "affine_linear", "builtin", "circle_chart",
    "circle_rot", "circle_rot_corrected", "halfline_chart", "linear_fields", "scalar_geom_bm",
    "sphere_chart", "sphere_so3",
]
