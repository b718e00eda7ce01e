"""Driving rough paths: Itô-enhanced Q-Wiener, geometric Q-fBm and test signals.

Noise lives in R^K with the eigenbasis of Q as coordinates, so a truncated
Q-process is ``X_t = sum_k sqrt(lambda_k) beta^k_t e_k``. Every sample is
drawn on a fine grid of ``N * refine`` steps and coarsened to the ``N`` grid
with Chen's relation.

Randomness comes from Philox (counter based); the stream of ``beta^k`` is
keyed by ``seed + (k << 64)``, so components are independent and a given
``(QSpec, SignalConfig)`` reproduces bit for bit on any platform.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import BadHurst, NotSymmetric
from .linalg import is_symmetric
from .roughpath import RoughPath, chen_blocks

log = logging.getLogger(__name__)

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class QSpec:
    """Truncated covariance operator ``Q = diag(lambdas)`` and Hurst index."""

    lambdas: tuple
    hurst: float = 0.5

    def __post_init__(self):
        lam = tuple(float(v) for v in np.atleast_1d(self.lambdas))
        if not lam or any(not v > 0 for v in lam):
            raise ValueError("eigenvalues must be positive")
        object.__setattr__(self, "lambdas", lam)
        if not 1 / 3 < self.hurst <= 1 / 2:
            raise BadHurst(f"Hurst index {self.hurst} outside (1/3, 1/2]")

    @property
    def d(self):
        return len(self.lambdas)

    @property
    def q(self):
        return np.diag(self.lambdas)


@dataclass(frozen=True)
class SignalConfig:
    T: float = 1.0
    N: int = 256
    refine: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need N >= 2 coarse steps")
        r = self.refine
        if r < 16 or r & (r - 1):
            raise ValueError("refine must be a power of two >= 16")
        if not self.T > 0:
            raise ValueError("horizon must be positive")

    @property
    def fine_steps(self):
        return self.N * self.refine


def default_alpha(hurst):
    """An exponent in (1/3, H) used when the caller does not fix one."""
    return max(hurst - 0.05, (1 / 3 + hurst) / 2) if hurst < 0.5 else 0.45


def _rng(seed, stream):
    return np.random.Generator(np.random.Philox(key=(int(seed) & _SEED_MASK) + (stream << 64)))


def _lift(fine_dx, fine_area, c, alpha):
    values = np.concatenate([np.zeros((1, fine_dx.shape[1])), np.cumsum(fine_dx, axis=0)])
    area = chen_blocks(fine_dx, fine_area, c.refine)
    return RoughPath(values[::c.refine], area, c.T / c.N, alpha)


def brownian_increments(q, c):
    """Fine-grid increments of the K independent standard Brownian motions."""
    m = c.fine_steps
    h = c.T / m
    return np.stack([_rng(c.seed, k).standard_normal(m) for k in range(q.d)], axis=1) * np.sqrt(h)


def ito_wiener_lift(q, c, alpha=None, symmetric_part="exact"):
    """Itô-enhanced truncated Q-Wiener process.

    The antisymmetric (Lévy area) part of the second level is the left-point
    sum ``sum sqrt(lambda_j lambda_k) beta^j_{s,.} d beta^k`` over the fine
    grid. With ``symmetric_part="exact"`` each fine step also carries the
    exact Itô symmetric part ``(dX (x) dX - Q h) / 2``, which makes the
    bracket equal ``Q t`` on the nose. ``"left_point"`` keeps the bare
    left-point sums, whose bracket is the realized quadratic covariation.
    """
    if q.hurst != 0.5:
        raise BadHurst("the Itô lift needs H = 1/2")
    lam = np.asarray(q.lambdas)
    dx = brownian_increments(q, c) * np.sqrt(lam)
    h = c.T / c.fine_steps
    if symmetric_part == "exact":
        area = 0.5 * (np.einsum("ki,kj->kij", dx, dx) - h * np.diag(lam))
    elif symmetric_part == "left_point":
        area = np.zeros((dx.shape[0], q.d, q.d))
    else:
        raise ValueError(f"unknown symmetric_part {symmetric_part!r}")
    log.debug("ito_wiener_lift: K=%d trace(Q)=%.6g seed=%d", q.d, lam.sum(), c.seed)
    return _lift(dx, area, c, 0.45 if alpha is None else alpha)


def fbm_covariance(hurst, times):
    s, t = np.meshgrid(times, times, indexing="ij")
    return 0.5 * (s ** (2 * hurst) + t ** (2 * hurst) - np.abs(t - s) ** (2 * hurst))


@functools.lru_cache(maxsize=8)
def _cholesky_factor(hurst, m, horizon):
    times = horizon / m * np.arange(1, m + 1)
    factor = np.linalg.cholesky(fbm_covariance(hurst, times))
    factor.setflags(write=False)
    return factor


@functools.lru_cache(maxsize=8)
def _circulant_sqrt(hurst, m):
    k = np.arange(m + 1, dtype=float)
    gamma = 0.5 * ((k + 1) ** (2 * hurst) - 2 * k ** (2 * hurst) + np.abs(k - 1) ** (2 * hurst))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        raise ArithmeticError("circulant embedding is not nonnegative definite")
    root = np.sqrt(np.clip(eig, 0.0, None) / row.size)
    root.setflags(write=False)
    return root


def fbm_paths(q, c, method="circulant"):
    """Fine-grid samples (M+1, K) of independent fBm paths with Hurst ``q.hurst``.

    ``"cholesky"`` factors the exact covariance of ``(beta_{t_1}..beta_{t_M})``;
    ``"circulant"`` draws exact fractional Gaussian noise by circulant
    embedding (Davies-Harte), which scales to long grids.
    """
    m = c.fine_steps
    H = q.hurst
    cols = []
    for k in range(q.d):
        rng = _rng(c.seed, k)
        if method == "cholesky":
            path = _cholesky_factor(H, m, c.T) @ rng.standard_normal(m)
        elif method == "circulant":
            root = _circulant_sqrt(H, m)
            z = rng.standard_normal(root.size) + 1j * rng.standard_normal(root.size)
            noise = np.fft.fft(root * z).real[:m] * (c.T / m) ** H
            path = np.cumsum(noise)
        else:
            raise ValueError(f"unknown method {method!r}")
        cols.append(np.concatenate([[0.0], path]))
    return np.stack(cols, axis=1)


def geometric_fbm_lift(q, c, alpha=None, method="circulant"):
    """Q-fBm lifted as the piecewise-linear (hence weakly geometric) rough path."""
    if not 1 / 3 < q.hurst <= 1 / 2:
        raise BadHurst(f"Hurst index {q.hurst} outside (1/3, 1/2]")
    x = fbm_paths(q, c, method) * np.sqrt(np.asarray(q.lambdas))
    dx = np.diff(x, axis=0)
    area = 0.5 * np.einsum("ki,kj->kij", dx, dx)
    return _lift(dx, area, c, default_alpha(q.hurst) if alpha is None else alpha)


def pure_area_path(x, T, N, alpha=0.5):
    """Rough path with ``X = 0`` and step area ``-(t-s) x / 2``, so ``[X]_t = x t``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if not is_symmetric(x):
        raise NotSymmetric("bracket slope must be symmetric")
    dt = T / N
    area = np.broadcast_to(-0.5 * dt * x, (N, *x.shape))
    return RoughPath(np.zeros((N + 1, x.shape[0])), area, dt, alpha)


def smooth_lift(path, c, alpha=0.5):
    """Canonical lift of a smooth path sampled on the fine grid.

    ``path`` is either a callable mapping an array of times to an (M+1, d)
    array or the samples themselves.
    """
    m = c.fine_steps
    if callable(path):
        x = np.asarray(path(c.T / m * np.arange(m + 1)), dtype=float)
    else:
        x = np.asarray(path, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != m + 1:
        raise ValueError(f"expected {m + 1} fine samples, got {x.shape[0]}")
    dx = np.diff(x, axis=0)
    area = 0.5 * np.einsum("ki,kj->kij", dx, dx)
    values = x[::c.refine]
    return RoughPath(values, chen_blocks(dx, area, c.refine), c.T / c.N, alpha)


__all__ = [
    "QSpec", "SignalConfig", "brownian_increments", "default_alpha", "fbm_covariance", "fbm_paths",
    "geometric_fbm_lift", "ito_wiener_lift", "pure_area_path", "smooth_lift",
]
