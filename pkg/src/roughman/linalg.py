"""Small dense linear algebra helpers on plain numpy arrays.

Vectors are 1-d arrays, matrices 2-d arrays and elements of V (x) V are
square ``(d, d)`` arrays. A map in L(V (x) V, W) is stored as a ``(w, d*d)``
matrix whose column ``i*d + j`` is the image of ``e_i (x) e_j``, so that it
contracts against ``t.ravel()`` of a row-major tensor.
"""

import numpy as np

from .errors import DimMismatch, RankDeficient

RANK_RTOL = 1e-10


def sym(t):
    """Symmetric part ``(t + t^T) / 2`` of a square tensor."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DimMismatch(f"expected a square tensor, got shape {t.shape}")
    return 0.5 * (t + t.T)


def is_symmetric(t, tol=1e-12):
    t = np.asarray(t, dtype=float)
    return t.ndim == 2 and t.shape[0] == t.shape[1] and np.max(np.abs(t - t.T), initial=0.0) <= tol


def pinv_apply(a, b, rtol=RANK_RTOL):
    """Least-squares solution of ``a @ c = b`` for a full column rank ``a``.

    Uses a thin SVD; raises :class:`RankDeficient` when a singular value
    falls below ``rtol`` times the largest one.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise DimMismatch(f"matrix has {a.shape[0]} rows, right-hand side {b.shape[0]}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size < a.shape[1] or s[-1] <= rtol * s[0]:
        raise RankDeficient(f"numerical rank below {a.shape[1]} (singular values {s})")
    return vt.T @ ((u.T @ b) / s if b.ndim == 1 else (u.T @ b) / s[:, None])


def apply_bilinear(m, t):
    """Evaluate ``m`` in L(V (x) V, W) at the tensor ``t``."""
    m = np.asarray(m, dtype=float)
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DimMismatch(f"expected a square tensor, got shape {t.shape}")
    if m.ndim == 1:
        m = m[None, :]
    m = m.reshape(m.shape[0], -1)
    if m.shape[1] != t.size:
        raise DimMismatch(f"map has {m.shape[1]} columns, tensor has {t.size} entries")
    return m @ t.ravel()


def outer(u, v):
    return np.multiply.outer(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
