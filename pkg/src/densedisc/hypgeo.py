"""Poincare geometry of the unit disc (curvature -1 convention)."""

import numpy as np


class DomainError(ValueError):
    """A point was expected in the open unit disc but is not."""


def _check_disc(*points):
    for p in points:
        if not np.all(np.abs(p) < 1.0):
            raise DomainError(f"point(s) outside the open unit disc: {p!r}")


def poincare_distance(z, w):
    """Hyperbolic distance between ``z`` and ``w`` in the unit disc.

    Uses ``sinh(d/2) = |z - w| / sqrt((1 - |z|^2)(1 - |w|^2))``, which keeps
    full relative accuracy near the boundary.  Works elementwise on arrays.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    _check_disc(z, w)
    az, aw = np.abs(z), np.abs(w)
    denom = np.sqrt((1.0 - az) * (1.0 + az) * (1.0 - aw) * (1.0 + aw))
    d = 2.0 * np.arcsinh(np.abs(z - w) / denom)
    return float(d) if d.ndim == 0 else d


def drift_ok(old, new, n):
    """True iff the node moved by less than ``2**-n`` in the Poincare metric."""
    if n < 1:
        raise ValueError("stage index must be >= 1")
    return bool(poincare_distance(old, new) < 2.0 ** (-n))


def mobius(z, a, theta=0.0):
    """Disc automorphism ``e^{i theta} (z - a) / (1 - conj(a) z)``."""
    z = np.asarray(z, dtype=complex)
    return np.exp(1j * theta) * (z - a) / (1.0 - np.conj(a) * z)


def radius_bound(total_length):
    """Largest modulus reachable from 0 within hyperbolic length ``total_length``."""
    return float(np.tanh(total_length / 2.0))
