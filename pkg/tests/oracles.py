"""Independent reference computations used by the tests."""

import numpy as np
from scipy.integrate import quad


def geodesic_length(z, w):
    """Poincare length of the geodesic from z to w by numerical integration.

    The automorphism M(x) = (x - z) / (1 - conj(z) x) sends the geodesic to
    the radial segment [0, M(w)]; pull that segment back and integrate the
    density 2|dx| / (1 - |x|^2) along it.
    """
    b = (w - z) / (1 - np.conj(z) * w)

    def point(t):
        u = t * b
        return (u + z) / (1 + np.conj(z) * u)

    def speed(t):
        u = t * b
        deriv = b * (1 - abs(z) ** 2) / (1 + np.conj(z) * u) ** 2
        x = point(t)
        return 2 * abs(deriv) / (1 - abs(x) ** 2)

    val, _ = quad(speed, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def vandermonde_interpolant(nodes, values):
    """Monomial coefficients (ascending) solving the Vandermonde system directly."""
    nodes = np.asarray(nodes, dtype=complex)
    V = np.vander(nodes, len(nodes), increasing=True)
    return np.linalg.solve(V, np.asarray(values, dtype=complex))


def dense_sup(p, q, radius, count=10**6):
    theta = 2 * np.pi * np.arange(count) / count
    z = radius * np.exp(1j * theta)
    return float(np.linalg.norm(p.eval(z) - q.eval(z), axis=-1).max())
