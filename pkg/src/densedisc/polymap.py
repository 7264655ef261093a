"""Polynomial maps from the disc into C^m.

A :class:`PolyMap` stores one ascending coefficient array per target
coordinate.  Everything here is exact-value numpy; no state is shared.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

ETA = 1e-3
MIN_SUP_SAMPLES = 256
MAX_SUP_SAMPLES = 16384


def _canonical(c):
    c = np.atleast_1d(np.asarray(c, dtype=complex)).copy()
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return c[: nz[-1] + 1]


class PolyMap:
    """Polynomial map ``z -> (p_1(z), ..., p_m(z))`` in canonical form."""

    def __init__(self, coords):
        coords = [_canonical(c) for c in coords]
        if not coords:
            raise ValueError("a PolyMap needs at least one coordinate")
        self.coords = tuple(coords)
        for c in self.coords:
            c.setflags(write=False)

    @classmethod
    def zero(cls, m):
        return cls([[0.0]] * m)

    @classmethod
    def constant(cls, value):
        return cls([[v] for v in np.atleast_1d(value)])

    @property
    def m(self):
        return len(self.coords)

    @property
    def degree(self):
        return max(len(c) for c in self.coords) - 1

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """Evaluate at ``z`` (scalar or array); result has a trailing axis of size m."""
        z = np.asarray(z, dtype=complex)
        return np.stack([npoly.polyval(z, c) for c in self.coords], axis=-1)

    def __add__(self, other):
        if other.m != self.m:
            raise ValueError("dimension mismatch")
        return PolyMap([npoly.polyadd(a, b) for a, b in zip(self.coords, other.coords)])

    def __sub__(self, other):
        if other.m != self.m:
            raise ValueError("dimension mismatch")
        return PolyMap([npoly.polysub(a, b) for a, b in zip(self.coords, other.coords)])

    def __eq__(self, other):
        if not isinstance(other, PolyMap) or other.m != self.m:
            return NotImplemented
        return all(a.shape == b.shape and np.array_equal(a, b)
                   for a, b in zip(self.coords, other.coords))

    __hash__ = None

    def __repr__(self):
        return f"PolyMap(m={self.m}, degree={self.degree})"

    def coefficient_matrix(self, size=None):
        """Coefficients as an ``(size, m)`` array, zero padded."""
        size = self.degree + 1 if size is None else size
        out = np.zeros((size, self.m), dtype=complex)
        for i, c in enumerate(self.coords):
            k = min(len(c), size)
            out[:k, i] = c[:k]
        return out

    def to_json(self):
        return {"m": self.m,
                "coords": [[[float(v.real), float(v.imag)] for v in c] for c in self.coords]}

    @classmethod
    def from_json(cls, obj):
        coords = obj["coords"]
        if "m" in obj and obj["m"] != len(coords):
            raise ValueError("coordinate count does not match m")
        return cls([[complex(re, im) for re, im in c] for c in coords])


@dataclass(frozen=True)
class NodeSet:
    """Interpolation data: distinct nodes with their target points in C^m."""

    nodes: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        nodes = np.atleast_1d(np.asarray(self.nodes, dtype=complex)).ravel()
        targets = np.asarray(self.targets, dtype=complex)
        if targets.ndim == 1:
            targets = targets.reshape(len(nodes), -1) if len(nodes) else targets.reshape(0, 1)
        if targets.shape[0] != len(nodes):
            raise ValueError("nodes and targets differ in length")
        if len(nodes) > 1 and self._separation(nodes) == 0.0:
            raise ValueError("duplicate interpolation nodes")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "targets", targets)

    @staticmethod
    def _separation(nodes):
        if len(nodes) < 2:
            return np.inf
        d = np.abs(nodes[:, None] - nodes[None, :])
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())

    @property
    def min_separation(self):
        return self._separation(self.nodes)

    def __len__(self):
        return len(self.nodes)


def _sup_samples(degree):
    return int(np.clip(8 * degree, MIN_SUP_SAMPLES, MAX_SUP_SAMPLES))


def circle_max(f, radius, samples, refine=8):
    """Max of ``|f|`` (a map returning (..., m) arrays) over the circle of given radius.

    ``samples`` equispaced points are taken, then the best few are refined on a
    local grid one sample spacing wide, so narrow peaks between samples are
    not missed.
    """
    theta = 2 * np.pi * np.arange(samples) / samples
    vals = np.linalg.norm(f(radius * np.exp(1j * theta)), axis=-1)
    best = float(vals.max())
    if refine:
        top = np.argsort(vals)[-refine:]
        h = 2 * np.pi / samples
        local = (theta[top, None] + np.linspace(-h, h, 33)[None, :]).ravel()
        best = max(best, float(np.linalg.norm(f(radius * np.exp(1j * local)), axis=-1).max()))
    return best


def sup_norm(p, q, radius, samples=None, eta=ETA):
    """Certified-by-sampling sup of ``|p - q|`` over the closed disc of given radius.

    By the maximum principle the sup is attained on the circle.  The sampled
    maximum is inflated by ``1 + eta``.
    """
    if p.m != q.m:
        raise ValueError("dimension mismatch")
    if not 0 < radius <= 1:
        raise ValueError("radius must lie in (0, 1]")
    diff = p - q
    samples = _sup_samples(p.degree + q.degree) if samples is None else samples
    return circle_max(diff.eval, radius, samples) * (1.0 + eta)


@dataclass(frozen=True)
class TaylorResult:
    poly: PolyMap
    radius: float
    degree: int
    max_modulus: float

    def tail(self, inner_radius):
        """Cauchy bound for the discarded Taylor tail on the closed disc of ``inner_radius``.

        Covers truncation only.  Aliasing of the FFT coefficients is a
        separate error that shrinks like ``radius**samples`` for maps
        holomorphic on the unit disc; choose ``samples`` accordingly.
        """
        q = inner_radius / self.radius
        if not 0 <= q < 1:
            raise ValueError("inner radius must be smaller than the sampling radius")
        return self.max_modulus * q ** (self.degree + 1) / (1.0 - q)


def taylor_from_samples(h, radius, degree, samples=None):
    """Degree-``degree`` Taylor truncation of ``h`` at 0 from FFT of circle samples.

    ``h`` maps complex arrays to arrays of shape (..., m) (or (...,) when m=1).
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if not 0 < radius < 1:
        raise ValueError("sampling radius must lie in (0, 1)")
    min_samples = 4 * (degree + 1)
    if samples is None:
        samples = 1 << int(np.ceil(np.log2(min_samples)))
    elif samples < min_samples:
        raise ValueError(f"{samples} samples cannot resolve degree {degree}")
    z = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    vals = np.asarray(h(z), dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite sample value")
    coeffs = np.fft.fft(vals, axis=0)[: degree + 1] / samples
    coeffs /= radius ** np.arange(degree + 1)[:, None]
    mmax = float(np.linalg.norm(vals, axis=1).max())
    return TaylorResult(PolyMap(coeffs.T), radius, degree, mmax)


def _newton_monomial(nodes, values):
    """Monomial coefficients of the interpolant through (nodes, values) via Newton form."""
    n = len(nodes)
    dd = np.array(values, dtype=complex)
    for j in range(1, n):
        dd[j:] = (dd[j:] - dd[j - 1:-1]) / (nodes[j:] - nodes[: n - j])[:, None]
    # expand the nested Newton form from the inside out
    coef = np.zeros((n, dd.shape[1]), dtype=complex)
    coef[0] = dd[n - 1]
    for j in range(n - 2, -1, -1):
        shifted = np.zeros_like(coef)
        shifted[1:] = coef[:-1]
        coef = shifted - nodes[j] * coef
        coef[0] += dd[j]
    return coef


def lebesgue_estimate(nodes, radius=1.0, samples=1024):
    """Sampled Lebesgue function maximum of the node set on the circle of given radius."""
    nodes = np.asarray(nodes, dtype=complex)
    z = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    total = np.zeros(samples)
    for j, a in enumerate(nodes):
        others = np.delete(nodes, j)
        total += np.abs(np.prod((z[:, None] - others) / (a - others), axis=1))
    return float(total.max())


def lagrange_correct(p, ns, refinements=3):
    """Add the Lagrange interpolant of the residuals so that ``q(node_j) = target_j``.

    Returns ``(q, correction_norm)`` where ``correction_norm`` is the sampled
    sup of ``|q - p|`` on the closed unit disc.
    """
    if len(ns) == 0:
        return p, 0.0
    if ns.targets.shape[1] != p.m:
        raise ValueError("dimension mismatch")
    q = p
    for _ in range(refinements):
        resid = ns.targets - q.eval(ns.nodes)
        if not np.any(resid):
            break
        q = q + PolyMap(_newton_monomial(ns.nodes, resid).T)
    return q, sup_norm(q, p, 1.0)
