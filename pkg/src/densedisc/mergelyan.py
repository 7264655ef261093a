"""Uniform polynomial approximation on K = closed unit disc U [1, 2].

The data is ``z -> f(lam z)`` on the disc and a path on the segment ending
at the next target (a flat blend of ``f(lam t)`` into the target by default,
or the straight segment).
Fits are least squares in a basis orthonormalized on the sample set
(Vandermonde with Arnoldi), so high degrees stay well conditioned on K.
"""

from dataclasses import dataclass

import numpy as np

from .polymap import NodeSet, PolyMap, _newton_monomial

MIN_NODE_SEPARATION = 1e-4
NODE_WEIGHT = 1e4


class ApproximationFailure(RuntimeError):
    """No degree up to the cap met the error target."""

    def __init__(self, best_error, degree, target):
        super().__init__(f"best error {best_error:.3g} at degree {degree} "
                         f"misses target {target:.3g}")
        self.best_error = best_error
        self.degree = degree
        self.target = target


def make_path(start, end):
    """Straight path ``gamma`` on [1, 2] with ``gamma(1) = start``, ``gamma(2) = end``."""
    start = np.atleast_1d(np.asarray(start, dtype=complex))
    end = np.atleast_1d(np.asarray(end, dtype=complex))

    def gamma(t):
        t = np.asarray(t, dtype=float)[..., None]
        return (2.0 - t) * start + (t - 1.0) * end

    return gamma


def smooth_step(u):
    """C-infinity step on [0, 1], flat at both ends; 0 below, 1 above."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def make_blend_path(disc_part, lam, end):
    """Path on [1, 2] following ``t -> disc_part(lam t)`` and blending flatly into ``end``.

    ``gamma(1) = disc_part(lam)`` and ``gamma(2) = end``.  Unlike the straight
    path it has no derivative jump at the junction with the disc, which is
    what limits polynomial approximation rates on K.
    """
    end = np.atleast_1d(np.asarray(end, dtype=complex))
    offset = end - disc_part.eval(2.0 * lam)

    def gamma(t):
        t = np.asarray(t, dtype=float)
        out = disc_part.eval(lam * t) + smooth_step(t - 1.0)[..., None] * offset
        return np.where((t == 2.0)[..., None], end, out)

    return gamma


PATHS = ("blend", "straight")


@dataclass(frozen=True)
class StageData:
    """``z -> disc_part(lam z)`` on the closed disc, joined by a path to ``segment_target`` at 2."""

    disc_part: PolyMap
    lam: float
    segment_target: np.ndarray
    path_kind: str = "blend"

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError("lam must lie in (0, 1)")
        if self.path_kind not in PATHS:
            raise ValueError(f"path_kind must be one of {PATHS}")
        target = np.atleast_1d(np.asarray(self.segment_target, dtype=complex))
        if target.shape != (self.disc_part.m,):
            raise ValueError("segment target has the wrong dimension")
        object.__setattr__(self, "segment_target", target)

    @property
    def junction_value(self):
        return self.disc_part.eval(self.lam)

    @property
    def path(self):
        if self.path_kind == "straight":
            return make_path(self.junction_value, self.segment_target)
        return make_blend_path(self.disc_part, self.lam, self.segment_target)

    def on_disc(self, z):
        return self.disc_part.eval(self.lam * np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class ApproxRequest:
    data: StageData
    err_target: float
    interp: NodeSet
    max_degree: int

    def __post_init__(self):
        if not self.err_target > 0:
            raise ValueError("err_target must be positive")
        nodes = self.interp.nodes
        on_k = (np.abs(nodes) <= 1.0) | ((np.abs(nodes.imag) == 0) & (nodes.real >= 1.0)
                                         & (nodes.real <= 2.0))
        if not on_k.all():
            raise ValueError("interpolation nodes must lie in K")
        at_two = np.flatnonzero(nodes == 2.0)
        if at_two.size != 1 or not np.allclose(self.interp.targets[at_two[0]],
                                               self.data.segment_target, rtol=0, atol=0):
            raise ValueError("node 2 must be present with the segment target")


class ArnoldiBasis:
    """Polynomials orthonormal on a weighted sample set, evaluated by recurrence."""

    def __init__(self, points, weights, degree):
        points = np.asarray(points, dtype=complex)
        sw = np.sqrt(np.asarray(weights, dtype=float))
        m = len(points)
        if degree + 1 > m:
            raise ValueError("more basis functions than sample points")
        Q = np.zeros((m, degree + 1), dtype=complex)
        H = np.zeros((degree + 1, degree), dtype=complex)
        Q[:, 0] = sw / np.linalg.norm(sw)
        for k in range(degree):
            v = points * Q[:, k]
            for _ in range(2):
                h = Q[:, : k + 1].conj().T @ v
                v -= Q[:, : k + 1] @ h
                H[: k + 1, k] += h
            H[k + 1, k] = np.linalg.norm(v)
            Q[:, k + 1] = v / H[k + 1, k]
        self.H = H
        self.q0 = 1.0 / np.linalg.norm(sw)
        self.Qw = Q  # sqrt(weights) * basis values
        self.sw = sw
        self.degree = degree

    def values(self, z, degree=None):
        degree = self.degree if degree is None else degree
        z = np.asarray(z, dtype=complex).ravel()
        P = np.empty((len(z), degree + 1), dtype=complex)
        P[:, 0] = self.q0
        H = self.H
        for k in range(degree):
            P[:, k + 1] = (z * P[:, k] - P[:, : k + 1] @ H[: k + 1, k]) / H[k + 1, k]
        return P

    def coefficients(self, f):
        """Weighted least-squares coefficients of sampled values ``f`` (shape (M, m))."""
        return self.Qw.conj().T @ (self.sw[:, None] * f)


class KPolyMap:
    """Polynomial map on K in an Arnoldi basis plus a low-degree monomial correction."""

    def __init__(self, basis, coeffs, correction=None):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=complex)
        m = self.coeffs.shape[1]
        self.correction = PolyMap.zero(m) if correction is None else correction

    @property
    def m(self):
        return self.coeffs.shape[1]

    @property
    def degree(self):
        return max(self.coeffs.shape[0] - 1, self.correction.degree)

    def eval(self, z, chunk=4096):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty((len(flat), self.m), dtype=complex)
        d = self.coeffs.shape[0] - 1
        for i in range(0, len(flat), chunk):
            out[i:i + chunk] = self.basis.values(flat[i:i + chunk], d) @ self.coeffs
        return out.reshape(z.shape + (self.m,)) + self.correction.eval(z)

    __call__ = eval

    def to_polymap(self):
        """Monomial coefficients (loses accuracy on the segment for large degree)."""
        d = self.coeffs.shape[0] - 1
        H = self.basis.H
        basis = [np.array([self.basis.q0], dtype=complex)]
        for k in range(d):
            nxt = np.concatenate([[0.0], basis[k]])
            for j in range(k + 1):
                nxt[: len(basis[j])] -= H[j, k] * basis[j]
            basis.append(nxt / H[k + 1, k])
        coords = []
        for i in range(self.m):
            c = np.zeros(d + 1, dtype=complex)
            for k in range(d + 1):
                c[: len(basis[k])] += self.coeffs[k, i] * basis[k]
            coords.append(c)
        return PolyMap(coords) + self.correction


def _graded(lo, hi, count):
    return np.exp(np.linspace(np.log(lo), np.log(hi), count))


def k_samples(degree, fine=1):
    """Sample points on K: circle, segment, and a graded cluster at the junction 1.

    Returns ``(circle_points, segment_parameters)``.  ``fine=2`` gives the
    validation set, offset from the fitting set.
    """
    nc = fine * max(4 * degree, 256)
    ns = fine * max(2 * degree, 128)
    shift = 0.5 if fine > 1 else 0.0
    theta = 2 * np.pi * (np.arange(nc) + shift) / nc
    g = _graded(1e-7, 0.3, 60) if fine == 1 else _graded(3e-7, 0.29, 120)
    theta = np.concatenate([theta, g, -g])
    if fine == 1:
        t = 1.5 - 0.5 * np.cos(np.pi * (np.arange(ns) + 0.5) / ns)
    else:
        t = 1.5 - 0.5 * np.cos(np.pi * np.arange(ns + 1) / ns)
    g = _graded(1e-7, 0.3, 30) if fine == 1 else _graded(3e-7, 0.29, 60)
    t = np.concatenate([t, 1.0 + g])
    return np.exp(1j * theta), t


def _data_values(data, circle, t):
    return np.concatenate([data.on_disc(circle), data.path(t)], axis=0)


def _exact_correction(g, ns, refinements=4):
    corr = g.correction
    for _ in range(refinements):
        resid = ns.targets - g.eval(ns.nodes)
        if not np.any(resid):
            break
        corr = corr + PolyMap(_newton_monomial(ns.nodes, resid).T)
        g = KPolyMap(g.basis, g.coeffs, corr)
    return g


def validation_error(g, data, degree_hint):
    circle, t = k_samples(degree_hint, fine=2)
    pts = np.concatenate([circle, t.astype(complex)])
    err = np.linalg.norm(g.eval(pts) - _data_values(data, circle, t), axis=-1)
    return float(err.max())


def approximate_on_K(req, degree_step=1.25, fit_samples=None):
    """Polynomial ``g`` with ``|g - data| <= err_target`` on K and exact node values.

    Returns ``(g, measured_error)``; ``g`` is a :class:`KPolyMap`.
    Raises :class:`ApproximationFailure` when ``max_degree`` is not enough.
    """
    ns = req.interp
    if ns.min_separation < MIN_NODE_SEPARATION:
        raise ValueError(f"node separation {ns.min_separation:.3g} below "
                         f"{MIN_NODE_SEPARATION}")
    data = req.data
    D = req.max_degree
    circle, t = k_samples(D if fit_samples is None else fit_samples)
    pts = np.concatenate([circle, t.astype(complex), ns.nodes])
    vals = np.concatenate([_data_values(data, circle, t), ns.targets], axis=0)
    nk = len(circle) + len(t)
    weights = np.concatenate([np.ones(nk), np.full(len(ns), NODE_WEIGHT)])
    basis = ArnoldiBasis(pts, weights, D)
    coeffs = basis.coefficients(vals)
    # fit error on K samples for every truncation degree
    Q = basis.Qw[:nk] / basis.sw[:nk, None]
    approx = np.zeros((nk, data.disc_part.m), dtype=complex)
    fit_err = np.empty(D + 1)
    for d in range(D + 1):
        approx += np.outer(Q[:, d], coeffs[d])
        fit_err[d] = np.linalg.norm(approx - vals[:nk], axis=-1).max()
    best = (np.inf, None, None)
    d = int(np.argmax(fit_err <= req.err_target / 2)) if np.any(
        fit_err <= req.err_target / 2) else None
    tried = set()
    while d is not None and d <= D:
        tried.add(d)
        g = _exact_correction(KPolyMap(basis, coeffs[: d + 1]), ns)
        err = validation_error(g, data, D)
        if err < best[0]:
            best = (err, g, d)
        if err <= req.err_target:
            return g, err
        nd = min(D, max(d + 1, int(np.ceil(d * degree_step))))
        d = nd if nd not in tried else None
    if best[1] is None:
        d = int(np.argmin(fit_err))
        best = (float(fit_err[d]), None, d)
    raise ApproximationFailure(best[0], best[2], req.err_target)
