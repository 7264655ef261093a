"""Riemann maps onto disc-with-finger domains via the geodesic zipper.

The zipper builds the map ``W -> upper half-plane`` as a composition of
closed-form slit maps, one per boundary vertex, followed by a welding step
and a Mobius map onto the disc.  Every elementary map has a closed-form
inverse, so both directions are available.

Conventions: vertices run counterclockwise.  After the last slit map the
image of ``z0`` is a positive real ``zeta0`` and the interior is the
unbounded side of the remaining arc from 0 to ``zeta0``; the Mobius step
``z -> z/(1 - z/zeta0)`` puts it in the second quadrant and ``-z**2`` welds
it onto the upper half-plane.
"""

from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon

from .hypgeo import DomainError

MAX_DELTA = 0.5
MIN_VERTICES = 64
ROUNDTRIP_TOL = 1e-8


class ZipperBreakdown(RuntimeError):
    """The zipper could not process a vertex."""

    def __init__(self, message, vertex=None):
        super().__init__(message if vertex is None else f"{message} (vertex {vertex})")
        self.vertex = vertex


class CrowdingError(DomainError):
    """A disc point is too close to the unit circle to be represented in double precision."""


@dataclass(frozen=True)
class DomainSpec:
    """Polygonal boundary of ``W = D(0, 1+delta) U {dist(z, [1, 2]) < delta}``."""

    delta: float
    vertices: np.ndarray = field(repr=False)

    @property
    def polygon(self):
        return Polygon(np.column_stack([self.vertices.real, self.vertices.imag]))

    def contains(self, w):
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        return shapely.contains_xy(self.polygon, w.real, w.imag)


def _arc(center, radius, t0, t1, count):
    t = np.linspace(t0, t1, count, endpoint=False)
    return center + radius * np.exp(1j * t)


def _segment(a, b, count):
    return a + (b - a) * np.arange(count) / count


def _boundary(delta, resolution):
    """Counterclockwise vertices starting at the finger tip ``2 + delta``.

    The upper half is laid out by arc length (finger weighted double) and
    mirrored, so the polygon is symmetric about the real axis.
    """
    rad = 1.0 + delta
    t_join = np.arcsin(delta / rad)
    x_join = rad * np.cos(t_join)
    pieces = [
        (np.pi * delta / 2 * 2.0, lambda n: _arc(2.0, delta, 0.0, np.pi / 2, n)),
        ((2.0 - x_join) * 2.0, lambda n: _segment(2.0 + 1j * delta, x_join + 1j * delta, n)),
        (rad * (np.pi - t_join), lambda n: _arc(0.0, rad, t_join, np.pi, n)),
    ]
    half = resolution // 2
    weights = np.array([w for w, _ in pieces])
    counts = np.maximum(2, np.round(half * weights / weights.sum()).astype(int))
    counts[-1] += half - counts.sum()
    upper = np.concatenate([make(n) for (_, make), n in zip(pieces, counts)])
    return np.concatenate([upper, [-rad + 0j], np.conj(upper[1:])[::-1]])


def _k_samples(count=2000):
    t = np.linspace(0, 2 * np.pi, count, endpoint=False)
    return np.concatenate([np.exp(1j * t), np.linspace(1.0, 2.0, count // 4)])


def build_domain(delta, resolution=1024):
    """Polygonal disc-with-finger domain with shrink parameter ``delta``."""
    if not 0 < delta <= MAX_DELTA:
        raise ValueError(f"delta must lie in (0, {MAX_DELTA}]")
    if resolution < MIN_VERTICES:
        raise ValueError(f"resolution must be at least {MIN_VERTICES}")
    dom = DomainSpec(float(delta), _boundary(delta, resolution))
    poly = dom.polygon
    if not poly.exterior.is_simple:
        raise ValueError("discretized boundary self-intersects")
    k = _k_samples()
    if not dom.contains(k).all():
        raise ValueError("domain does not contain K")
    margin = shapely.distance(poly.exterior, shapely.points(k.real, k.imag)).min()
    if margin < delta / 2:
        raise ValueError(f"containment margin {margin:.3g} below delta/2")
    return dom


def disc_domain(delta, resolution=1024):
    """Polygon inscribed in the circle of radius ``1 + delta`` (no finger)."""
    t = 2 * np.pi * np.arange(resolution) / resolution
    return DomainSpec(float(delta), (1.0 + delta) * np.exp(1j * t))


def is_nested(inner, outer):
    """True if every vertex of ``inner`` lies inside ``outer``."""
    return bool(outer.contains(inner.vertices).all())


def hausdorff_to_k(dom):
    """Max distance from the boundary vertices to K = closed disc U [1, 2]."""
    v = dom.vertices
    to_disc = np.maximum(np.abs(v) - 1.0, 0.0)
    x = np.clip(v.real, 1.0, 2.0)
    to_seg = np.abs(v - x)
    return float(np.minimum(to_disc, to_seg).max())


# elementary maps --------------------------------------------------------------

def _moeb(z, b):
    """z / (1 - z/b); b = inf gives the identity."""
    return z if np.isinf(b) else z / (1.0 - z / b)


def _moeb_inv(w, b):
    return w if np.isinf(b) else w / (1.0 + w / b)


def _slit_open(w, c):
    """H minus [0, ic] onto H; the branch is ~w at infinity and real on R."""
    w = np.asarray(w, dtype=complex)
    zero = w == 0
    safe = np.where(zero, 1.0, w)
    # the base of the slit is taken from the interior (left) side
    return np.where(zero, -c, safe * np.sqrt(1.0 + (c / safe) ** 2))


def _slit_close(u, c):
    u = np.asarray(u, dtype=complex)
    u = u.real + 1j * np.maximum(u.imag, 0.0)
    near = np.abs(u) < c
    safe = np.where(near, 1.0, u)
    w = np.where(near, 1j * c * np.sqrt(1.0 - (u / c) ** 2),
                 safe * np.sqrt(1.0 - (c / safe) ** 2))
    return np.where(w.imag < 0, -w, w)


def _geodesic_params(a):
    asq = abs(a) ** 2
    b = np.inf if a.real == 0 else asq / a.real
    c = asq / a.imag
    return b, c


class ZipperMap:
    """Normalized conformal map ``phi`` from the unit disc onto a zipped domain.

    ``map(zeta)`` evaluates ``phi`` and ``map.inverse(w)`` evaluates
    ``phi^{-1}``.  ``phi(0) = 0`` and ``phi'(0) > 0``.
    """

    def __init__(self, z0, z1, bs, cs, zeta0, origin, rotation, vertices=None,
                 prevertices_h=None):
        self.z0, self.z1 = complex(z0), complex(z1)
        self.bs = np.asarray(bs, dtype=float)
        self.cs = np.asarray(cs, dtype=float)
        self.zeta0 = float(zeta0)
        self.origin = complex(origin)  # image of 0 in the upper half-plane
        self.rotation = complex(rotation)
        self.vertices = vertices
        self.prevertices_h = prevertices_h
        self.crowded = None

    @property
    def stages(self):
        return len(self.bs) + 2

    # W -> H -------------------------------------------------------------------
    def to_half_plane(self, w):
        z = np.asarray(w, dtype=complex)
        z = 1j * np.sqrt((z - self.z1) / (z - self.z0))
        for b, c in zip(self.bs, self.cs):
            z = _slit_open(_moeb(z, b), c)
        return -(_moeb(z, self.zeta0) ** 2)

    def _half_to_disc(self, u):
        p = self.origin
        return self.rotation * (u - p) / (u - np.conj(p))

    def _disc_to_half(self, zeta):
        p = self.origin
        s = np.asarray(zeta, dtype=complex) / self.rotation
        return (p - s * np.conj(p)) / (1.0 - s)

    # H -> W -------------------------------------------------------------------
    def from_half_plane(self, u):
        u = np.asarray(u, dtype=complex)
        t = -np.sqrt(-u)
        t = np.where(t.imag < 0, -t, t)
        z = _moeb_inv(t, self.zeta0)
        for b, c in zip(self.bs[::-1], self.cs[::-1]):
            z = _moeb_inv(_slit_close(z, c), b)
        v = -z ** 2
        return (self.z1 - v * self.z0) / (1.0 - v)

    def __call__(self, zeta):
        return self.from_half_plane(self._disc_to_half(zeta))

    def inverse(self, w):
        return self._half_to_disc(self.to_half_plane(w))

    def derivative_at_zero(self, h=1e-4):
        """Central-difference estimate of ``phi'(0)``."""
        return complex((self(h) - self(-h)) / (2 * h))


class IdentityMap(ZipperMap):
    """The identity of the disc, as a stand-in ZipperMap."""

    def __init__(self):
        super().__init__(0, 0, [], [], 1.0, 1j, 1.0)

    def __call__(self, zeta):
        return np.asarray(zeta, dtype=complex)

    def inverse(self, w):
        return np.asarray(w, dtype=complex)


def _orient_ccw(v):
    area = 0.5 * np.sum(v.real * np.roll(v.imag, -1) - np.roll(v.real, -1) * v.imag)
    return v if area > 0 else v[::-1]


def riemann_map(dom, tol_boundary=None, check_samples=4096):
    """Geodesic-zipper Riemann map ``phi: D -> W`` with ``phi(0)=0, phi'(0)>0``."""
    v = _orient_ccw(np.asarray(dom.vertices, dtype=complex))
    # start opposite the finger so the disc part is spread out in the final
    # half-plane coordinates rather than crowded into a tiny window
    v = np.roll(v, -int(np.argmin(v.real)))
    n = len(v) - 1
    z0, z1 = v[0], v[1]
    pts = np.append(v[2:], 0.0)  # the origin rides along at the end
    pts = 1j * np.sqrt((pts - z1) / (pts - z0))
    # derivative of the origin's image, by the chain rule
    vv = (0.0 - z1) / (0.0 - z0)
    deriv = 1j / (2 * np.sqrt(vv)) * (z1 - z0) / (0.0 - z0) ** 2
    bs = np.empty(n - 1)
    cs = np.empty(n - 1)
    zeta0 = np.inf
    for k in range(n - 1):
        a = pts[k]
        if not np.isfinite(a) or a.imag <= 0:
            raise ZipperBreakdown("vertex left the upper half-plane", k + 2)
        b, c = _geodesic_params(a)
        if not (np.isfinite(c) and c > 0):
            raise ZipperBreakdown("degenerate geodesic step", k + 2)
        bs[k], cs[k] = b, c
        rest = pts[k + 1:]
        w = _moeb(rest, b)
        # chain rule on the origin (last entry)
        wo = w[-1]
        d_moeb = 1.0 if np.isinf(b) else 1.0 / (1.0 - rest[-1] / b) ** 2
        u = _slit_open(w, c)
        if abs(u[-1]) == 0:
            raise ZipperBreakdown("origin collapsed onto the boundary", k + 2)
        deriv *= d_moeb * wo / u[-1]
        pts[k + 1:] = u
        pts[k] = 0.0
        if np.isinf(zeta0):
            # z0 sits at infinity until the first step with finite b
            zeta0 = np.inf if np.isinf(b) else -np.sign(b) * np.hypot(b, c)
        else:
            zeta0 = _real_step(zeta0, b, c)
    if not np.isfinite(zeta0) or zeta0 <= 0:
        raise ZipperBreakdown("vertex ordering degeneracy at the closing step", 0)
    o = pts[-1]
    t = _moeb(o, zeta0)
    deriv *= 2 * t / (1.0 - o / zeta0) ** 2 * -1
    origin = -t ** 2
    if origin.imag <= 0:
        raise ZipperBreakdown("interior not on the expected side; check orientation", 0)
    # psi(w) = rot * (u - p)/(u - conj p); psi'(0) = rot * deriv / (p - conj p)
    dpsi = deriv / (origin - np.conj(origin))
    rotation = np.exp(-1j * np.angle(dpsi))
    zmap = ZipperMap(z0, z1, bs, cs, zeta0, origin, rotation, vertices=v)
    zmap.prevertices_h = _prevertices(zmap, v)
    tol = 5e-3 * (1.0 + dom.delta) if tol_boundary is None else tol_boundary
    zmap.crowded = _check_boundary(zmap, v, tol, check_samples)
    return zmap


def _real_step(x, b, c):
    t = _moeb(x, b)
    return np.sign(t) * np.hypot(t, c)


def _prevertices(zmap, v):
    """Images of the vertices on the real axis of the half-plane."""
    n = len(v) - 1
    out = np.empty(n + 1)
    out[0] = zmap.zeta0
    x = np.full(n + 1, np.nan)
    for k in range(n - 1):
        b, c = zmap.bs[k], zmap.cs[k]
        done = ~np.isnan(x)
        x[done] = _real_step(x[done], b, c)
        # the vertex just processed sits at the base of the slit, on the interior side
        x[k + 1] = -c
    x[n] = 0.0
    t = x[1:]
    tt = _moeb(t, zmap.zeta0)
    out[1:] = -(tt ** 2)
    out[0] = np.inf
    return out


def _crowded(zmap, v):
    """Vertices whose prevertices sit closer together than double precision resolves."""
    ph = zmap.prevertices_h
    theta = np.full(len(v), np.nan)
    fin = np.isfinite(ph)
    theta[fin] = np.angle(zmap._half_to_disc(ph[fin].astype(complex)))
    theta[~fin] = np.angle(zmap.rotation)
    gap = np.abs(np.angle(np.exp(1j * (np.roll(theta, -1) - theta))))
    tight = gap < 1e-12
    return tight | np.roll(tight, 1)


def _check_boundary(zmap, v, tol, samples):
    """Check vertex correspondence and that the image of the circle follows the polygon.

    Returns the boolean mask of vertices too crowded to check pointwise.
    """
    ph = zmap.prevertices_h
    crowded = _crowded(zmap, v)
    check = np.isfinite(ph) & ~crowded
    back = zmap.from_half_plane(ph[check].astype(complex))
    err = np.abs(back - v[check])
    if err.size and err.max() > tol:
        raise ZipperBreakdown(f"vertex mismatch {err.max():.3g} exceeds {tol:.3g}",
                              int(np.flatnonzero(check)[np.argmax(err)]))
    ring = zmap(np.exp(2j * np.pi * np.arange(samples) / samples))
    closed = np.append(v, v[0])
    edge = LineString(np.column_stack([closed.real, closed.imag]))
    dist = shapely.distance(edge, shapely.points(ring.real, ring.imag))
    if not np.all(np.isfinite(dist)) or dist.max() > tol:
        raise ZipperBreakdown(f"image boundary deviates by {np.nanmax(dist):.3g}")
    return crowded


def preimage(zmap, w, dom=None):
    """The disc point mapped to ``w``."""
    if dom is not None and not dom.contains(w).all():
        raise DomainError(f"{w!r} lies outside the domain")
    if dom is None and zmap.vertices is not None:
        poly = Polygon(np.column_stack([zmap.vertices.real, zmap.vertices.imag]))
        if not poly.contains(Point(complex(w).real, complex(w).imag)):
            raise DomainError(f"{w!r} lies outside the domain")
    zeta = complex(zmap.inverse(complex(w)))
    if not abs(zeta) < 1.0:
        raise CrowdingError(f"preimage of {w!r} rounds onto the unit circle")
    miss = abs(complex(zmap(zeta)) - w)
    if miss > ROUNDTRIP_TOL * max(1.0, abs(w)):
        raise CrowdingError(f"preimage of {w!r} is unresolved in double precision "
                            f"(round trip misses by {miss:.3g})")
    return zeta


def convergence_report(maps, rho, samples=2048):
    """Sup of ``|phi_k(z) - z|`` over ``|z| <= rho`` for each map."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    t = np.exp(2j * np.pi * np.arange(samples) / samples)
    # phi - id is holomorphic, so the circle |z| = rho carries the sup
    z = rho * t
    return [float(np.abs(m(z) - z).max()) for m in maps]
