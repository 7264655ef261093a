import numpy as np
import pytest

from densedisc.conformal import (CrowdingError, IdentityMap, ZipperBreakdown, build_domain,
                                 convergence_report, disc_domain, hausdorff_to_k, is_nested,
                                 preimage, riemann_map)
from densedisc.hypgeo import DomainError


@pytest.fixture(scope="module")
def finger():
    dom = build_domain(0.25, 1024)
    return dom, riemann_map(dom)


@pytest.fixture(scope="module")
def disc():
    dom = disc_domain(0.25, 512)
    return dom, riemann_map(dom)


def random_disc(count, rmax, seed=0):
    rng = np.random.default_rng(seed)
    return rmax * np.sqrt(rng.uniform(size=count)) * np.exp(2j * np.pi * rng.uniform(size=count))


def test_build_domain_contains_k():
    dom = build_domain(0.5, 256)
    t = np.linspace(0, 2 * np.pi, 500)
    assert dom.contains(np.exp(1j * t)).all()
    assert dom.contains(np.linspace(1, 2, 100)).all()
    assert dom.contains(2.0 + 0.4)


def test_build_domain_thin():
    dom = build_domain(0.01, 1024)
    assert hausdorff_to_k(dom) <= 0.02


def test_build_domain_rejects():
    with pytest.raises(ValueError):
        build_domain(0.6, 256)
    with pytest.raises(ValueError):
        build_domain(0.0, 256)
    with pytest.raises(ValueError):
        build_domain(0.1, 16)


def test_domains_nest():
    doms = [build_domain(2.0 ** -k) for k in range(1, 7)]
    assert all(is_nested(b, a) for a, b in zip(doms, doms[1:]))
    assert not is_nested(doms[0], doms[-1])


def test_disc_oracle(disc):
    _, phi = disc
    z = 0.9 * np.exp(2j * np.pi * np.arange(2048) / 2048)
    assert np.abs(phi(z) - 1.25 * z).max() < 1e-2


def test_normalization(finger, disc):
    for _, phi in (finger, disc):
        assert abs(phi(0.0)) < 1e-10
        d = phi.derivative_at_zero()
        assert d.real > 0 and abs(np.angle(d)) < 1e-6


def test_round_trip(finger):
    _, phi = finger
    z = random_disc(100, 0.95)
    assert np.abs(phi.inverse(phi(z)) - z).max() < 1e-8


def test_image_inside_polygon(finger):
    dom, phi = finger
    z = random_disc(1000, 0.999, seed=1)
    assert dom.contains(phi(z)).all()


def test_schwarz(finger):
    _, phi = finger
    z = random_disc(1000, 0.9, seed=2)
    assert np.all(np.abs(phi.inverse(z)) <= np.abs(z) + 1e-6)


def test_preimage_examples(finger, disc):
    dom, phi = finger
    assert abs(preimage(phi, 0.0)) < 1e-10
    a = preimage(phi, 2.0)
    assert abs(a) < 1 and abs(phi(a) - 2) < 1e-8
    with pytest.raises(DomainError):
        preimage(phi, 5.0)
    with pytest.raises(DomainError):
        preimage(phi, 5.0, dom=dom)
    _, psi = disc
    assert preimage(psi, 1.0) == pytest.approx(1 / 1.25, abs=1e-6)


def test_preimage_crowded_finger_raises():
    phi = riemann_map(build_domain(2.0 ** -4))
    with pytest.raises(CrowdingError):
        preimage(phi, 2.0)


def test_convergence_report():
    maps = [riemann_map(build_domain(2.0 ** -k)) for k in range(1, 7)]
    e = convergence_report(maps, 0.7)
    assert all(x > 0 for x in e)
    assert all(b <= a * 1.1 for a, b in zip(e, e[1:]))
    assert e[-1] < 0.05


def test_convergence_report_identity():
    assert convergence_report([IdentityMap(), IdentityMap()], 0.5) == [0.0, 0.0]
    assert abs(preimage(IdentityMap(), 0.3)) == pytest.approx(0.3)


def test_convergence_report_radius():
    with pytest.raises(ValueError):
        convergence_report([IdentityMap()], 1.0)


def test_breakdown_on_bad_tolerance():
    with pytest.raises(ZipperBreakdown):
        riemann_map(build_domain(0.25, 128), tol_boundary=1e-9)
