import json

import numpy as np
import pytest

from densedisc.polymap import (ETA, NodeSet, PolyMap, lagrange_correct, lebesgue_estimate,
                               sup_norm, taylor_from_samples)
from oracles import dense_sup, vandermonde_interpolant


def test_canonical_form():
    p = PolyMap([[1, 2, 0, 0]])
    assert p.degree == 1
    assert PolyMap([[0, 0]]) == PolyMap.zero(1)
    assert len(PolyMap.zero(2).coords[0]) == 1


def test_eval_examples():
    assert PolyMap([[0, 1]]).eval(0.5)[0] == 0.5
    c = PolyMap.constant([1 + 2j, -3])
    np.testing.assert_array_equal(c.eval(0.7j), [1 + 2j, -3])
    z = 0.5j
    naive = sum(c * z ** k for k, c in enumerate([1, 2, 1]))
    assert PolyMap([[1, 2, 1]]).eval(z)[0] == pytest.approx(naive, abs=1e-15)


def test_eval_shapes():
    p = PolyMap([[1, 1], [0, 0, 1]])
    assert p.eval(np.zeros((3, 4))).shape == (3, 4, 2)


def test_json_round_trip():
    p = PolyMap([[1 + 1e-17j, 0.1, 3j], [2]])
    q = PolyMap.from_json(json.loads(json.dumps(p.to_json())))
    assert p == q


def test_nodeset_rejects_duplicates():
    with pytest.raises(ValueError):
        NodeSet([0.1, 0.1], [[1], [2]])
    assert NodeSet([0, 0.5], [[1], [2]]).min_separation == 0.5


def test_sup_norm_examples():
    p = PolyMap([[1, 2, 3]])
    assert sup_norm(p, p, 0.5) == 0
    assert sup_norm(PolyMap([[0, 1]]), PolyMap.zero(1), 0.5) == pytest.approx(0.5 * (1 + ETA))
    zz = PolyMap([[0, 1, 1]])
    s = sup_norm(zz, PolyMap.zero(1), 0.9)
    ref = dense_sup(zz, PolyMap.zero(1), 0.9)
    assert ref <= s <= ref * (1 + ETA) * (1 + 1e-9)


def test_sup_norm_dominates_dense_sampling():
    rng = np.random.default_rng(3)
    for _ in range(100):
        dp, dq = rng.integers(0, 51, 2)
        p = PolyMap([rng.normal(size=dp + 1) + 1j * rng.normal(size=dp + 1)])
        q = PolyMap([rng.normal(size=dq + 1) + 1j * rng.normal(size=dq + 1)])
        rad = rng.uniform(0.3, 1.0)
        assert sup_norm(p, q, rad) >= dense_sup(p, q, rad, count=2 ** 17)


def test_sup_norm_radius_checked():
    with pytest.raises(ValueError):
        sup_norm(PolyMap.zero(1), PolyMap.zero(1), 1.5)


def test_taylor_examples():
    t = taylor_from_samples(lambda z: z ** 3, 0.9, 5)
    np.testing.assert_allclose(t.poly.coefficient_matrix(6)[:, 0], [0, 0, 0, 1, 0, 0], atol=1e-12)
    from math import factorial
    t = taylor_from_samples(np.exp, 0.8, 10)
    np.testing.assert_allclose(t.poly.coords[0], [1 / factorial(d) for d in range(11)], atol=1e-9)
    t = taylor_from_samples(lambda z: 1 / (1 - z / 2), 0.5, 8)
    np.testing.assert_allclose(t.poly.coords[0], 2.0 ** -np.arange(9), atol=1e-9)


def test_taylor_is_projection():
    rng = np.random.default_rng(4)
    for deg in [0, 3, 20, 60]:
        c = rng.normal(size=(2, deg + 1)) + 1j * rng.normal(size=(2, deg + 1))
        p = PolyMap(c)
        t = taylor_from_samples(p.eval, 0.95, deg)
        assert np.abs(t.poly.coefficient_matrix(deg + 1) - p.coefficient_matrix(deg + 1)).max() < 1e-11


def test_taylor_tail_bound_holds():
    # enough samples that aliasing (0.9**1024) is negligible next to the tail
    t = taylor_from_samples(lambda z: 1 / (1 - z), 0.9, 30, samples=1024)
    z = 0.5 * np.exp(2j * np.pi * np.arange(512) / 512)
    err = np.abs(t.poly.eval(z)[:, 0] - 1 / (1 - z)).max()
    assert err <= t.tail(0.5)


def test_taylor_rejects_bad_input():
    with pytest.raises(ValueError):
        taylor_from_samples(np.exp, 1.0, 3)
    with pytest.raises(ValueError):
        taylor_from_samples(lambda z: 1 / z, 0.5, 3, samples=8)
    with pytest.raises(ValueError), np.errstate(divide="ignore", invalid="ignore"):
        taylor_from_samples(lambda z: 1 / (z - 0.5), 0.5, 3)


def test_lagrange_examples():
    q, c = lagrange_correct(PolyMap.zero(1), NodeSet([0.3], [[1]]))
    assert q == PolyMap.constant([1])
    p = PolyMap([[1, 2, 3]])
    ns = NodeSet([0.1, -0.4j], p.eval(np.array([0.1, -0.4j])))
    q, c = lagrange_correct(p, ns)
    assert q == p and c == 0
    q, _ = lagrange_correct(PolyMap.zero(1), NodeSet([0, 0.5], [[1], [2]]))
    np.testing.assert_allclose(q.coords[0], vandermonde_interpolant([0, 0.5], [1, 2]), atol=1e-14)
    np.testing.assert_allclose(q.coords[0], [1, 2], atol=1e-14)


def _separated_nodes(rng, count, sep):
    nodes = []
    while len(nodes) < count:
        z = 0.95 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if all(abs(z - w) >= sep for w in nodes):
            nodes.append(z)
    return np.array(nodes)


def test_lagrange_exactness_random():
    rng = np.random.default_rng(5)
    for _ in range(50):
        count = rng.integers(1, 13)
        nodes = _separated_nodes(rng, count, 0.05)
        targets = rng.normal(size=(count, 2)) + 1j * rng.normal(size=(count, 2))
        p = PolyMap(rng.normal(size=(2, 6)))
        q, _ = lagrange_correct(p, NodeSet(nodes, targets))
        assert np.abs(q.eval(nodes) - targets).max() < 1e-9


def test_lebesgue_estimate_single_node():
    assert lebesgue_estimate([0.2]) == pytest.approx(1.0)
