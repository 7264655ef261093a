"""Inductive construction of a polynomial disc hitting a prescribed point list.

Each stage takes ``(f_n, r_n, a_{j,n})`` and the next target ``s_{n+1}`` and
produces ``f_{n+1}`` with

* ``(r_n + 1) / 2 < r_{n+1} < 1`` and ``r_{n+1} > |a_{n+1,n+1}|``,
* ``f_{n+1}(a_{j,n+1}) = s_j`` for ``j <= n + 1``,
* ``sup |f_{n+1} - f_n| < 2**-(n+1) * epsilon`` on ``|z| <= r_n``,
* Poincare drift ``d(a_{j,n}, a_{j,n+1}) < 2**-n``.

A stage is a loop over trials ``t = 1, 2, ...`` with
``lam_t = 1 - (1 - base) 2**-t`` and ``k = n + t``: fit ``g`` on K to
``f_n(lam z)`` plus a path to ``s_{n+1}``, map the disc onto a thin
neighborhood ``W`` of K, and read off ``f_{n+1}`` as a Taylor truncation of
``g o phi`` corrected to hit the nodes exactly.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import conformal
from .denseset import Box, DenseEnumeration
from .hypgeo import DomainError, poincare_distance, radius_bound
from .mergelyan import (PATHS, ApproximationFailure, ApproxRequest, StageData,
                        approximate_on_K)
from .polymap import ETA, NodeSet, PolyMap, lagrange_correct, sup_norm, taylor_from_samples

log = logging.getLogger(__name__)

MAX_TAYLOR_SAMPLES = 1 << 20


class ConfigError(ValueError):
    """Malformed or out-of-range run configuration."""


class StageFailure(RuntimeError):
    """A stage ran out of trials; carries the partial run and the best attempt."""

    def __init__(self, n, attempts, state=None, certificates=(), stage_maps=()):
        best = best_attempt(attempts)
        reason = best["reason"] if best else "no trials"
        super().__init__(f"stage {n} failed after {len(attempts)} trials; best attempt: {reason}")
        self.n = n
        self.attempts = attempts
        self.best = best
        self.state = state
        self.certificates = list(certificates)
        self.stage_maps = list(stage_maps)


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _unpair(p):
    return complex(p[0], p[1])


@dataclass(frozen=True)
class RunConfig:
    m: int
    seed_map: PolyMap
    epsilon: float
    r: float
    stages: int
    box: Box
    level_cap: int = None
    degree_cap: int = 400
    interp_tol: float = 1e-8
    taylor_degree_cap: int = 8192
    retry_budget: int = 40
    delta_max: float = 0.3
    domain_resolution: int = 1024
    path: str = "blend"
    fit_factor: float = 2.0 ** -4

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ConfigError("m must be a positive integer")
        if not 0 < self.r < 1:
            raise ConfigError(f"r = {self.r} must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not isinstance(self.stages, (int, np.integer)) or self.stages < 1:
            raise ConfigError("stages must be a positive integer")
        if self.seed_map.m != self.m or self.box.m != self.m:
            raise ConfigError("seed map and box must have dimension m")
        if self.degree_cap < 1 or self.taylor_degree_cap < 1 or self.retry_budget < 1:
            raise ConfigError("caps and retry budget must be positive")
        if not self.interp_tol > 0:
            raise ConfigError("interp_tol must be positive")
        if not 0 < self.delta_max <= conformal.MAX_DELTA:
            raise ConfigError(f"delta_max must lie in (0, {conformal.MAX_DELTA}]")
        if self.path not in PATHS:
            raise ConfigError(f"path must be one of {PATHS}")
        if not 0 < self.fit_factor <= 1:
            raise ConfigError("fit_factor must lie in (0, 1]")

    def enumeration(self):
        return DenseEnumeration(self.box, self.level_cap)

    def targets(self, count):
        return self.enumeration().take(count)

    def to_json(self):
        return {
            "m": self.m,
            "epsilon": self.epsilon,
            "r": self.r,
            "stages": self.stages,
            "seed_map": self.seed_map.to_json(),
            "dense_set": {"box": self.box.to_json(), "level_cap": self.level_cap},
            "degree_cap": self.degree_cap,
            "tolerances": {
                "interp_residual": self.interp_tol,
                "taylor_degree_cap": self.taylor_degree_cap,
                "retry_budget": self.retry_budget,
                "delta_max": self.delta_max,
                "domain_resolution": self.domain_resolution,
                "fit_factor": self.fit_factor,
            },
            "path": self.path,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            m = obj["m"]
            seed = obj.get("seed_map")
            seed = PolyMap.zero(m) if seed is None else PolyMap.from_json({"m": m, **seed})
            dense = obj.get("dense_set", {})
            box = Box(dense["box"]) if "box" in dense else Box.square(m)
            tol = obj.get("tolerances", {})
            return cls(
                m=m, seed_map=seed, epsilon=float(obj["epsilon"]), r=float(obj["r"]),
                stages=obj["stages"], box=box, level_cap=dense.get("level_cap"),
                degree_cap=int(obj.get("degree_cap", 400)),
                interp_tol=float(tol.get("interp_residual", 1e-8)),
                taylor_degree_cap=int(tol.get("taylor_degree_cap", 8192)),
                retry_budget=int(tol.get("retry_budget", 40)),
                delta_max=float(tol.get("delta_max", 0.3)),
                domain_resolution=int(tol.get("domain_resolution", 1024)),
                fit_factor=float(tol.get("fit_factor", 2.0 ** -4)),
                path=obj.get("path", "blend"),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc


@dataclass
class StageState:
    """``f_n``, ``r_n`` and the nodes ``a_{j,n}`` with their targets ``s_j``."""

    n: int
    f: PolyMap
    r: float
    nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    targets: np.ndarray = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=complex).ravel()
        if self.targets is None:
            self.targets = np.zeros((0, self.f.m), dtype=complex)
        self.targets = np.asarray(self.targets, dtype=complex).reshape(len(self.nodes), self.f.m)
        if not 0 < self.r < 1:
            raise ValueError("r_n must lie in (0, 1)")
        if np.any(np.abs(self.nodes) >= 1):
            raise ValueError("nodes must lie in the open disc")

    @classmethod
    def initial(cls, cfg):
        return cls(0, cfg.seed_map, cfg.r)

    def residuals(self):
        if not len(self.nodes):
            return np.zeros(0)
        return np.linalg.norm(self.f.eval(self.nodes) - self.targets, axis=-1)


@dataclass
class StageCertificate:
    n: int
    lam: float
    k: int
    err: float
    delta: float
    r_prev: float
    r_next: float
    sup_gap: float
    drifts: list
    new_node: complex
    nodes: list
    residuals: list
    target: list
    degree: int
    approx_degree: int
    approx_error: float
    taylor_radius: float
    taylor_tail: float
    trials: int

    def to_json(self):
        return {
            "n": self.n,
            "lambda": self.lam,
            "k": self.k,
            "err": self.err,
            "delta": self.delta,
            "r_n": self.r_prev,
            "r_next": self.r_next,
            "sup_gap": self.sup_gap,
            "drifts": [float(d) for d in self.drifts],
            "new_node": _pair(self.new_node),
            "nodes": [_pair(a) for a in self.nodes],
            "residuals": [float(x) for x in self.residuals],
            "target": [_pair(s) for s in self.target],
            "degree": self.degree,
            "approx_degree": self.approx_degree,
            "approx_error": self.approx_error,
            "taylor_radius": self.taylor_radius,
            "taylor_tail": self.taylor_tail,
            "trials": self.trials,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            n=obj["n"], lam=obj["lambda"], k=obj["k"], err=obj["err"], delta=obj["delta"],
            r_prev=obj["r_n"], r_next=obj["r_next"], sup_gap=obj["sup_gap"],
            drifts=list(obj["drifts"]), new_node=_unpair(obj["new_node"]),
            nodes=[_unpair(p) for p in obj["nodes"]], residuals=list(obj["residuals"]),
            target=[_unpair(p) for p in obj["target"]], degree=obj["degree"],
            approx_degree=obj["approx_degree"], approx_error=obj["approx_error"],
            taylor_radius=obj["taylor_radius"], taylor_tail=obj["taylor_tail"],
            trials=obj["trials"],
        )


def certificate_checks(cert, cfg):
    """Certificate inequalities as ``{condition: (passed, value, bound)}``."""
    n, eps = cert.n, cfg.epsilon
    a_new = abs(cert.new_node)
    r_lo = max((cert.r_prev + 1) / 2, a_new, cert.r_prev)
    drift = max(cert.drifts, default=0.0)
    resid = max(cert.residuals, default=0.0)
    return {
        "radius": (r_lo < cert.r_next < 1, cert.r_next, r_lo),
        "residual": (resid < cfg.interp_tol, resid, cfg.interp_tol),
        "gap": (cert.sup_gap < eps * 2.0 ** -(n + 1), cert.sup_gap, eps * 2.0 ** -(n + 1)),
        "drift": (drift < 2.0 ** -n, drift, 2.0 ** -n),
    }


def best_attempt(attempts):
    """The trial that got furthest (ties: smallest measured gap)."""
    if not attempts:
        return None
    return max(attempts, key=lambda a: (a["reached"], -a.get("gap", np.inf)))


STEPS = ("approximate", "riemann_map", "preimage", "taylor", "certificate")


def _schedule(state, cfg, t):
    base = max(state.r, float(np.abs(state.nodes).max(initial=0.0)))
    lam = 1.0 - (1.0 - base) * 2.0 ** -t
    k = state.n + t
    return lam, k, min(cfg.delta_max, 2.0 ** -k)


def _taylor_samples(radius, degree, target, modulus):
    """FFT length that resolves ``degree`` and keeps aliasing near ``target``."""
    need = 4 * (degree + 1)
    if modulus > target:
        need = max(need, int(np.ceil(np.log(target / modulus) / np.log(radius))))
    return min(1 << int(np.ceil(np.log2(need))), MAX_TAYLOR_SAMPLES)


class _CircleCache:
    """``phi`` on the circle of radius ``rho``, reused across FFT lengths.

    FFT lengths are powers of two, so doubling the length only needs the
    new odd-indexed points.
    """

    def __init__(self, phi, rho):
        self.phi, self.rho = phi, rho
        self.size, self.values = 0, None

    def __call__(self, z):
        n = len(z)
        if n != self.size:
            if self.size and n % self.size == 0:
                ratio = n // self.size
                vals = np.empty(n, dtype=complex)
                vals[::ratio] = self.values
                mask = np.ones(n, dtype=bool)
                mask[::ratio] = False
                vals[mask] = self.phi(z[mask])
            else:
                vals = self.phi(z)
            self.size, self.values = n, vals
        return self.values


def _recover(h, state, nodes, targets, rho, cfg):
    """Taylor truncation of ``h`` at radius ``rho`` plus node correction.

    The degree doubles until the tail bound on ``|z| <= r_n`` is below
    ``2**-(n+2) eps`` and the corrected map stays within the gap budget.
    The gap can plateau for several doublings before the new node is
    resolved, so there is no early stop.
    """
    n, eps = state.n, cfg.epsilon
    tail_target = eps * 2.0 ** -(n + 2)
    gap_target = eps * 2.0 ** -(n + 1)
    ns = NodeSet(nodes, targets)
    degree, modulus = 16, 1.0
    best = None
    while True:
        samples = _taylor_samples(rho, degree, tail_target, modulus)
        tr = taylor_from_samples(h, rho, degree, samples=max(samples, 4 * (degree + 1)))
        modulus = tr.max_modulus
        f_next, _ = lagrange_correct(tr.poly, ns)
        gap = sup_norm(f_next, state.f, state.r)
        tail = tr.tail(state.r)
        best = (f_next, gap, tail, rho)
        if (tail < tail_target and gap < gap_target) or degree >= cfg.taylor_degree_cap:
            return best
        degree = min(2 * degree, cfg.taylor_degree_cap)


def run_stage(state, s_next, cfg, domain_cache=None):
    """One inductive step.  Returns ``(next_state, certificate)``.

    Raises :class:`StageFailure` (with every trial's diagnostics) when the
    retry budget runs out.
    """
    s_next = np.atleast_1d(np.asarray(s_next, dtype=complex))
    n = state.n
    domain_cache = {} if domain_cache is None else domain_cache
    attempts = []
    for t in range(1, cfg.retry_budget + 1):
        lam, k, delta = _schedule(state, cfg, t)
        info = {"t": t, "lambda": lam, "k": k, "delta": delta, "reached": 0}
        attempts.append(info)
        try:
            info["reached"] = 1
            data = StageData(state.f, lam, s_next, path_kind=cfg.path)
            old = state.nodes / lam
            ns = NodeSet(np.append(old, 2.0), np.vstack([state.targets, s_next]))
            # a tighter fit than 2^-k still meets the 2^-k requirement and
            # leaves room in the sup-gap budget
            req = ApproxRequest(data, 2.0 ** -k * cfg.fit_factor, ns, cfg.degree_cap)
            g, err_meas = approximate_on_K(req)
            info.update(approx_degree=g.degree, approx_error=err_meas)

            info["reached"] = 2
            if delta not in domain_cache:
                dom = conformal.build_domain(delta, cfg.domain_resolution)
                domain_cache[delta] = conformal.riemann_map(dom)
            phi = domain_cache[delta]

            info["reached"] = 3
            a_new = conformal.preimage(phi, 2.0)
            floor = max(abs(a_new), (state.r + 1) / 2, state.r)
            r_next = floor + (1.0 - floor) / 2
            if not floor < r_next < 1:
                raise DomainError("no room for r_next below 1")

            info["reached"] = 4
            nodes = np.append(old, a_new)
            targets = np.vstack([state.targets, s_next])
            rho = (1 + r_next) / 2
            on_circle = _CircleCache(phi, rho)
            f_next, gap, tail, rho = _recover(lambda z: g.eval(on_circle(z)), state, nodes,
                                              targets, rho, cfg)
            info.update(gap=gap, degree=f_next.degree)

            info["reached"] = 5
            resid = np.linalg.norm(f_next.eval(nodes) - targets, axis=-1)
            drifts = [poincare_distance(a, b) for a, b in zip(state.nodes, old)]
            cert = StageCertificate(
                n=n, lam=lam, k=k, err=2.0 ** -k, delta=delta, r_prev=state.r, r_next=r_next,
                sup_gap=gap, drifts=drifts, new_node=a_new, nodes=list(nodes),
                residuals=list(resid), target=list(s_next), degree=f_next.degree,
                approx_degree=g.degree, approx_error=err_meas, taylor_radius=rho,
                taylor_tail=tail, trials=t)
            failed = [c for c, (ok, _, _) in certificate_checks(cert, cfg).items() if not ok]
            if failed:
                raise ValueError("certificate fails " + ", ".join(failed))
        except (ApproximationFailure, conformal.ZipperBreakdown, DomainError,
                ValueError) as exc:
            info["reason"] = f"{STEPS[info['reached'] - 1]}: {exc}"
            log.info("stage %d trial %d rejected: %s", n, t, info["reason"])
            continue
        new_state = StageState(n + 1, f_next, r_next, nodes, targets)
        return new_state, cert
    raise StageFailure(n, attempts, state=state)


def run(cfg, keep_stages=False, progress=None):
    """Run ``cfg.stages`` stages.  Returns ``(F_N, certificates, stage_maps)``.

    ``stage_maps`` is ``[f_0, ..., f_N]`` when ``keep_stages`` is set, else
    empty.  ``progress`` is called with each certificate as it is accepted.
    """
    state = StageState.initial(cfg)
    targets = cfg.targets(cfg.stages)
    certs, maps = [], [state.f] if keep_stages else []
    cache = {}
    for s in targets:
        try:
            state, cert = run_stage(state, s, cfg, domain_cache=cache)
        except StageFailure as exc:
            exc.certificates, exc.stage_maps, exc.state = certs, maps, state
            raise
        certs.append(cert)
        if keep_stages:
            maps.append(state.f)
        if progress is not None:
            progress(cert)
    return state.f, certs, maps


@dataclass
class Check:
    stage: object  # stage index or "final"
    condition: str
    passed: bool
    value: float
    bound: float

    def __str__(self):
        mark = "ok  " if self.passed else "FAIL"
        return f"{mark} stage={self.stage} {self.condition}: {self.value:.6g} vs {self.bound:.6g}"


@dataclass
class Report:
    checks: list

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]


def verify_certificates(final_map, certificates, cfg, stage_maps=None):
    """Re-check every certificate inequality from raw data.

    Targets are regenerated from the dense set, node chains and drifts are
    recomputed from the recorded ``lambda`` and new nodes, and final
    residuals are evaluated on ``final_map``.  With ``stage_maps``
    (``f_0 .. f_N``) the sup gaps are re-measured too.
    """
    checks = []
    add = checks.append
    N = len(certificates)
    targets = cfg.targets(N) if N else np.zeros((0, cfg.m), dtype=complex)
    nodes = np.zeros(0, dtype=complex)
    r_prev = cfg.r
    gaps = []
    for i, cert in enumerate(certificates):
        add(Check(i, "index", cert.n == i, cert.n, i))
        add(Check(i, "r_n", cert.r_prev == r_prev, cert.r_prev, r_prev))
        for cond, (ok, value, bound) in certificate_checks(cert, cfg).items():
            add(Check(i, cond, bool(ok), value, bound))
        s_err = float(np.abs(np.asarray(cert.target) - targets[i]).max())
        add(Check(i, "target", s_err == 0.0, s_err, 0.0))
        moved = nodes / cert.lam
        if len(nodes):
            try:
                d = float(np.max(poincare_distance(nodes, moved)))
            except DomainError:
                d = np.inf  # lambda pushed a node out of the disc
            add(Check(i, "drift_recomputed", d < 2.0 ** -i, d, 2.0 ** -i))
        chain = np.append(moved, cert.new_node)
        rec = np.asarray(cert.nodes, dtype=complex)
        mism = float(np.abs(rec - chain).max()) if rec.shape == chain.shape else np.inf
        add(Check(i, "node_chain", mism == 0.0, mism, 0.0))
        gap = cert.sup_gap
        if stage_maps:
            f_prev, f_next = stage_maps[i], stage_maps[i + 1]
            gap = sup_norm(f_next, f_prev, r_prev)
            bound = cfg.epsilon * 2.0 ** -(i + 1)
            add(Check(i, "gap_recomputed", gap < bound, gap, bound))
            res = np.linalg.norm(f_next.eval(chain) - targets[: i + 1], axis=-1).max()
            add(Check(i, "residual_recomputed", res < cfg.interp_tol, res, cfg.interp_tol))
        gaps.append(gap)
        nodes, r_prev = chain, cert.r_next

    if N:
        res = float(np.linalg.norm(final_map.eval(nodes) - targets, axis=-1).max())
        add(Check("final", "exact_hits", res < cfg.interp_tol, res, cfg.interp_tol))
        budget = cfg.epsilon * (1 - 2.0 ** -N)
        total = float(sum(gaps))
        add(Check("final", "telescoping", total < budget, total, budget))
        dev = sup_norm(final_map, cfg.seed_map, cfg.r)
        add(Check("final", "seed_distance", dev <= budget * (1 + ETA), dev, budget * (1 + ETA)))
        radii = [cfg.r] + [c.r_next for c in certificates]
        # r_n >= 1 - (1 - r_0) 2^-n, written without cancellation at n = 0
        excess = max((1 - r) * 2.0 ** i - (1 - cfg.r) for i, r in enumerate(radii))
        add(Check("final", "radii_floor", excess <= 0, excess, 0.0))
        mods = node_persistence(certificates)
        worst = max(mods, default=0.0)
        add(Check("final", "node_persistence", worst < 1.0, worst, 1.0))
    return Report(checks)


def node_persistence(certificates):
    """Modulus bound on every node's trajectory implied by its drift sum.

    Node ``j`` starts at ``a_{j,j}`` and moves by Poincare steps summing to
    ``L_j``; it stays in the hyperbolic ball of radius ``L_j`` about its
    start, whose Euclidean modulus bound is returned.
    """
    out = []
    for j, cert in enumerate(certificates):
        start = cert.new_node
        length = sum(c.drifts[j] for c in certificates[j + 1:])
        out.append(_ball_modulus(start, length))
    return out


def _ball_modulus(center, radius):
    # Hyperbolic distance from 0 adds up along the triangle inequality.
    d0 = 2 * np.arctanh(min(abs(center), np.nextafter(1.0, 0)))
    return float(radius_bound(d0 + radius))
