"""Command line: ``densedisc construct | verify | audit | sample``.

A run directory holds ``config.json``, ``certificates.json``, ``final.map``
and, with ``--keep-stages``, ``stages/f_000.map ...``.  A failed
construction also leaves ``failure.json`` with per-trial diagnostics.
Exit codes: 0 success, 1 run or check failure, 2 usage or config error.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .denseset import coverage_radius
from .driver import (ConfigError, RunConfig, StageCertificate, StageFailure, run,
                     verify_certificates)
from .polymap import PolyMap

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


class UsageError(Exception):
    pass


def _dump(path, obj):
    path.write_text(json.dumps(obj, indent=1) + "\n")


def _load(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"missing file {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def write_artifact(out, cfg, final_map, certificates, stage_maps=(), failure=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "config.json", cfg.to_json())
    _dump(out / "certificates.json", [c.to_json() for c in certificates])
    _dump(out / "final.map", final_map.to_json())
    if stage_maps:
        (out / "stages").mkdir(exist_ok=True)
        for i, f in enumerate(stage_maps):
            _dump(out / "stages" / f"f_{i:03d}.map", f.to_json())
    fail_path = out / "failure.json"
    if failure is not None:
        _dump(fail_path, _jsonable(failure))
    elif fail_path.exists():
        fail_path.unlink()


def load_artifact(run_dir):
    """``(cfg, final_map, certificates, stage_maps or None)`` from a run directory."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise UsageError(f"no run directory {run_dir}")
    cfg = RunConfig.from_json(_load(run_dir / "config.json"))
    certs = [StageCertificate.from_json(c) for c in _load(run_dir / "certificates.json")]
    final = PolyMap.from_json(_load(run_dir / "final.map"))
    stages = None
    sdir = run_dir / "stages"
    if sdir.is_dir():
        stages = [PolyMap.from_json(_load(p)) for p in sorted(sdir.glob("f_*.map"))]
    return cfg, final, certs, stages


def _stage_line(c):
    drift = max(c.drifts, default=0.0)
    return (f"stage {c.n}: lambda={c.lam:.12g} k={c.k} gap={c.sup_gap:.3e} "
            f"max_drift={drift:.3e} degree={c.degree}")


def cmd_construct(args):
    cfg = RunConfig.from_json(_load(args.config))
    try:
        final, certs, maps = run(cfg, keep_stages=args.keep_stages,
                                 progress=lambda c: print(_stage_line(c), flush=True))
    except StageFailure as exc:
        write_artifact(args.out, cfg, exc.state.f, exc.certificates, exc.stage_maps,
                       failure={"stage": exc.n, "best": exc.best, "attempts": exc.attempts})
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    write_artifact(args.out, cfg, final, certs, maps)
    print(f"done: {len(certs)} stages, degree {final.degree}")
    return 0


def cmd_verify(args):
    cfg, final, certs, stages = load_artifact(args.run)
    report = verify_certificates(final, certs, cfg, stage_maps=stages)
    for c in report.checks:
        if args.verbose or not c.passed:
            print(c)
    complete = len(certs) == cfg.stages
    if not complete:
        print(f"FAIL incomplete run: {len(certs)} of {cfg.stages} stages")
    ok = report.ok and complete
    print(f"{'PASS' if ok else 'FAIL'}: {len(report.failures)} failed of {len(report.checks)} checks")
    return 0 if ok else 1


def cmd_audit(args):
    if not args.probe_step > 0:
        raise UsageError("--probe-step must be positive")
    cfg, final, certs, _ = load_artifact(args.run)
    if not certs:
        print("no stages recorded")
        return 1
    targets = np.array([c.target for c in certs])
    nodes = np.asarray(certs[-1].nodes, dtype=complex)
    radius = coverage_radius(targets, cfg.box, args.probe_step)
    resid = float(np.linalg.norm(final.eval(nodes) - targets, axis=-1).max())
    modulus = float(np.abs(nodes).max())
    inside = bool(modulus < 1)
    print(f"hit points: {len(targets)}")
    print(f"coverage radius: {radius:.12g}")
    print(f"max node residual: {resid:.3e}")
    print(f"max node modulus: {modulus:.17g} ({'inside' if inside else 'NOT inside'} the disc)")
    return 0 if inside else 1


def vogel_points(count, radius):
    """Deterministic low-discrepancy points in the disc of given radius (Vogel spiral)."""
    j = np.arange(count)
    return radius * np.sqrt((j + 0.5) / count) * np.exp(1j * GOLDEN_ANGLE * j)


def cmd_sample(args):
    if not 0 < args.radius < 1:
        raise UsageError("--radius must lie in (0, 1)")
    if args.count < 1:
        raise UsageError("--count must be positive")
    cfg, final, _, stages = load_artifact(args.run)
    f = final
    if args.stage is not None:
        if not stages or not 0 <= args.stage < len(stages):
            raise UsageError(f"no stage map {args.stage} in the run")
        f = stages[args.stage]
    z = vogel_points(args.count, args.radius)
    vals = f.eval(z)
    header = ["z_re", "z_im"]
    for i in range(f.m):
        header += [f"F{i + 1}_re", f"F{i + 1}_im"]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for zi, v in zip(z, vals):
            row = [zi.real, zi.imag]
            for c in v:
                row += [c.real, c.imag]
            w.writerow([repr(float(x)) for x in row])
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="densedisc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="run the stage construction")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--keep-stages", action="store_true", help="write every f_n")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="recheck certificates of a run")
    v.add_argument("--run", required=True)
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("audit", help="density and node report")
    a.add_argument("--run", required=True)
    a.add_argument("--probe-step", type=float, default=0.01)
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("sample", help="write F on a point set in |z| < radius as CSV")
    s.add_argument("--run", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--radius", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--stage", type=int, default=None, help="use f_n instead of F_N")
    s.set_defaults(func=cmd_sample)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
