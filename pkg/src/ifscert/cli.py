"""Command-line interface.

Subcommands:

  pigeonhole        build a direction and verify the floor congruences
  correction-check  run the drift/correction membership chains
  synth             generate a synthetic instance
  validate          check the five structural conditions of an instance
  certify           route a curve and emit a certificate, then re-verify it
  sweep             certify across a seed range and summarize

Exit codes: 0 success, 1 a check or certification failed, 2 bad input or
violated precondition, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .correction import build_covering, check_properties, check_return_lemma
from .geometry import PointC2, QuadrupleBasis
from .ifs import validate_correcting
from .matrices import FiniteMatrixGroup
from .pigeonhole import PreconditionError, build_direction, congruence_check
from .certifier import certify_intersection, verify_certificate
from .synth import make_instance

GROUPS = {
    "trivial": FiniteMatrixGroup.trivial,
    "cyclic4": FiniteMatrixGroup.cyclic4_central,
    "order2": FiniteMatrixGroup.order2_diagonal,
}


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_pigeonhole(args) -> int:
    from .reporting import plot_congruence, write_csv, write_report

    basis = QuadrupleBasis.standard(args.scale)
    w0 = PointC2(*args.w0)
    d = build_direction(w0, eta=args.eta, r=args.r, basis=basis,
                        m_override=args.m_override)
    x0 = tuple(args.x0)
    rep = congruence_check(d, x0, args.k_max)
    out = _outdir(args)
    body = {"direction": {"m": d.m, "beta": d.beta, "alphas": list(d.alphas),
                          "N_min": d.N_min, "strict": d.strict},
            "congruence": rep}
    write_report(out / "pigeonhole.json", body, "pigeonhole")
    D, nums = d.walk_numerators()
    write_csv(out / "direction.csv",
              ["coordinate", "numerator", "denominator"],
              [[t + 1, nums[t], D] for t in range(4)])
    plot_congruence(d, x0, min(args.k_max, 2000), out / "congruence.png")
    print(f"m={d.m} beta={d.beta} N_min={d.N_min} "
          f"congruence={'PASS' if rep['passed'] else 'FAIL'}")
    return 0 if rep["passed"] else 1


def cmd_correction_check(args) -> int:
    from .reporting import plot_correction, write_csv, write_report

    group = GROUPS[args.group]()
    system = build_covering(args.r_sphere, group, mode=args.mode,
                            subspace=None if args.mode == "lazy" else
                            [np.eye(2), np.diag([1, -1]).astype(complex)])
    rep = check_properties(system, args.x, args.samples, seed=args.seed)
    ret = check_return_lemma(system, max(1000, args.samples // 10),
                             seed=args.seed)
    out = _outdir(args)
    body = {"chains": rep, "return_lemma": ret}
    write_report(out / "correction.json", body, "correction-check")
    write_csv(out / "correction.csv", ["metric", "value"],
              sorted((k, repr(v)) for k, v in rep.items()))
    plot_correction(rep, out / "correction.png")
    ok = rep["violations"] == 0 and ret["violations"] == 0
    print(f"violations={rep['violations']} "
          f"(literal diagnostic failures={rep['literal_property_i_failures']}) "
          f"return-lemma violations={ret['violations']} "
          f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_synth(args) -> int:
    from .reporting import write_report
    from .serialize import instance_hash, save, to_jsonable

    inst = make_instance(seed=args.seed, depth=args.depth, x=args.x,
                         r_sphere=args.r_sphere)
    out = _outdir(args)
    save(inst, out / "instance.json")
    h = instance_hash(inst)
    write_report(out / "synth.json",
                 {"instance_hash": h, "seed": inst.seed, "depth": inst.depth,
                  "exit_level": inst.exit_level,
                  "corrector_level": inst.corrector_level}, "synth")
    print(f"instance {h[:16]} seed={inst.seed} depth={inst.depth} "
          f"exit_level={inst.exit_level}")
    return 0


def cmd_validate(args) -> int:
    from .reporting import plot_validation, validation_rows, write_csv, write_report
    from .serialize import load

    inst = load(args.instance)
    rep = validate_correcting(inst.ifs, inst.system, mode=args.mode,
                              seed=args.seed, lines=[inst.line])
    out = _outdir(args)
    body = {"mode": rep.mode, "passed": rep.passed,
            "strict_fineness_value": rep.strict_fineness_value,
            "strict_fineness_threshold": rep.strict_fineness_threshold,
            "conditions": [{"name": c.name, "passed": c.passed,
                            "value": c.value, "threshold": c.threshold,
                            "detail": c.detail} for c in rep.conditions]}
    write_report(out / "validation.json", body, "validate")
    write_csv(out / "validation.csv",
              ["condition", "passed", "value", "threshold", "detail"],
              validation_rows(rep))
    plot_validation(rep, out / "validation.png")
    for c in rep.conditions:
        print(f"{c.name}: {'PASS' if c.passed else 'FAIL'} "
              f"(value={c.value:g}, threshold={c.threshold:g})")
    return 0 if rep.passed else 1


def cmd_certify(args) -> int:
    from .reporting import (CERT_CSV_HEADER, certificate_rows,
                            plot_certificate, write_csv, write_report)
    from .serialize import instance_hash, load, save

    inst = load(args.instance)
    depth = args.depth if args.depth else inst.depth
    cert = certify_intersection(inst.ifs, inst.system, inst.line, depth,
                                instance_hash=instance_hash(inst))
    check = verify_certificate(inst.ifs, inst.system, inst.line, cert)
    out = _outdir(args)
    save(cert, out / "certificate.json")
    write_csv(out / "certificate.csv", CERT_CSV_HEADER,
              certificate_rows(cert))
    plot_certificate(cert, out / "certificate.png")
    write_report(out / "certify.json",
                 {"passed": cert.passed, "verified": check["valid"],
                  "depth": cert.depth, "failure": cert.failure,
                  "problems": check["problems"],
                  "final_distance": cert.final_distance,
                  "final_tolerance": cert.final_tolerance}, "certify")
    print(f"certify: {'PASS' if cert.passed else 'FAIL'} "
          f"verify: {'PASS' if check['valid'] else 'FAIL'} depth={cert.depth}")
    if not cert.passed:
        print(f"  failure: {cert.failure}")
    for p in check["problems"]:
        print(f"  problem: {p}")
    return 0 if cert.passed and check["valid"] else 1


def cmd_sweep(args) -> int:
    from .reporting import plot_sweep, write_csv, write_report

    rows = []
    for seed in range(args.seed, args.seed + args.count):
        inst = make_instance(seed=seed, depth=args.depth, x=args.x)
        cert = certify_intersection(inst.ifs, inst.system, inst.line,
                                    inst.depth)
        rows.append({"seed": seed, "depth": cert.depth,
                     "passed": cert.passed,
                     "cases": "".join(r.case[-1] for r in cert.records),
                     "failure": cert.failure})
    out = _outdir(args)
    write_csv(out / "sweep.csv", ["seed", "depth", "passed", "cases", "failure"],
              [[r["seed"], r["depth"], int(r["passed"]), r["cases"],
                r["failure"]] for r in rows])
    plot_sweep(rows, out / "sweep.png")
    n_ok = sum(r["passed"] for r in rows)
    write_report(out / "sweep.json",
                 {"passed": n_ok, "total": len(rows)}, "sweep")
    print(f"sweep: {n_ok}/{len(rows)} certified")
    return 0 if n_ok == len(rows) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ifscert",
                                 description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pigeonhole", help="floor-congruence direction checks")
    p.add_argument("--r", type=float, default=0.7)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--w0", type=float, nargs=4, default=[1.0, 0.0, 0.0, 0.0])
    p.add_argument("--x0", type=float, nargs=4, default=[0.0, 0.0, 0.0, 0.0])
    p.add_argument("--m-override", type=int, default=None)
    p.add_argument("--k-max", type=int, default=10000)
    p.add_argument("--out", default="out/pigeonhole")
    p.set_defaults(func=cmd_pigeonhole)

    p = sub.add_parser("correction-check", help="drift correction chains")
    p.add_argument("--r-sphere", type=float, default=0.05)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--group", choices=sorted(GROUPS), default="order2")
    p.add_argument("--mode", choices=["lazy", "subspace"], default="lazy")
    p.add_argument("--out", default="out/correction")
    p.set_defaults(func=cmd_correction_check)

    p = sub.add_parser("synth", help="generate a synthetic instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=45)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--r-sphere", type=float, default=0.05)
    p.add_argument("--out", default="out/synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="structural condition checks")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=["strict", "empirical"],
                   default="empirical")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out/validate")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("certify", help="route a curve and emit a certificate")
    p.add_argument("--instance", required=True)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--out", default="out/certify")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", help="certify across seeds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--depth", type=int, default=45)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--out", default="out/sweep")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PreconditionError, FileNotFoundError, ValueError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
