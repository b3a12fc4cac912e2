"""Command-line driver: build vectors, run checks, print appendix-style output.

Subcommands:

  psi build        construct a vector (fundamental, or fused via --m) to JSON
  psi verify       run a named check (exchange|wheel|cyclicity|qkz|recurrence)
  slice emit       print orbit-closure equations for (m, ell), opt. deformed
  slice verify-appendix   run the slice-related fixture checks
  rmat show        print a fundamental or fused R-matrix
  rmat verify      check ybe|unitarity|commutation symbolically
  appendix-suite   run all eight fixture checks

The environment variable QKZ_THREADS caps the number of worker threads used
to run independent checks (the computations are pure, so any value is safe;
the default is 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .algebra import spectral_context
from .combinatorics import sequence_rotation
from .qkz import (
    PsiVector,
    build_psi_fundamental,
    check_cyclicity,
    check_exchange,
    check_recurrence,
    check_wheel,
    fuse_psi,
    qkz_step,
    wheel_positions,
)
from .reporting import dump_reports
from .rmatrix import (
    fundamental_rcheck,
    fused_rcheck,
    product_basis,
    slot_applicator,
    verify_commutation,
    verify_unitarity,
    verify_ybe,
)
from . import appendix as appendixmod
from . import slice as slicemod


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x != "")


def _write(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def threads():
    try:
        return max(1, int(os.environ.get("QKZ_THREADS", "1")))
    except ValueError:
        return 1


def run_reports(jobs):
    """Run independent report-producing callables, honoring QKZ_THREADS."""
    n = threads()
    if n <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def _build_psi(args):
    lam = _ints(args.lam)
    k = args.k
    psi = build_psi_fundamental(k, lam)
    if args.m:
        m = _ints(args.m)
        if m != psi.m:
            psi = fuse_psi(psi, m)
    return psi


def cmd_psi_build(args):
    psi = _build_psi(args)
    doc = psi.to_json()
    if args.format == "text":
        lines = []
        for lab in psi.basis:
            pretty = ",".join("{" + ",".join(map(str, S)) + "}" for S in lab)
            lines.append(f"({pretty}) : {psi.entries[lab].text()}")
        text = "\n".join(lines) + "\n"
        if args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
    else:
        _write(doc, args.out)
    return 0


def _load_psi(path):
    with open(path) as fh:
        return PsiVector.from_json(json.load(fh))


def cmd_psi_verify(args):
    psi = _load_psi(args.infile)
    reports = []
    if args.check == "exchange":
        slots = [args.slot] if args.slot else range(1, psi.N)
        reports = [check_exchange(psi, i) for i in slots]
    elif args.check == "wheel":
        placements = (
            [_ints(args.positions)] if args.positions else wheel_positions(psi.m, psi.k)
        )
        reports = [check_wheel(psi, pos) for pos in placements]
    elif args.check == "cyclicity":
        rho = sequence_rotation(psi.basis, psi.m, sum(psi.lam), psi.k)
        reports = [check_cyclicity(psi, rho)]
    elif args.check == "qkz":
        rho = sequence_rotation(psi.basis, psi.m, sum(psi.lam), psi.k)
        slots = [args.slot] if args.slot else range(1, psi.N + 1)
        reports = [qkz_step(psi, i, rho) for i in slots]
    elif args.check == "recurrence":
        p = args.insert_at
        k = psi.k
        n = (1,) * k
        small_lam = tuple(x - 1 for x in psi.lam if x - 1 > 0)
        small = build_psi_fundamental(k, small_lam)
        reports = [check_recurrence(psi, small, p, n)]
    else:
        raise SystemExit(f"unknown check {args.check!r}")
    _write({"schema": 1, "reports": [r.to_json() for r in reports]}, args.out)
    for r in reports:
        print(r.line(), file=sys.stderr)
    return 0 if all(r.passed or r.status == "skipped" for r in reports) else 1


def cmd_slice_emit(args):
    m = _ints(args.m)
    ell = _ints(args.ell)
    if args.deform:
        eqs = slicemod.emit_deformed_equations(m, ell)
    else:
        eqs = slicemod.emit_equations(m, ell)
    if args.format == "json":
        _write(eqs.to_json(), args.out)
    else:
        lines = [f"# slice m={m} ell={ell}" + (" (deformed)" if args.deform else "")]
        for name, p in eqs.nonzero():
            lines.append(f"{name} : {p.text()} = 0")
        text = "\n".join(lines) + "\n"
        if args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
    return 0


def cmd_slice_verify_appendix(args):
    doc = appendixmod.load_fixture()
    jobs = [
        lambda: appendixmod.check_equations(doc),
        lambda: appendixmod.check_components(doc),
        lambda: appendixmod.check_multidegrees(doc),
        lambda: appendixmod.check_deformed(doc),
    ]
    reports = run_reports(jobs)
    for r in reports:
        print(r.line())
    if args.json_out:
        with open(args.json_out, "w") as fh:
            dump_reports(reports, fh)
    return 0 if all(r.passed for r in reports) else 1


def cmd_rmat_show(args):
    rop = fused_rcheck(args.k, args.a, args.b)
    if args.format == "json":
        _write(rop.to_json(), args.out)
    else:
        labels = [
            "(" + "".join(map(str, S)) + "|" + "".join(map(str, T)) + ")"
            for (S, T) in rop.source
        ]
        text = "basis " + " ".join(labels) + "\n" + rop.text_matrix() + "\n"
        if args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
    return 0


def cmd_rmat_verify(args):
    k, a, b = args.k, args.a, args.b
    rop = fused_rcheck(k, a, b)
    from itertools import combinations

    single = [tuple(c) for c in combinations(range(1, k + 1), a)]
    ctx3 = spectral_context(3)
    reports = []
    if args.check == "ybe":
        basis = product_basis(single, 3)
        app1 = slot_applicator(rop, 0, 3)
        app2 = slot_applicator(rop, 1, 3)
        reports.append(verify_ybe(app1, app2, basis, ctx3, f"fused k={k} a={a} b={b}"))
    elif args.check == "unitarity":
        basis = product_basis(single, 2)
        app1 = slot_applicator(rop, 0, 2)
        reports.append(verify_unitarity(app1, basis, ctx3, f"fused k={k} a={a} b={b}"))
    elif args.check == "commutation":
        basis = product_basis(single, 4)
        app1 = slot_applicator(rop, 0, 4)
        app3 = slot_applicator(rop, 2, 4)
        reports.append(
            verify_commutation(app1, app3, basis, ctx3, f"fused k={k} a={a} b={b}")
        )
    else:
        raise SystemExit(f"unknown check {args.check!r}")
    for r in reports:
        print(r.line())
    if args.out:
        with open(args.out, "w") as fh:
            dump_reports(reports, fh)
    return 0 if all(r.passed for r in reports) else 1


def cmd_appendix_suite(args):
    doc = appendixmod.load_fixture()
    jobs = [(name, fn) for name, fn in appendixmod.SUITE]
    reports = run_reports([lambda fn=fn: fn(doc) for _, fn in jobs])
    for r in reports:
        print(r.line())
    if args.json_out:
        with open(args.json_out, "w") as fh:
            dump_reports(reports, fh)
    return 0 if all(r.passed for r in reports) else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qkzpsi",
        description="exact multidegree vectors, R-matrices, and their identities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_psi = sub.add_parser("psi", help="multidegree vectors")
    psi_sub = p_psi.add_subparsers(dest="subcommand", required=True)
    pb = psi_sub.add_parser("build", help="build a vector and write JSON")
    pb.add_argument("--k", type=int, required=True)
    pb.add_argument("--lambda", dest="lam", required=True, help="row lengths, e.g. 2,2,2,2")
    pb.add_argument("--m", default=None, help="fused sequence, e.g. 2,2,2,2")
    pb.add_argument("--out", default=None)
    pb.add_argument("--format", choices=("json", "text"), default="json")
    pb.set_defaults(fn=cmd_psi_build)
    pv = psi_sub.add_parser("verify", help="verify an identity of a stored vector")
    pv.add_argument("--check", required=True,
                    choices=("exchange", "wheel", "cyclicity", "qkz", "recurrence"))
    pv.add_argument("--in", dest="infile", required=True)
    pv.add_argument("--out", default=None)
    pv.add_argument("--slot", type=int, default=None)
    pv.add_argument("--positions", default=None, help="wheel positions, e.g. 1,2,3")
    pv.add_argument("--insert-at", dest="insert_at", type=int, default=1)
    pv.set_defaults(fn=cmd_psi_verify)

    p_slice = sub.add_parser("slice", help="slice models and equations")
    slice_sub = p_slice.add_subparsers(dest="subcommand", required=True)
    se = slice_sub.add_parser("emit", help="emit orbit-closure equations")
    se.add_argument("--m", required=True)
    se.add_argument("--ell", required=True)
    se.add_argument("--deform", action="store_true")
    se.add_argument("--format", choices=("text", "json"), default="text")
    se.add_argument("--out", default=None)
    se.set_defaults(fn=cmd_slice_emit)
    sv = slice_sub.add_parser("verify-appendix", help="check the worked example's slice data")
    sv.add_argument("--json-out", dest="json_out", default=None)
    sv.set_defaults(fn=cmd_slice_verify_appendix)

    p_rmat = sub.add_parser("rmat", help="R-matrices")
    rmat_sub = p_rmat.add_subparsers(dest="subcommand", required=True)
    rs = rmat_sub.add_parser("show", help="print a (fused) R-matrix")
    rs.add_argument("--k", type=int, required=True)
    rs.add_argument("--a", type=int, default=1)
    rs.add_argument("--b", type=int, default=1)
    rs.add_argument("--format", choices=("text", "json"), default="text")
    rs.add_argument("--out", default=None)
    rs.set_defaults(fn=cmd_rmat_show)
    rv = rmat_sub.add_parser("verify", help="verify R-matrix relations")
    rv.add_argument("--check", required=True, choices=("ybe", "unitarity", "commutation"))
    rv.add_argument("--k", type=int, required=True)
    rv.add_argument("--a", type=int, default=1)
    rv.add_argument("--b", type=int, default=1)
    rv.add_argument("--out", default=None)
    rv.set_defaults(fn=cmd_rmat_verify)

    p_app = sub.add_parser("appendix-suite", help="run all worked-example checks")
    p_app.add_argument("--json-out", dest="json_out", default=None)
    p_app.set_defaults(fn=cmd_appendix_suite)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
