"""Command-line interface: construct, reduce, assemble, and re-verify.

Subcommands: hadamard, epsh, rbd, armub, verify, ledger.

Exit codes (stable contract; CI treats any nonzero as red):
  0  success, all checks pass
  2  domain/validation error (inputs outside the mathematical domain)
  3  requested Hadamard order not reachable from the generator set
  4  artifact parse error
  5  a certification or bound check failed
  6  resource/enumeration cap exceeded

All sampling randomness sits behind --seed (default 0); artifacts are
written atomically (temp file + rename) in canonical JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import jsonio
from .bases import assemble
from .epsh import EpsHadamard, best_reduction
from .errors import (
    CertificationError,
    DomainError,
    NotConstructibleError,
    ParseError,
    ResourceLimitError,
)
from .hadamard import find_hadamard
from .rbd import build_affine_rbd, verify_rbd
from .verify import check_theorem_bounds, cross_stats, ledger_ok

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NOT_CONSTRUCTIBLE = 3
EXIT_PARSE = 4
EXIT_CHECK_FAILED = 5
EXIT_RESOURCE = 6


def _emit(obj, out: str | None):
    text = jsonio.dumps_canonical(obj)
    if out:
        jsonio.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _say(message: str, out: str | None):
    # keep stdout parseable when the artifact itself goes to stdout
    stream = sys.stdout if out else sys.stderr
    stream.write(message + "\n")


def cmd_hadamard(args) -> int:
    h = find_hadamard(args.order)
    _emit(jsonio.sign_matrix_obj(h), args.out)
    _say(f"order={h.order} source={h.label} verified=true", args.out)
    return EXIT_OK


def cmd_epsh(args) -> int:
    h = find_hadamard(args.order)
    y = best_reduction(h, args.t, search_scope=args.scope, cap=args.cap)
    _emit(jsonio.eps_hadamard_obj(y), args.out)
    uc = y.provenance.uclass
    _say(
        f"k={y.order} eps={float(y.epsilon):.6f} (exact {y.epsilon.expr()}) "
        f"eps_upper={float(y.epsilon_upper):.6f} variant={y.variant} "
        f"u-class=({uc.kappa},{uc.gamma},{uc.vartheta}) method={y.provenance.method}",
        args.out,
    )
    return EXIT_OK


def cmd_rbd(args) -> int:
    r = build_affine_rbd(args.k, args.s)
    _emit(jsonio.rbd_obj(r), args.out)
    _say(f"d={r.d} k={r.k} s={r.s} mu={r.mu} classes={r.s}", args.out)
    return EXIT_OK


def _parse_mode(text: str) -> tuple[str, int]:
    if text == "exhaustive":
        return "exhaustive", 0
    if text.startswith("sampled:"):
        try:
            return "sampled", int(text.split(":", 1)[1])
        except ValueError as exc:
            raise DomainError(f"bad mode {text!r}") from exc
    raise DomainError(f"mode must be 'exhaustive' or 'sampled:N', got {text!r}")


def _provide_y(k: int, t: int, scope: str, cap: int):
    """Orthogonal matrix of order k: exact H_k/sqrt(k) when such an order
    admits a real Hadamard matrix, else reduction of H_{k+t}."""
    if k in (1, 2) or k % 4 == 0:
        return EpsHadamard.from_sign_hadamard(find_hadamard(k)), None
    h = find_hadamard(k + t)
    return best_reduction(h, t, search_scope=scope, cap=cap), h


def cmd_armub(args) -> int:
    k, s, t = args.k, args.s, args.t
    if t not in (1, 2, 3):
        raise DomainError("t must be 1, 2 or 3")
    if (k + t) % 4 != 0 and not (k in (1, 2) or k % 4 == 0):
        raise DomainError(f"k + t = {k + t} must be divisible by 4")
    mode, pairs = _parse_mode(args.mode)
    y, source = _provide_y(k, t, args.scope, args.cap)
    design = build_affine_rbd(k, s)
    bs = assemble(design, y)
    report = cross_stats(bs, mode=mode, pairs=pairs, seed=args.seed,
                         threads=args.threads)
    # the report reflects the pipeline configuration even when Y came from
    # an exact Hadamard matrix rather than a reduction
    n = (k + t) // 4 if (k + t) % 4 == 0 else None
    report = dataclasses.replace(report, t=t, n=n)
    ledger = check_theorem_bounds(report)

    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    paths = {}
    if source is not None:
        paths["hadamard"] = os.path.join(outdir, "hadamard.json")
        jsonio.write_atomic(
            paths["hadamard"], jsonio.dumps_canonical(jsonio.sign_matrix_obj(source))
        )
    paths["epsh"] = os.path.join(outdir, "epsh.json")
    jsonio.write_atomic(
        paths["epsh"], jsonio.dumps_canonical(jsonio.eps_hadamard_obj(y))
    )
    paths["rbd"] = os.path.join(outdir, "rbd.json")
    jsonio.write_atomic(
        paths["rbd"], jsonio.dumps_canonical(jsonio.rbd_obj(design))
    )
    paths["bases"] = os.path.join(outdir, "bases.json")
    jsonio.write_atomic(
        paths["bases"], jsonio.dumps_canonical(jsonio.basis_set_obj(bs))
    )
    paths["report"] = os.path.join(outdir, "report.json")
    jsonio.write_atomic(
        paths["report"], jsonio.dumps_canonical(jsonio.report_obj(report))
    )
    certificate = {
        "kind": "certificate",
        "config": {
            "k": k, "s": s, "t": t, "d": k * s, "scope": args.scope,
            "mode": args.mode, "seed": args.seed,
        },
        "artifacts": {name: os.path.basename(p) for name, p in paths.items()},
        "report": jsonio.report_obj(report),
        "ledger": jsonio.ledger_obj(ledger),
        "ok": ledger_ok(ledger),
    }
    cert_path = os.path.join(outdir, "certificate.json")
    jsonio.write_atomic(cert_path, jsonio.dumps_canonical(certificate))

    print(
        f"d={report.d} s={report.s} k={report.k} t={t} "
        f"classification={report.classification} evidence={report.evidence} "
        f"beta={float(report.beta):.6f} eps={float(report.epsilon):.6f} "
        f"certificate={cert_path}"
    )
    for line in ledger:
        print(f"  [{line.verdict:4s}] {line.check}: lhs={line.lhs:.6g} rhs={line.rhs:.6g}")
    return EXIT_OK if ledger_ok(ledger) else EXIT_CHECK_FAILED


def cmd_verify(args) -> int:
    worst = EXIT_OK
    for path in args.files:
        obj = jsonio.load_json(path)
        kind = jsonio.detect_kind(obj)
        try:
            if kind == "hadamard":
                jsonio.parse_sign_matrix(obj)
            elif kind == "eps-hadamard":
                jsonio.parse_eps_hadamard(obj)
            elif kind == "rbd":
                jsonio.parse_rbd(obj)
            elif kind == "basis-set":
                jsonio.parse_basis_set(obj)
            elif kind == "report":
                jsonio.parse_report(obj)
            elif kind == "certificate":
                report = jsonio.parse_report(obj["report"])
                lines = check_theorem_bounds(report)
                stored = obj["ledger"]
                recomputed = jsonio.ledger_obj(lines)
                if [l["verdict"] for l in stored] != [l["verdict"] for l in recomputed]:
                    raise CertificationError("ledger verdicts do not reproduce")
                if not ledger_ok(lines):
                    raise CertificationError("certificate contains failing checks")
            else:
                raise ParseError(f"unknown artifact kind {kind!r}")
            print(f"{path}: {kind}: ok")
        except CertificationError as exc:
            print(f"{path}: {kind}: CHECK FAILED: {exc}")
            worst = max(worst, EXIT_CHECK_FAILED)
        except ParseError as exc:
            print(f"{path}: parse error: {exc}")
            worst = max(worst, EXIT_PARSE)
    return worst


def cmd_ledger(args) -> int:
    obj = jsonio.load_json(args.file)
    kind = jsonio.detect_kind(obj)
    if kind == "certificate":
        report = jsonio.parse_report(obj["report"])
    elif kind == "report":
        report = jsonio.parse_report(obj)
    else:
        raise ParseError(f"ledger needs a report or certificate, got {kind!r}")
    lines = check_theorem_bounds(report)
    sys.stdout.write(jsonio.dumps_canonical(jsonio.ledger_obj(lines)))
    return EXIT_OK if ledger_ok(lines) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armub",
        description="Exact epsilon-Hadamard matrices and approximate real MUBs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hadamard", help="construct a verified Hadamard matrix")
    p.add_argument("order", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hadamard)

    p = sub.add_parser("epsh", help="best reduction to an eps-Hadamard matrix")
    p.add_argument("order", type=int)
    p.add_argument("t", type=int)
    p.add_argument("--scope", default="corner-only",
                   choices=["corner-only", "row-col-permutations",
                            "permutations-and-negations"])
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_epsh)

    p = sub.add_parser("rbd", help="build and certify an affine block design")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rbd)

    p = sub.add_parser("armub", help="full pipeline with certificate")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--scope", default="corner-only",
                   choices=["corner-only", "row-col-permutations",
                            "permutations-and-negations"])
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--mode", default="exhaustive",
                   help="'exhaustive' or 'sampled:N' (N basis pairs)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="armub-out")
    p.set_defaults(func=cmd_armub)

    p = sub.add_parser("verify", help="re-run certifications on artifacts")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ledger", help="print the bound ledger of a report")
    p.add_argument("file")
    p.set_defaults(func=cmd_ledger)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NotConstructibleError as exc:
        sys.stderr.write(f"not constructible: {exc}\n")
        return EXIT_NOT_CONSTRUCTIBLE
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return EXIT_DOMAIN
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except CertificationError as exc:
        sys.stderr.write(f"certification failed: {exc}\n")
        return EXIT_CHECK_FAILED
    except ResourceLimitError as exc:
        sys.stderr.write(f"resource limit: {exc}\n")
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
