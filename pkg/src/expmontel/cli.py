"""Command-line front end: JSON in, one JSON document out.

Exit status 0 means success or property true, 1 property false, 2 an input
or usage error (reported as ``{"error": code, "detail": ...}``).
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import schemas
from .diffops import (
    DiffProduct,
    InsufficientBox,
    MissingPhiValue,
    OpFactor,
    PhiTable,
    SampledFunction,
    apply_product,
    apply_product_sampled,
)
from .exppoly import DimensionMismatch, ExpPoly, Witness, evaluate
from .montel import (
    NoCandidate,
    Tolerance,
    certify_witness,
    minimal_orders,
    verify_annihilation,
)
from .oracle import FiniteGroupSpec, SizeBoundExceeded, frechet_nullspaces
from .recover import (
    IllConditionedProjection,
    NoAnnihilator,
    RecoveryConfig,
    recover,
)
from .scalar import EXACT, FLOAT, EvaluationOverflow, scalar_from_json, scalar_to_json
from .subspace import GradedLexBasis, SpanSpace, closure_chain, operator_matrix

USAGE, INPUT = 2, 2


class CliError(Exception):
    def __init__(self, code: str, detail, status: int = USAGE):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


# ---------------------------------------------------------------------------
# input helpers


def _load(arg: str | None, what: str, schema=None):
    if arg is None:
        raise CliError("usage", f"missing --{what}")
    text = arg
    if not arg.lstrip().startswith(("{", "[")) and os.path.exists(arg):
        try:
            with open(arg, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise CliError("unreadable-input", f"{what}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("malformed-json", f"{what}: {exc}") from None
    if schema is not None:
        try:
            schemas.validate(data, schema, what)
        except ValueError as exc:
            raise CliError("schema", str(exc)) from None
    return data


def _backend(args):
    return getattr(args, "backend", None)


def _target(args):
    """The ExpPoly from --f or the samples from --samples."""
    if args.f is not None and args.samples is not None:
        raise CliError("usage", "give only one of --f and --samples")
    if args.f is not None:
        return ExpPoly.from_json(_load(args.f, "f", schemas.EXPPOLY), _backend(args))
    if args.samples is not None:
        return SampledFunction.from_json(_load(args.samples, "samples", schemas.SAMPLES), _backend(args))
    raise CliError("usage", "need --f or --samples")


def _shifts(args):
    data = _load(args.shifts, "shifts", schemas.POINTS)
    return [tuple(h) for h in data]


def _phi_values(args, shifts):
    """Per-shift values from --phi, or the witness from --lambda."""
    if args.lam is not None:
        return Witness.from_json(_load(args.lam, "lambda"), _backend(args))
    data = _load(args.phi, "phi")
    if not isinstance(data, list) or (len(data) == 2 and not isinstance(data[0], list) and len(shifts) == 1):
        data = [data]
    schemas.validate(data, schemas.PHI_VALUES, "phi")
    if len(data) != len(shifts):
        raise CliError("usage", "need one --phi value per shift")
    return [scalar_from_json(v, _backend(args)) for v in data]


def _powers(args, n):
    data = _load(args.powers, "powers", schemas.POWERS)
    if len(data) != n:
        raise CliError("usage", "need one --powers entry per shift")
    return data


def _product(args, dim):
    if args.product is not None:
        return DiffProduct.from_json(_load(args.product, "product", schemas.PRODUCT), _backend(args))
    shifts = _shifts(args)
    powers = _powers(args, len(shifts))
    vals = _phi_values(args, shifts)
    if isinstance(vals, Witness):
        return DiffProduct(tuple(OpFactor(vals, h, p) for h, p in zip(shifts, powers)))
    return DiffProduct(tuple(OpFactor(PhiTable({h: v}), h, p) for h, v, p in zip(shifts, vals, powers)))


def _recovery_config(args, default_order: int = 8) -> RecoveryConfig:
    return RecoveryConfig(
        max_order=args.max_order if args.max_order is not None else default_order,
        rank_tol=args.rank_tol,
        cluster_tol=args.cluster_tol,
        residual_tol=args.residual_tol,
    )


def _tolerance(args) -> Tolerance:
    return Tolerance(atol=args.atol, rtol=args.rtol)


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args):
    f = ExpPoly.from_json(_load(args.f, "f", schemas.EXPPOLY), _backend(args))
    pts = _load(args.points, "points", schemas.POINTS)
    return {"points": pts, "values": [scalar_to_json(evaluate(f, p)) for p in pts]}, 0


def cmd_apply(args):
    target = _target(args)
    P = _product(args, target.dim)
    out = apply_product_sampled(target, P) if isinstance(target, SampledFunction) else apply_product(target, P)
    return {"result": out.to_json()}, 0


def cmd_verify(args):
    target = _target(args)
    shifts = _shifts(args)
    cert = verify_annihilation(target, shifts, _powers(args, len(shifts)), _phi_values(args, shifts), _tolerance(args))
    return cert.to_json(), 0 if cert.annihilated else 1


def cmd_orders(args):
    target = _target(args)
    shifts = _shifts(args)
    orders = minimal_orders(target, shifts, _phi_values(args, shifts), args.max_power, _tolerance(args))
    return {"orders": orders, "shifts": [list(h) for h in shifts]}, 0 if all(o is not None for o in orders) else 1


def cmd_witness(args):
    s = SampledFunction.from_json(_load(args.samples, "samples", schemas.SAMPLES), _backend(args))
    shifts = _shifts(args)
    cfg = _recovery_config(args, default_order=args.max_power)
    try:
        res = certify_witness(s, shifts, args.max_power, cfg, _tolerance(args))
    except NoCandidate as exc:
        return {"candidates": [], "error": "no-candidate", "detail": str(exc)}, 1
    payload = res.to_json()
    return payload, 0 if res.all or res.assignments else 1


def cmd_decompose(args):
    s = SampledFunction.from_json(_load(args.samples, "samples", schemas.SAMPLES), _backend(args))
    dec = recover(s, _recovery_config(args))
    return dec.to_json(), 0 if dec.success else 1


def cmd_closure(args):
    data = _load(args.space, "space", schemas.SPACE)
    V = SpanSpace.from_json(data)
    P = DiffProduct.from_json(_load(args.product, "product", schemas.PRODUCT), EXACT)
    ops = [OpFactor(f.phi, f.shift, 1) for f in P.factors]
    powers = _load(args.powers, "powers", schemas.POWERS) if args.powers else [f.power for f in P.factors]
    if len(powers) != len(ops):
        raise CliError("usage", "need one power per operator")
    res = closure_chain(V, ops, powers)
    return res.to_json(), 0 if all(res.invariant) else 1


def cmd_matrix(args):
    w = Witness.from_json(_load(args.lam, "lambda"), EXACT)
    h = _shifts(args)
    if len(h) != 1:
        raise CliError("usage", "matrix takes exactly one shift")
    phi = _load(args.phi, "phi")
    if isinstance(phi, list) and len(phi) == 1:
        phi = phi[0]
    schemas.validate(phi, schemas.SCALAR, "phi")
    Ej = GradedLexBasis(w, args.degree)
    M = operator_matrix(Ej, scalar_from_json(phi, EXACT), h[0])
    return {
        "basis": Ej.to_json(),
        "matrix": M.to_json(),
        "upper_triangular": M.strict_lower_is_zero(),
        "diagonal": [scalar_to_json(v) for v in M.diagonal()],
    }, 0


def cmd_frechet(args):
    G = FiniteGroupSpec.parse(args.group)
    res = frechet_nullspaces(G, args.n, seed=args.seed)
    return res.to_json(), 0 if res.equal else 1


def cmd_selftest(args):
    from .acceptance import run_all

    only = [int(t) for t in args.only.split(",")] if args.only else None
    results = run_all(only, seed=args.seed)
    ok = all(r.passed for r in results)
    return {"passed": ok, "criteria": [r.to_json() for r in results]}, 0 if ok else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--f", help="ExpPoly JSON (file path or inline)")
    common.add_argument("--samples", help="SampledFunction JSON (file path or inline)")
    common.add_argument("--shifts", help='shift list, e.g. "[[1,0],[0,1]]"')
    common.add_argument("--powers", help='operator powers, e.g. "[2,2]"')
    common.add_argument("--phi", help='phi values per shift, e.g. "[[2,0]]"')
    common.add_argument("--lambda", dest="lam", help="witness JSON used as phi")
    common.add_argument("--product", help="DiffProduct JSON")
    common.add_argument("--points", help='lattice points, e.g. "[[0],[3]]"')
    common.add_argument("--space", help="SpanSpace JSON")
    common.add_argument("--group", help="moduli m1,m2,...")
    common.add_argument("--n", type=int, default=1, help="Frechet order n")
    common.add_argument("--degree", type=int, default=1, help="degree bound k_j for matrix")
    common.add_argument("--max-power", type=int, default=4)
    common.add_argument("--max-order", type=int, default=None)
    common.add_argument("--rank-tol", type=float, default=1e-9)
    common.add_argument("--cluster-tol", type=float, default=1e-6)
    common.add_argument("--residual-tol", type=float, default=1e-8)
    common.add_argument("--atol", type=float, default=1e-10)
    common.add_argument("--rtol", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--only", help="selftest: comma-separated criterion numbers")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="backend", action="store_const", const=EXACT)
    mode.add_argument("--float", dest="backend", action="store_const", const=FLOAT)

    parser = _Parser(prog="expmontel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, fn, text in [
        ("eval", cmd_eval, "evaluate an ExpPoly at points"),
        ("apply", cmd_apply, "apply a product of modified differences"),
        ("verify", cmd_verify, "check an annihilation certificate"),
        ("orders", cmd_orders, "least annihilating power per shift"),
        ("witness", cmd_witness, "candidate phi values from samples"),
        ("decompose", cmd_decompose, "recover an ExpPoly from samples"),
        ("closure", cmd_closure, "closure chain of a space under operators"),
        ("matrix", cmd_matrix, "operator matrix on a graded-lex block"),
        ("frechet", cmd_frechet, "compare Frechet solution spaces on a finite group"),
        ("selftest", cmd_selftest, "run the acceptance criteria"),
    ]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=fn)
    return parser


def run(argv=None) -> tuple[dict, int]:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "func", None) is None:
            raise CliError("usage", "a subcommand is required")
        return args.func(args)
    except CliError as exc:
        return {"error": exc.code, "detail": exc.detail}, exc.status
    except InsufficientBox as exc:
        return {"error": "insufficient-box", "detail": str(exc)}, INPUT
    except DimensionMismatch as exc:
        return {"error": "dimension-mismatch", "detail": str(exc)}, INPUT
    except MissingPhiValue as exc:
        return {"error": "missing-phi", "detail": str(exc)}, INPUT
    except SizeBoundExceeded as exc:
        return {"error": "size-bound-exceeded", "detail": str(exc)}, INPUT
    except NoAnnihilator as exc:
        return {"error": "no-annihilator", "detail": str(exc)}, 1
    except IllConditionedProjection as exc:
        return {"error": "ill-conditioned-projection", "detail": str(exc)}, 1
    except EvaluationOverflow as exc:
        return {"error": "overflow", "detail": str(exc)}, INPUT
    except (ValueError, KeyError, TypeError) as exc:
        return {"error": "invalid-input", "detail": str(exc)}, INPUT


def main(argv=None) -> int:
    payload, status = run(argv)
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    sys.stdout.flush()
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
