"""Command line: ``dnlab lift``, ``dnlab weil`` and ``dnlab stark``.

Every command writes one verification report (JSON by default, CSV with
``--format csv``) and exits 0 on pass, 1 on a failed identity, 2 on a bad
configuration and 3 on a partial result.  A JSON file given with
``--config`` may supply any flag; explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class ConfigError(Exception):
    pass


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a valid {kind.__name__}") from None
        if v <= 0:
            raise argparse.ArgumentTypeError(f"{text!r} must be positive")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying any flag")
    common.add_argument("--out", help="report path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="dnlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    lift = sub.add_parser("lift", parents=[common], help="lift table and base-change checks")
    lift.add_argument("--D", type=int, default=5, help="real quadratic discriminant")
    lift.add_argument("--source", default="dihedral:-23",
                      help="dihedral:DISC or file:PATH (q-expansion file)")
    lift.add_argument("--level", type=int, help="level of a file source")
    lift.add_argument("--nebentypus", type=int, help="discriminant of a quadratic nebentypus (file source)")
    lift.add_argument("--bound", type=_positive(int), default=500, help="ideal norm bound")
    lift.add_argument("--tol", type=_positive(float), default=1e-12, help="unused: all checks are exact")
    lift.add_argument("--coeff", action="append", default=[], metavar="LABEL",
                      help="report C(ideal), e.g. 59:a or 4")
    lift.add_argument("--table", help="lift table path (default: next to --out)")

    weil = sub.add_parser("weil", parents=[common], help="finite Weil representation identities")
    weil.add_argument("case", choices=("pft", "hecke-split", "hecke-inert", "consistency"))
    weil.add_argument("--p", type=int, default=None)
    weil.add_argument("--D", type=int, default=None)
    weil.add_argument("--char", default=None, metavar="ORDER[:EXP]",
                      help="level character mod p of the given order")
    weil.add_argument("--samples", type=_positive(int), default=128)
    weil.add_argument("--tol", type=_positive(float), default=1e-9)
    weil.add_argument("--bound", type=_positive(int), default=None, help="unused")

    stark = sub.add_parser("stark", parents=[common], help="L-value, Petersson and regulator chain")
    stark.add_argument("--tol", type=_positive(float), default=1e-3, help="rational recognition tolerance")
    stark.add_argument("--quad-tol", type=_positive(float), default=1e-8, help="quadrature error tolerance")
    stark.add_argument("--bound", type=_positive(int), default=100, help="largest recognized denominator")
    stark.add_argument("--unit-bound", type=_positive(int), default=4, help="coefficient bound of the unit search")
    stark.add_argument("--skip-delta-search", action="store_true")
    stark.add_argument("--delta-cache", help="JSON file holding delta (read if present, written after a search)")
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = ap.parse_args(argv)
    if not args.config:
        return args
    try:
        conf = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(conf, dict):
        raise ConfigError("config file must hold a JSON object")
    conf = {k.replace("-", "_"): v for k, v in conf.items()}
    unknown = sorted(set(conf) - set(vars(args)))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    sp = ap._subparsers._group_actions[0].choices[args.command]
    sp.set_defaults(**conf)
    args = ap.parse_args(argv)
    for k in ("tol", "quad_tol", "bound", "samples", "unit_bound"):
        v = getattr(args, k, None)
        if v is not None and (not isinstance(v, (int, float)) or v <= 0):
            raise ConfigError(f"{k} must be a positive number")
    return args


def _threads():
    raw = os.environ.get("DNLAB_THREADS")
    if raw is None:
        return None
    if not raw.isdigit() or int(raw) < 1:
        raise ConfigError(f"DNLAB_THREADS={raw!r} must be a positive integer")
    for var in THREAD_VARS:
        os.environ.setdefault(var, raw)
    return int(raw)


def _emit(rep, args) -> None:
    text = rep.to_csv() if args.format == "csv" else rep.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------- lift

def _load_form(args):
    from .arith import DirichletCharacter
    from .forms import dihedral_coeffs, import_qexp
    kind, _, val = args.source.partition(":")
    if kind == "dihedral":
        try:
            disc = int(val)
        except ValueError:
            raise ConfigError(f"bad dihedral discriminant {val!r}") from None
        return dihedral_coeffs(disc, args.bound)
    if kind == "file":
        if args.level is None:
            raise ConfigError("a file source needs --level")
        chi = DirichletCharacter.quadratic(args.nebentypus) if args.nebentypus else None
        try:
            table = import_qexp(val, chi, args.level)
        except OSError as exc:
            raise ConfigError(f"cannot read {val}: {exc}") from None
        if table.warnings:
            raise ConfigError(f"invalid q-expansion: {table.warnings[0]}")
        return table
    raise ConfigError(f"source must be dihedral:DISC or file:PATH, got {args.source!r}")


def _label_norm(D: int, label: str) -> int:
    """Norm of an ideal written as a factorization label such as 3*11:a or 2^2."""
    from .arith import kronecker
    if label == "1":
        return 1
    n = 1
    try:
        for part in label.split("*"):
            base, _, k = part.partition("^")
            p = int(base.partition(":")[0])
            k = int(k or 1)
            n *= p ** (2 * k if kronecker(D, p) == -1 else k)
    except ValueError:
        raise ConfigError(f"bad ideal label {label!r}") from None
    return n


def _find_coeff(T, label: str):
    n = _label_norm(T.D, label)
    if n > T.norm_bound:
        raise ConfigError(f"C({label}) needs bound >= {n}, table bound is {T.norm_bound}")
    for idx in T.of_norm(n):
        if T.label(idx) == label:
            return T.values[idx.mu]
    raise ConfigError(f"no integral ideal labelled {label!r}")


def cmd_lift(args) -> int:
    from .dnlift import LiftConfig, lift_table, verify_base_change
    from .forms import format_value
    f0 = _load_form(args)
    cfg = LiftConfig(args.D, f0)
    T = lift_table(cfg, args.bound)
    requested = {lab: format_value(_find_coeff(T, lab)) for lab in args.coeff}
    rep = verify_base_change(cfg, args.bound, T)
    if requested:
        rep.constants["requested"] = requested
    table_path = args.table or (str(Path(args.out).with_suffix(".lift.txt")) if args.out else None)
    if table_path:
        T.export(table_path)
    _emit(rep, args)
    return rep.exit_code()


# --------------------------------------------------------------------------- weil

def _character(p: int, spec: str):
    from .arith import DirichletCharacter
    order, _, exp = spec.partition(":")
    try:
        order, exp = int(order), int(exp or 1)
    except ValueError:
        raise ConfigError(f"bad character spec {spec!r}") from None
    return DirichletCharacter.from_prime(p, order, exp)


def _weil_model(args):
    from .weilfin import FiniteModel
    p = args.p if args.p is not None else 3
    if args.char:
        D = args.D if args.D is not None else next(d for d in (13, 17, 29) if d % p)
        return FiniteModel.level(p, D, _character(p, args.char))
    D = args.D if args.D is not None else next(d for d in (5, 13, 17) if d % p)
    if D % p == 0:
        if D != p:
            raise ConfigError("the ramified model needs D = p")
        return FiniteModel.ramified(p)
    return FiniteModel.generic(p, D)


def cmd_weil(args) -> int:
    from . import weilfin as W
    from .report import VerificationReport
    if args.case in ("hecke-split", "hecke-inert"):
        rep = W.hecke_average(args.case.split("-")[1], args.p if args.p is not None else 3, args.D,
                              samples=args.samples, seed=args.seed, tol=args.tol)
    elif args.case == "pft":
        rep = W.verify_partial_ft(_weil_model(args), seed=args.seed, tol=args.tol)
    else:
        model = _weil_model(args)
        rep = VerificationReport(f"Weil representation consistency {model.kind} p={model.p}")
        rep.extend(W.verify_metaplectic(model, seed=args.seed), "metaplectic: ")
        rep.extend(W.verify_invariance(model), "invariance: ")
        if model.kind == "ramified":
            rep.extend(W.compare_ramified_forms(model), "phi_p forms: ")
        else:
            rep.extend(W.verify_weil_n_phase(model, 1, samples=args.samples, seed=args.seed), "n(1): ")
    _emit(rep, args)
    return rep.exit_code()


# --------------------------------------------------------------------------- stark

def _read_delta(path):
    if path and Path(path).exists():
        try:
            return json.loads(Path(path).read_text(encoding="utf-8"))["delta"]
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read delta cache {path}: {exc}") from None
    return None


def cmd_stark(args) -> int:
    from .analytic import example_fields, hilbert_field_regulator, petersson_eta23, verify_motivic_chain
    from .fields import baker_heuristic
    from .report import Check, VerificationReport
    rep = VerificationReport("Stark chain, M = Q(sqrt -23), F = Q(sqrt 5)")
    pet = petersson_eta23(tol=args.quad_tol)
    reg_L, log_eps = hilbert_field_regulator()
    rep.flag("petersson quadrature converged", pet.converged,
             {"error_estimate": pet.error_estimate, "tol": args.quad_tol}, ["quadrature doubling"])
    rep.close("petersson_vs_3logeps", pet.value, 3 * log_eps, 5e-3, ["fundamental domain quadrature"])
    rep.close("Reg_L = 3 log^2 eps", reg_L, 3 * log_eps ** 2, 1e-8, ["Hilbert class field units"])
    cached = _read_delta(args.delta_cache)
    ex = example_fields(args.unit_bound, delta_coords=cached, search=not args.skip_delta_search)
    rep.extend(verify_motivic_chain(max_den=args.bound, tol=args.tol, petersson=pet, fields=ex))
    if ex.delta is not None:
        # heuristic, reported but not fatal
        h = baker_heuristic(log_eps, ex.log_ratio, 10 ** 4, 1e-8, "log eps / log|s1 delta/s3 delta|")
        for c in h.checks:
            rep.checks.append(Check(c.identity, c.lhs, c.rhs, c.passed, provenance=c.provenance,
                                    severity="warning"))
        if args.delta_cache and cached is None:
            Path(args.delta_cache).write_text(
                json.dumps({"delta": [str(c) for c in ex.delta.coords]}, indent=2) + "\n", encoding="utf-8")
    _emit(rep, args)
    return rep.exit_code()


COMMANDS = {"lift": cmd_lift, "weil": cmd_weil, "stark": cmd_stark}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    try:
        _threads()
        args = _apply_config(ap, argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    except ConfigError as exc:
        print(f"dnlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    from .arith import DomainError
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"dnlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
