"""Command line entry point.

    hyperwkg check <cfg>
    hyperwkg simulate <cfg> [--force] [--out DIR]
    hyperwkg verify <cfg> [--suite NAMES]
    hyperwkg fit <csv> --ray r=0 [--field u]

Exit codes: 0 ok, 1 parse or usage error, 2 inadmissible system,
3 runtime failure (hyperbolicity loss, blow-up, support leak),
4 identity check failure.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
import warnings

from . import diagnostics as diag
from .config import ConfigError, load_config

EXIT_OK, EXIT_PARSE, EXIT_INADMISSIBLE, EXIT_RUNTIME, EXIT_IDENTITY = 0, 1, 2, 3, 4


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _load(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        _err(f"{path}: {exc}")
    except OSError as exc:
        _err(str(exc))
    return None


def cmd_check(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_PARSE
    from .structure import theorem1_admissible

    rep = theorem1_admissible(cfg.coefficients)
    if args.json:
        print(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
    else:
        verdict = "admissible" if rep.theorem1_admissible else "not admissible"
        print(f"coupling: {rep.coupling}")
        print(f"coupling_without_K1: {rep.coupling_literal}")
        for name, v in rep.null_status.items():
            if v.null:
                print(f"  {name}: null")
            else:
                print(f"  {name}: not null  witness theta={v.witness_theta:.6g} "
                      f"xi=({v.witness[0]:.6g}, {v.witness[1]:.6g}, {v.witness[2]:.6g})")
        for line in rep.violations:
            print(f"  violation: {line}")
        for line in rep.notes:
            print(f"  note: {line}")
        print(f"{rep.coupling}, {verdict}")
    return EXIT_OK if rep.theorem1_admissible else EXIT_INADMISSIBLE


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_PARSE
    from .pipeline import simulate

    try:
        out = simulate(cfg, force=args.force, out_dir=args.out)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_PARSE
    if out.message:
        print(out.message, file=sys.stderr)
    if out.exit_code in (EXIT_OK, EXIT_IDENTITY):
        rep = out.report
        label = " (exploratory)" if rep["exploratory"] else ""
        print(f"simulate{label}: {rep['run']['steps']} steps, bootstrap "
              f"{'pass' if rep['bootstrap']['passed'] else 'FAIL'}")
        print(f"wrote {out.paths['csv']}, {out.paths['rays']}, {out.paths['json']}")
    return out.exit_code


def cmd_verify(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_PARSE
    from .verify.suite import run_suite

    names = args.suite if args.suite is not None else cfg.mode.suite
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep = run_suite(names, corrupt_sign=args.corrupt_sign)
    except KeyError as exc:
        _err(exc.args[0])
        return EXIT_PARSE
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(json.dumps(rep, indent=2, sort_keys=True))
    if rep["failures"]:
        for name in rep["failures"]:
            print(f"identity check failed: {name}", file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


_RAY = re.compile(r"^r\s*=\s*(?:0|(0?\.\d+|\d+(?:\.\d*)?)\s*\*?\s*t)$")


def parse_ray(text: str) -> float:
    """'r=0' -> 0.0, 'r=0.8t' -> 0.8."""
    m = _RAY.match(text.strip())
    if not m:
        raise ValueError(f"ray must look like r=0 or r=0.8t, got {text!r}")
    return float(m.group(1)) if m.group(1) else 0.0


def cmd_fit(args) -> int:
    try:
        lam = parse_ray(args.ray)
        with open(args.csv, encoding="utf-8") as fh:
            cols = diag.read_csv(fh.read())
    except (ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_PARSE
    name = f"{args.field}@{lam:g}"
    if "t" not in cols or name not in cols:
        _err(f"{args.csv} has no column {name!r} (columns: {', '.join(cols)})")
        return EXIT_PARSE
    model = args.model or ("interior" if lam == 0.0 else "power")
    try:
        res = diag.fit_decay(cols["t"], cols[name], model, lam=lam, t_min=args.t_min)
    except diag.FitError as exc:
        _err(str(exc))
        return EXIT_PARSE
    print(json.dumps({"column": name, **res.to_dict()}, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperwkg", description="Wave/Klein-Gordon systems on hyperboloids.")
    sub = p.add_subparsers(dest="cmd", required=True)
    c = sub.add_parser("check", help="classify the coefficient system")
    c.add_argument("config")
    c.add_argument("--json", action="store_true", help="print the classification as JSON")
    c.set_defaults(func=cmd_check)
    s = sub.add_parser("simulate", help="evolve and write the energy series and report")
    s.add_argument("config")
    s.add_argument("--force", action="store_true", help="run inadmissible systems (exploratory)")
    s.add_argument("--out", default=None, help="directory for relative output paths")
    s.set_defaults(func=cmd_simulate)
    v = sub.add_parser("verify", help="run the identity suite")
    v.add_argument("config")
    v.add_argument("--suite", default=None, help="comma-separated check names (empty selects none)")
    v.add_argument("--corrupt-sign", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)
    f = sub.add_parser("fit", help="fit a decay exponent to a ray series CSV")
    f.add_argument("csv")
    f.add_argument("--ray", default="r=0")
    f.add_argument("--field", default="u", choices=("u", "v", "du", "dv"))
    f.add_argument("--model", default=None, choices=diag.fit.MODELS)
    f.add_argument("--t-min", type=float, default=None)
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
