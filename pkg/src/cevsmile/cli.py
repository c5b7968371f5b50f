"""Command-line front end: ``cevsmile <command> [options]``.

Exit codes: 0 success, 1 some rows failed (their ``error`` column says
why), 2 bad usage or configuration, 3 regime not supported.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path
from typing import Callable

from . import __version__
from .asymptotics import (
    call_large_tau,
    implied_vol_large_tau,
    implied_vol_small_tau,
    small_time_constants,
)
from .cev_dist import BoundaryBehaviour, CevModel
from .errors import CevError, RegimeNotSupported
from .mc_oracle import DEFAULT_STEPS, RNG_ALGORITHM, mc_call_price
from .mgf import lee_wings
from .pricer import call_price, digital_price, hedge_ratio, implied_vol_at
from .quadrature import QuadratureConfig

OUTPUT_DIR_ENV = "CEVSMILE_OUTPUT_DIR"

EXIT_OK, EXIT_ROWS, EXIT_USAGE, EXIT_REGIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing

def _float_list(s: str) -> list[float]:
    try:
        out = [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {s!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _grid(s: str) -> list[float]:
    """``a:b:n`` -> n evenly spaced points from a to b inclusive."""
    parts = s.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:n, got {s!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {s!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("grid needs n >= 1")
    if n == 1:
        return [a]
    return [a + (b - a) * i / (n - 1) for i in range(n)]


def _boundary(s: str) -> BoundaryBehaviour:
    try:
        return BoundaryBehaviour.parse(s)
    except CevError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    g = c.add_argument_group("model")
    g.add_argument("--p", type=float, required=False, help="CEV exponent")
    g.add_argument("--y0", type=float, default=0.07)
    xi = g.add_mutually_exclusive_group()
    xi.add_argument("--xi", type=float, help="vol-of-variance")
    xi.add_argument("--xi-auto", type=float, metavar="C", help="set xi = C * y0^(1/2 - p)")
    g.add_argument("--t", type=float, default=0.5, help="CEV horizon (forward-start date in forward mode)")
    g.add_argument("--boundary", type=_boundary, default=BoundaryBehaviour.ABSORBING,
                   help="absorbing or reflecting origin")
    q = c.add_argument_group("quadrature")
    d = QuadratureConfig()
    q.add_argument("--rel-tol", type=float, default=d.rel_tol)
    q.add_argument("--abs-tol", type=float, default=d.abs_tol)
    q.add_argument("--max-subdivisions", type=int, default=d.max_subdivisions)
    q.add_argument("--tail-mass-tol", type=float, default=d.tail_mass_tol)
    o = c.add_argument_group("output")
    o.add_argument("--output", "-o", help=f"output file (relative paths resolve under ${OUTPUT_DIR_ENV})")
    o.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--config", help="key=value file merged under the command-line flags")
    return c


def _strike_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=_float_list, help="log-moneyness list")
    g.add_argument("--k-grid", type=_grid, help="log-moneyness grid a:b:n")
    g.add_argument("--strikes", type=_float_list, help="raw strikes K (unit forward), converted to k = log K")
    p.add_argument("--tau", type=_float_list, help="maturities")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="cevsmile", description="Smiles under CEV-randomised Black-Scholes variance")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, hlp in (("price", "call prices and implied vols"),
                      ("smile", "implied-vol smile with total variance"),
                      ("digital", "prices, implied vols and digital probabilities")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        _strike_args(sp)

    sp = sub.add_parser("asymptote", parents=[common], help="numeric vs small-maturity implied variance")
    _strike_args(sp)
    sp.add_argument("--forward", action="store_true", help="label t as the forward-start date")

    sp = sub.add_parser("wings", parents=[common], help="critical moments and wing slopes")
    sp.add_argument("--tau", type=_float_list, help="maturities")

    sp = sub.add_parser("large-time", parents=[common], help="numeric vs large-maturity price")
    _strike_args(sp)

    sp = sub.add_parser("mc-check", parents=[common], help="Monte-Carlo vs quadrature prices")
    _strike_args(sp)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sampler", choices=("exact", "euler"), default="exact")
    sp.add_argument("--steps", type=int, default=DEFAULT_STEPS)

    sp = sub.add_parser("hedge", parents=[common], help="hedge ratio with a longer-dated option")
    _strike_args(sp)
    sp.add_argument("--S", type=float, default=1.0, help="spot relative to the initial forward")
    sp.add_argument("--T", type=float, help="maturity of the hedging option")
    return parser


def _read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = val
    return out


_NEG_VALUE = re.compile(r"^-\.?\d")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--k -0.1,0`` into ``--k=-0.1,0`` so argparse does not read a flag."""
    out: list[str] = []
    for tok in argv:
        if out and _NEG_VALUE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def parse_args(argv: list[str]) -> argparse.Namespace:
    argv = _glue_negative_values(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _read_config(args.config)
        sp = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        known = {a.dest: a for a in sp._actions}  # noqa: SLF001
        defaults = {}
        for key, val in cfg.items():
            if key not in known or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            act = known[key]
            if act.const is True and act.nargs == 0:  # store_true
                defaults[key] = val.lower() in ("1", "true", "yes", "on")
            elif act.type is not None:
                try:
                    defaults[key] = act.type(val)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config {key}: {exc}") from None
            else:
                defaults[key] = val
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.tau is None:
        raise UsageError("--tau is required")
    if args.command == "hedge" and args.T is None:
        raise UsageError("--T is required")
    return args


# ---------------------------------------------------------------- model

def _model(args) -> CevModel:
    if args.p is None:
        raise UsageError("--p is required")
    if args.xi_auto is not None:
        return CevModel.with_auto_xi(args.xi_auto, args.y0, args.t, args.p, args.boundary)
    if args.xi is None:
        raise UsageError("give --xi or --xi-auto")
    return CevModel(y0=args.y0, xi=args.xi, t=args.t, p=args.p, boundary=args.boundary)


def _qcfg(args) -> QuadratureConfig:
    return QuadratureConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol,
                            max_subdivisions=args.max_subdivisions, tail_mass_tol=args.tail_mass_tol)


def _ks(args) -> list[float]:
    if args.k is not None:
        return args.k
    if args.k_grid is not None:
        return args.k_grid
    if args.strikes is not None:
        if any(not K > 0 for K in args.strikes):
            raise UsageError("strikes must be positive")
        return [math.log(K) for K in args.strikes]
    raise UsageError("give --k, --k-grid or --strikes")


# ---------------------------------------------------------------- commands

Row = dict


def _rows_over(ks, taus, fn: Callable[[float, float], Row], base_cols) -> tuple[list[Row], bool]:
    rows, failed = [], False
    for tau in taus:
        for k in ks:
            row = {"k": k, "tau": tau}
            try:
                row.update(fn(k, tau))
                row["error"] = ""
            except RegimeNotSupported:
                raise
            except (CevError, ValueError, ArithmeticError) as exc:
                for c in base_cols:
                    row.setdefault(c, math.nan)
                row["error"] = f"{type(exc).__name__}: {exc}"
                failed = True
            rows.append(row)
    return rows, failed


def cmd_price(args, model, cfg):
    def fn(k, tau):
        return {"price": call_price(model, k, tau, cfg), "implied_vol": implied_vol_at(model, k, tau, cfg)}
    return ["k", "tau", "price", "implied_vol", "error"], *_rows_over(_ks(args), args.tau, fn, ["price", "implied_vol"]), {}


def cmd_smile(args, model, cfg):
    def fn(k, tau):
        iv = implied_vol_at(model, k, tau, cfg)
        return {"strike": math.exp(k), "implied_vol": iv, "total_variance": iv * iv * tau}
    cols = ["k", "strike", "tau", "implied_vol", "total_variance", "error"]
    return cols, *_rows_over(_ks(args), args.tau, fn, cols[1:-1]), {}


def cmd_digital(args, model, cfg):
    def fn(k, tau):
        return {"price": call_price(model, k, tau, cfg), "implied_vol": implied_vol_at(model, k, tau, cfg),
                "digital": digital_price(model, k, tau, cfg)}
    cols = ["k", "tau", "price", "implied_vol", "digital", "error"]
    return cols, *_rows_over(_ks(args), args.tau, fn, cols[2:-1]), {}


def cmd_asymptote(args, model, cfg):
    extra_cols = []
    if model.p > 1 and not model.is_lognormal:
        extra_cols = ["jp"]

    def fn(k, tau):
        if k == 0:
            raise CevError("k = 0 has no small-maturity tail expansion; use a nonzero k")
        iv = implied_vol_at(model, k, tau, cfg)
        var_asym = implied_vol_small_tau(model, k, tau)  # returns sigma^2
        row = {"sigma2_numeric": iv * iv, "sigma2_asymptote": var_asym, "ratio": iv * iv / var_asym}
        if extra_cols:
            row["jp"] = small_time_constants(model, k, cfg).jp
        return row
    cols = ["k", "tau", "sigma2_numeric", "sigma2_asymptote", "ratio", *extra_cols, "error"]
    meta = {"t_role": "forward-start date" if args.forward else "variance horizon"}
    return cols, *_rows_over(_ks(args), args.tau, fn, cols[2:-1]), meta


def cmd_wings(args, model, cfg):
    rows = []
    for tau in args.tau:
        w = lee_wings(model, tau)
        rows.append({"tau": tau, "u_plus": w.u_plus, "u_minus": w.u_minus,
                     "beta_plus": w.beta_plus, "beta_minus": w.beta_minus, "error": ""})
    return ["tau", "u_plus", "u_minus", "beta_plus", "beta_minus", "error"], rows, False, {}


def cmd_large_time(args, model, cfg):
    reflecting = model.boundary is BoundaryBehaviour.REFLECTING and model.p < 0.5

    def fn(k, tau):
        row = {"price": call_price(model, k, tau, cfg), "price_asymptote": call_large_tau(model, k, tau)}
        if reflecting:
            iv = implied_vol_at(model, k, tau, cfg)
            row["sigma2_numeric"] = iv * iv
            row["sigma2_asymptote"] = implied_vol_large_tau(model, k, tau)
        return row
    cols = ["k", "tau", "price", "price_asymptote"]
    if reflecting:
        cols += ["sigma2_numeric", "sigma2_asymptote"]
    cols.append("error")
    return cols, *_rows_over(_ks(args), args.tau, fn, cols[2:-1]), {}


def cmd_mc_check(args, model, cfg):
    def fn(k, tau):
        est = mc_call_price(model, k, tau, args.n, args.seed, args.sampler, args.steps)
        q = call_price(model, k, tau, cfg)
        z = (est.value - q) / est.std_error if est.std_error > 0 else math.nan
        return {"mc": est.value, "std_error": est.std_error, "quadrature": q, "z": z,
                "zero_fraction": est.zero_fraction}
    cols = ["k", "tau", "mc", "std_error", "quadrature", "z", "zero_fraction", "error"]
    meta = {"seed": args.seed, "n": args.n, "sampler": args.sampler, "rng": RNG_ALGORITHM}
    if args.sampler == "euler":
        meta["steps"] = args.steps
    return cols, *_rows_over(_ks(args), args.tau, fn, cols[2:-1]), meta


def cmd_hedge(args, model, cfg):
    def fn(k, tau):
        return {"T": args.T, "theta": hedge_ratio(model, args.S, k, tau, args.T, cfg)}
    return ["k", "tau", "T", "theta", "error"], *_rows_over(_ks(args), args.tau, fn, ["T", "theta"]), {"S": args.S}


COMMANDS = {
    "price": cmd_price,
    "smile": cmd_smile,
    "digital": cmd_digital,
    "asymptote": cmd_asymptote,
    "wings": cmd_wings,
    "large-time": cmd_large_time,
    "mc-check": cmd_mc_check,
    "hedge": cmd_hedge,
}


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _json_val(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def render(cols, rows, meta, fmt: str) -> str:
    if fmt == "json":
        doc = {"metadata": meta, "columns": cols,
               "rows": [{c: _json_val(r.get(c, "")) for c in cols} for r in rows]}
        return json.dumps(doc, indent=1, allow_nan=False) + "\n"
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(cols))
    for r in rows:
        lines.append(",".join(_fmt(r.get(c, "")).replace(",", ";") for c in cols))
    return "\n".join(lines) + "\n"


def _metadata(args, model, cfg) -> dict:
    meta = {"command": args.command, "version": __version__, "p": model.p, "y0": model.y0, "xi": model.xi,
            "t": model.t, "boundary": model.boundary.value, "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol,
            "max_subdivisions": cfg.max_subdivisions, "tail_mass_tol": cfg.tail_mass_tol}
    if args.xi_auto is not None:
        meta["xi_auto"] = args.xi_auto
    return meta


def _write(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"cevsmile: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        model = _model(args)
        cfg = _qcfg(args)
        cols, rows, failed, meta = COMMANDS[args.command](args, model, cfg)
    except UsageError as exc:
        print(f"cevsmile: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RegimeNotSupported as exc:
        print(f"cevsmile: regime not supported: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (CevError, ValueError) as exc:
        print(f"cevsmile: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    meta = {**_metadata(args, model, cfg), **meta}
    try:
        _write(render(cols, rows, meta, args.format), args.output)
    except OSError as exc:
        print(f"cevsmile: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_ROWS if failed else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
