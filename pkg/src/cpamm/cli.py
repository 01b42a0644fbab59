"""Command-line interface.

Subcommands: ``replay``, ``gen``, ``arb``, ``check``, ``lemmas``.

Exit status is 0 on success, 1 on an invalid transaction or a property
violation (details as JSON on stderr), and 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, List, Optional, Sequence

from cpamm import arb, econ
from cpamm.errors import AmmError, GenerationStalled, InvalidInitialState, StepInvalid
from cpamm.harness import CheckReport, GenConfig, check_lemmas, check_trace, gen_trace
from cpamm.numerics import Rational, format_decimal, format_rational
from cpamm.state import MintedId, State
from cpamm.txn import dump_trace, load_trace, replay


class InputError(Exception):
    """Unreadable or malformed input file; maps to exit status 2."""


def _read_json(path: str) -> Any:
    try:
        with open(path) as fp:
            return json.load(fp)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_oracle(path: Optional[str]) -> Optional[econ.Oracle]:
    if path is None:
        return None
    try:
        return econ.Oracle.from_json(_read_json(path))
    except (ValueError, TypeError, AttributeError) as exc:
        raise InputError(f"{path}: bad oracle config: {exc}") from exc


def _load_trace(path: str):
    try:
        with open(path) as fp:
            return load_trace(fp)
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    except (ValueError, TypeError, KeyError, AttributeError, AmmError) as exc:
        raise InputError(f"{path}: bad trace: {exc}") from exc


def _load_state(path: str) -> State:
    try:
        return State.from_json(_read_json(path))
    except (ValueError, TypeError, AttributeError, AmmError) as exc:
        raise InputError(f"{path}: bad state: {exc}") from exc


def _approx(q: Rational, decimals: Optional[int]) -> dict:
    out = {"exact": format_rational(q)}
    if decimals is not None:
        out["approx"] = format_decimal(q, decimals)
    return out


def _emit(obj: Any, stream=None) -> None:
    print(json.dumps(obj), file=stream or sys.stdout)


def _fail(obj: dict) -> int:
    _emit(obj, sys.stderr)
    return 1


def _gen_config(args: argparse.Namespace) -> GenConfig:
    base = {}
    if getattr(args, "config", None):
        base = _read_json(args.config)
    for flag, key in (("seed", "seed"), ("steps", "n_steps"), ("accounts", "n_accounts"), ("tokens", "n_tokens")):
        value = getattr(args, flag, None)
        if value is not None:
            base[key] = value
    try:
        return GenConfig.from_json(base)
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad generator config: {exc}") from exc


# -- subcommands -------------------------------------------------------------

def cmd_replay(args: argparse.Namespace) -> int:
    trace = _load_trace(args.trace)
    oracle = _load_oracle(args.oracle)
    if args.gain is not None and oracle is None:
        raise InputError("--gain needs --oracle")
    try:
        states = replay(trace)
    except InvalidInitialState as exc:
        return _fail({"error": "InvalidInitialState", "message": str(exc)})
    except StepInvalid as exc:
        return _fail({
            "error": "StepInvalid",
            "index": exc.index,
            "cause": type(exc.cause).__name__,
            "message": str(exc.cause),
        })
    if args.states_out:
        with open(args.states_out, "w") as fp:
            for s in states:
                fp.write(json.dumps(s.to_json()) + "\n")
    out: dict = {"steps": len(trace.steps), "final": states[-1].to_json()}
    if args.gain is not None:
        a = args.gain
        try:
            gains = [econ.gain(a, oracle, s, s2) for s, s2 in zip(states, states[1:])]
            delta = econ.networth(states[-1], a, oracle) - econ.networth(states[0], a, oracle)
        except econ.MissingPrice as exc:
            raise InputError(str(exc)) from exc
        out["account"] = a
        out["gains"] = [_approx(g, args.decimals) for g in gains]
        out["total_gain"] = _approx(sum(gains, Rational(0)), args.decimals)
        out["networth_delta"] = _approx(delta, args.decimals)
    _emit(out)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _gen_config(args)
    try:
        trace = gen_trace(cfg)
    except GenerationStalled as exc:
        return _fail({"error": "GenerationStalled", "message": str(exc)})
    if args.out:
        with open(args.out, "w") as fp:
            dump_trace(trace, fp)
    else:
        dump_trace(trace, sys.stdout)
    return 0


def cmd_arb(args: argparse.Namespace) -> int:
    s = _load_state(args.state)
    oracle = _load_oracle(args.oracle)
    try:
        pool = MintedId.parse(args.pool, strict=False)
    except (ValueError, AmmError) as exc:
        raise InputError(str(exc)) from exc
    try:
        sol = arb.solve_arbitrage(s, args.account, oracle, pool)
    except econ.MissingPrice as exc:
        raise InputError(str(exc)) from exc
    except (AmmError, ValueError) as exc:
        return _fail({"error": type(exc).__name__, "message": str(exc)})
    if sol is None:
        _emit({"pool": str(pool), "direction": None})
        return 0
    out = sol.to_json()
    if args.decimals is not None:
        out["approx"] = {
            k: format_decimal(v, args.decimals)
            for k, v in (("x", sol.x_star), ("y", sol.y), ("gain", sol.expected_gain), ("post_ratio", sol.post_ratio))
        }
    _emit(out)
    return 0


def _check_seed(cfg_json: dict, oracle_json: Optional[dict]) -> dict:
    cfg = GenConfig.from_json(cfg_json)
    oracle = econ.Oracle.from_json(oracle_json) if oracle_json else None
    return check_trace(gen_trace(cfg), o=oracle).to_json()


def _lemmas_seed(cfg_json: dict, oracle_json: Optional[dict], grid: int) -> dict:
    cfg = GenConfig.from_json(cfg_json)
    oracle = econ.Oracle.from_json(oracle_json) if oracle_json else None
    return check_lemmas(cfg, o=oracle, grid_points=grid).to_json()


def _fan_out(fn, cfg: GenConfig, n: int, jobs: int, *extra) -> CheckReport:
    configs = []
    for i in range(n):
        c = cfg.to_json()
        c["seed"] = cfg.seed + i
        configs.append(c)
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(fn, configs, *([e] * n for e in extra)))
    else:
        results = [fn(c, *extra) for c in configs]
    report = CheckReport()
    for r in results:
        report.states_checked += r["states_checked"]
        for v in r["violations"]:
            report.add(v["step"], v["property"], v["detail"])
    return report


def _finish(report: CheckReport) -> int:
    _emit(report.to_json())
    print(report.summary())
    if report.ok:
        return 0
    return _fail({"error": "PropertyViolation", "violations": report.to_json()["violations"]})


def cmd_check(args: argparse.Namespace) -> int:
    oracle = _load_oracle(args.oracle)
    if args.trace:
        report = check_trace(_load_trace(args.trace), o=oracle)
    else:
        cfg = _gen_config(args)
        report = _fan_out(_check_seed, cfg, args.traces, args.jobs, oracle.to_json() if oracle else None)
    return _finish(report)


def cmd_lemmas(args: argparse.Namespace) -> int:
    if args.grid < 2:
        raise InputError("--grid must be >= 2")
    oracle = _load_oracle(args.oracle)
    cfg = _gen_config(args)
    report = _fan_out(
        _lemmas_seed, cfg, args.traces, args.jobs, oracle.to_json() if oracle else None, args.grid
    )
    return _finish(report)


# -- parser ------------------------------------------------------------------

def _gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--accounts", type=int)
    p.add_argument("--tokens", type=int)


def _nonneg_int(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpamm", description="Constant-product AMM model toolkit.")
    parser.add_argument("--decimals", type=_nonneg_int, help="also print decimal approximations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="replay a JSON-lines trace")
    p.add_argument("trace")
    p.add_argument("--oracle", help="oracle config JSON")
    p.add_argument("--gain", type=_nonneg_int, metavar="ACCOUNT", help="report per-step gains of ACCOUNT")
    p.add_argument("--states-out", help="write every intermediate state as JSON lines")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("gen", help="generate a random valid trace")
    _gen_flags(p)
    p.add_argument("--out", "-o", help="output path (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("arb", help="solve the arbitrage problem for one pool")
    p.add_argument("--state", required=True)
    p.add_argument("--oracle", required=True)
    p.add_argument("--pool", required=True, help="pair key, e.g. 0-1")
    p.add_argument("--account", type=_nonneg_int, required=True)
    p.set_defaults(func=cmd_arb)

    p = sub.add_parser("check", help="check reachability invariants on traces")
    p.add_argument("--trace", help="trace file; otherwise traces are generated")
    _gen_flags(p)
    p.add_argument("--traces", type=_nonneg_int, default=1, help="number of generated traces (seeds seed..)")
    p.add_argument("--jobs", type=_nonneg_int, default=1)
    p.add_argument("--oracle")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("lemmas", help="run the gain and arbitrage property campaign")
    _gen_flags(p)
    p.add_argument("--traces", type=_nonneg_int, default=1)
    p.add_argument("--jobs", type=_nonneg_int, default=1)
    p.add_argument("--grid", type=int, default=1000, help="grid points per direction")
    p.add_argument("--oracle")
    p.set_defaults(func=cmd_lemmas)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        _emit({"error": "InputError", "message": str(exc)}, sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
