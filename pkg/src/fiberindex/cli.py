"""Command-line entry point and experiment orchestration.

Subcommands ``pair``, ``oracle``, ``family``, ``check {zeta|fedosov|xcomplex|all}``
and ``report``.  Each run writes ``summary.txt``, ``results.csv`` and
``report.yaml`` into ``--out``; the exit status is nonzero iff a row fails.
Log verbosity is read from ``FIBERINDEX_LOG`` (a logging level name).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from . import checks
from .checks import Row
from .config import ConfigError, ExperimentConfig, default_config, load_config, validate
from .constants import KAPPA, tolerance, tolerance_ledger, tolerance_overrides
from .report import Report, emit_report, load_report
from .trigpoly import TrigPoly

__all__ = ["ExperimentError", "run_experiment", "main", "symbol_tables"]

log = logging.getLogger("fiberindex")

LOG_ENV = "FIBERINDEX_LOG"


class ExperimentError(RuntimeError):
    """A downstream computation failed; ``module`` names where."""

    def __init__(self, module: str, exc: BaseException):
        super().__init__(f"[{module}] {type(exc).__name__}: {exc}")
        self.module = module


def _provenance(exc: BaseException) -> str:
    mod = "fiberindex"
    for frame in traceback.extract_tb(exc.__traceback__):
        parts = Path(frame.filename).parts
        if "fiberindex" in parts and parts[-1] != "cli.py":
            mod = "fiberindex." + Path(frame.filename).stem
    return mod


def _coef(v) -> complex:
    return complex(v.replace(" ", "")) if isinstance(v, str) else complex(v)


def symbol_tables(sym: dict) -> tuple[TrigPoly, TrigPoly, str]:
    """Branch trig polys from a config ``symbol`` entry.

    Either ``windings: [w+, w-]`` (monomials) or ``plus``/``minus`` tables
    of ``{freq: int, coef: number | "a+bj"}`` entries.
    """
    if "plus" in sym:
        polys = []
        for key in ("plus", "minus"):
            table: dict = {}
            for i, ent in enumerate(sym[key]):
                if "freq" not in ent or "coef" not in ent:
                    raise ConfigError(f"symbol.{key}[{i}]", "entries need freq and coef")
                f = (int(ent["freq"]),)
                table[f] = table.get(f, 0) + _coef(ent["coef"])
            polys.append(TrigPoly.from_dict(table, 1, 1))
        return polys[0], polys[1], sym.get("name", "custom")
    wp, wm = sym["windings"]
    return TrigPoly.monomial((wp,)), TrigPoly.monomial((wm,)), sym.get("name", f"shift({wp},{wm})")


def _pair_rows(cfg: ExperimentConfig, oracle_only: bool) -> list:
    tr = cfg.truncation
    J, N, Nc, ts = tr["J"], tr["N"], tr.get("N_check"), cfg.tol_scale
    if cfg["cycle"].get("torus2"):
        if oracle_only:
            return _family_oracle_rows(cfg)
        return checks.family_rows(cfg["families"], grids=tuple(tr["grids"]), N=N, J=J, tol_scale=ts)
    if cfg["corpus"] == "shift":
        entries = [((wp, wm), None) for wp in range(-2, 3) for wm in range(-2, 3)]
    else:
        plus, minus, name = symbol_tables(cfg["symbol"])
        entries = [(None, (plus, minus, name))]
    rows = []
    for wind, custom in entries:
        t0 = time.perf_counter()
        if custom is None:
            wp, wm = wind
            plus = minus = None
            name = None
        else:
            plus, minus, name = custom
            wp = wm = 0
            name = f"point/{name}"
        if oracle_only:
            row = _oracle_row(wp, wm, plus, minus, name, N, Nc, J, ts)
        else:
            row = checks.pair_row(wp, wm, N=N, N_check=Nc, J=J, tol_scale=ts, plus=plus, minus=minus, name=name)
        row.detail["runtime"] = round(time.perf_counter() - t0, 3)
        rows.append(row)
    return rows


def _oracle_row(wp, wm, plus, minus, name, N, Nc, J, ts) -> Row:
    """Oracle alone: e_trace at N against its nearest integer (same row names as ``pair``)."""
    from .connecting import quantize_symbol
    from .oracle import index_idempotent_pairing
    from .symbols import parametrix

    plus = TrigPoly.monomial((wp,)) if plus is None else plus
    minus = TrigPoly.monomial((wm,)) if minus is None else minus
    q = quantize_symbol(plus, minus)
    p = parametrix(q, J)
    o = index_idempotent_pairing(q, N, J, p=p)
    ok = o.rounded is not None
    detail = {"e_trace": [o.e_trace.real, o.e_trace.imag], "rounded": o.rounded, "N": N, "J": J}
    if Nc:
        o2 = index_idempotent_pairing(q, Nc, J, p=p)
        detail["rounded_check"] = o2.rounded
        ok = ok and o2.rounded == o.rounded
    target = o.rounded if o.rounded is not None else round(o.e_trace.real)
    return Row.compare(name or f"point/shift({wp},{wm})", o.e_trace, target, tolerance("integer_gap", ts), ok,
                       tags=("oracle",), **detail)


def _family_oracle_rows(cfg: ExperimentConfig) -> list:
    from .families import family
    from .oracle import family_chern_number
    from .symbols import parametrix
    from .trigpoly import coefficient_floor

    tr = cfg.truncation
    rows = []
    for name in cfg["families"]:
        fam = family(name)
        with coefficient_floor(1e-13):
            p = parametrix(fam.symbol, tr["J"], tol=1e-9)
        ch = {g: family_chern_number(fam.symbol, tr["N"], g, tr["J"], p=p) for g in tr["grids"]}
        first, last = ch[tr["grids"][0]], ch[tr["grids"][-1]]
        rows.append(Row.compare(f"torus2/family-{name}", first, last, tolerance("oracle_delta", cfg.tol_scale),
                                tags=("oracle", "family"), chern={str(k): v for k, v in ch.items()}))
    return rows


def _check_rows(cfg: ExperimentConfig, suite: str, rng: np.random.Generator, zeta_record: list) -> list:
    n = cfg["check"]["trials"]
    ts = cfg.tol_scale
    rows = []
    if suite in ("zeta", "all"):
        rows += checks.zeta_suite(rng, n, tol_scale=ts, record=zeta_record)
    if suite in ("fedosov", "all"):
        rows += checks.fedosov_suite(rng, n, tol_scale=ts)
        rows += checks.boundary_formula_suite(rng, n, tol_scale=ts)
    if suite in ("xcomplex", "all"):
        rows += checks.xcomplex_suite(rng, n, tol_scale=ts)
        rows += checks.finite_model_suite(rng, n, tol_scale=ts)
    if suite == "all":
        rows += checks.similarity_suite(rng, n, tol_scale=ts)
    return rows


def _zeta_breakdowns() -> dict:
    from .symbols import DSpec, constant_symbol
    from .zeta import zeta_finite_part

    return {"Pf(1)": zeta_finite_part(constant_symbol(1.0)).to_record(),
            "Pf(D)": zeta_finite_part(DSpec().symbol).to_record()}


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Dispatch a validated config to the formula, oracle or check suites."""
    rng = np.random.default_rng(cfg.seed)
    zeta_record: list = []
    overrides = cfg["tolerances"]
    try:
        with tolerance_overrides(overrides):
            if cfg.mode == "pair":
                rows = _pair_rows(cfg, oracle_only=False)
            elif cfg.mode == "oracle":
                rows = _pair_rows(cfg, oracle_only=True)
            elif cfg.mode == "family":
                tr = cfg.truncation
                rows = checks.family_rows(cfg["families"], grids=tuple(tr["grids"]), N=tr["N"], J=tr["J"],
                                          tol_scale=cfg.tol_scale)
            else:
                rows = _check_rows(cfg, cfg["check"]["suite"], rng, zeta_record)
            ledger = tolerance_ledger(cfg.tol_scale)
    except ConfigError:
        raise
    except Exception as exc:  # surfaced with the module that raised
        raise ExperimentError(_provenance(exc), exc) from exc
    return Report(rows, cfg.to_dict(), ledger, KAPPA, _zeta_breakdowns(), zeta_record)


def _write_zeta_trials(records: list, out: Path) -> Path:
    path = out / "zeta_trials.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "delta"])
        for i, lhs, rhs, d in records:
            w.writerow([i] + [format(v, ".17g") for v in (lhs.real, lhs.imag, rhs.real, rhs.imag, d)])
    return path


def _build_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        data = cfg.to_dict()
        if args.command != cfg.mode:
            raise ConfigError("mode", f"config declares mode {cfg.mode!r} but subcommand is {args.command!r}")
    else:
        data = default_config(args.command).to_dict()
    if getattr(args, "suite", None):
        data["check"]["suite"] = args.suite
    if getattr(args, "trials", None) is not None:
        data["check"]["trials"] = args.trials
    if args.seed is not None:
        data["seed"] = args.seed
    if args.tol_scale is not None:
        data["tol_scale"] = args.tol_scale
    if args.out is not None:
        data["output"]["dir"] = args.out
    return validate(data)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fiberindex", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tol-scale", type=float, dest="tol_scale", help="multiply every tolerance")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("pair", parents=[common], help="formula value against the oracle")
    sub.add_parser("oracle", parents=[common], help="oracle values alone")
    sub.add_parser("family", parents=[common], help="T^2 families: pairing against lattice Chern numbers")
    c = sub.add_parser("check", parents=[common], help="property suites")
    c.add_argument("suite", nargs="?", choices=["zeta", "fedosov", "xcomplex", "all"])
    c.add_argument("--trials", type=int)
    r = sub.add_parser("report", help="reload a report and re-verify its pass flags")
    r.add_argument("path", nargs="?", default=None, help="report.yaml or its directory")
    r.add_argument("--out", help="directory holding report.yaml")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    if args.command == "report":
        path = args.path or args.out or "fiberindex-out"
        rep = load_report(path)
        bad = rep.reverify()
        sys.stdout.write(rep.summary_text())
        for name in bad:
            print(f"inconsistent pass flag: {name}", file=sys.stderr)
        return 0 if rep.passed and not bad else 1
    try:
        cfg = _build_config(args)
        rep = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 3
    out = Path(cfg["output"]["dir"])
    paths = emit_report(rep, out)
    if cfg.mode == "check" and cfg["check"]["suite"] in ("zeta", "all"):
        _write_zeta_trials(rep.zeta_trials, out)
    sys.stdout.write(rep.summary_text())
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return 0 if rep.passed else 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
