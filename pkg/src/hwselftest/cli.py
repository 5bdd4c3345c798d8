"""Command-line front end.

    hwselftest identities --d 5
    hwselftest bounds --d 7 --method best_response_exhaustive
    hwselftest selftest --d 5 --seeds 0-19 --magnitudes 1e-3
    hwselftest sweep --d 3 --seeds 0-19 --magnitudes 1e-4,1e-3,1e-2 --out sweep.csv

Exit codes: 0 pass, 1 usage or configuration error, 2 a mathematical check
failed.  SELFTEST_THREADS caps the worker threads used by LHV enumeration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bell_op import (build_bell, build_full_bell_from_chi, diagonal_projection_norm,
                      folding_check, g_unitarity, max_eigenvalue, sopo_residual)
from .errors import HWSelfTestError, OutOfRegime
from .hw_algebra import char_closed_form, char_table, PhaseIndex, rotated_bell_state
from .lhv import CSV_HEADER as LHV_CSV_HEADER, csv_row, default_method, full_lhv_bound, lhv_bound
from .nuspec import CubicNu, NuSpec, QutritPhases
from .selftest import extract, theorem_bound
from .strategy import (NOISE_KINDS, NoiseSpec, Strategy, ideal_strategy, perturb,
                       qutrit_q_elements, qutrit_regime_limit, residuals)
from .zmod import PrimeDim

log = logging.getLogger("hwselftest")

EXIT_OK, EXIT_CONFIG, EXIT_MATH = 0, 1, 2
SWEEP_HEADER = ("d", "seed", "magnitude", "epsilon", "state_distance", "delta_bound",
                "ratio", "max_c_norm", "gamma")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    d: int
    nu: NuSpec
    nu_source: str
    seeds: list = field(default_factory=lambda: [0])
    magnitudes: list = field(default_factory=lambda: [0.0])
    noise_kind: str = "both"
    method: Optional[str] = None
    starts: int = 64
    fmt: str = "json"
    out: Optional[str] = None
    tol_identity: float = 1e-9
    tol_eig: float = 1e-7
    strategy_path: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "command": self.command, "d": self.d, "nu": self.nu.ident, "nu_source": self.nu_source,
            "seeds": self.seeds, "magnitudes": self.magnitudes, "noise_kind": self.noise_kind,
            "method": self.method, "starts": self.starts, "format": self.fmt, "out": self.out,
            "tol_identity": self.tol_identity, "tol_eig": self.tol_eig,
            "strategy": self.strategy_path,
        }


def constants(d: int) -> dict:
    mu, _ = theorem_bound(d, 0.0)
    c = {"tsirelson": d * (d - 1), "full_value": d * d, "mu_d": mu,
         "gamma_nu": math.sqrt(d)}
    if d == 3:
        c["qutrit_epsilon_limit"] = qutrit_regime_limit()
    return c


# ---------------------------------------------------------------- parsing

def parse_seeds(text: str) -> list:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty seed range {part}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds or any(not 0 <= s < 2 ** 64 for s in seeds):
        raise ConfigError("seeds must be non-negative 64-bit integers")
    return seeds


def parse_magnitudes(text: str) -> list:
    mags = [float(x) for x in text.split(",") if x.strip()]
    if not mags or any(not (m >= 0 and math.isfinite(m)) for m in mags):
        raise ConfigError("magnitudes must be finite and >= 0")
    return mags


def load_nu(d: int, spec: str, orientation: int = 1) -> NuSpec:
    """'canonical' (or 'qutrit-default' for d = 3) or a JSON file.

    File formats: {"coefficients": [c0, c1, c2, c3, ...]} for d > 3,
    {"phi1_over_pi": "-1/18", "phi2_over_pi": "-13/18", "orientation": 1}
    for d = 3.
    """
    if spec in ("canonical", "qutrit-default"):
        if d == 3:
            from .bell_op import qutrit_phase_solve
            return qutrit_phase_solve(orientation)
        if spec == "qutrit-default":
            raise ConfigError("qutrit-default phases only apply to d = 3")
        return CubicNu.canonical(d)
    try:
        obj = json.loads(Path(spec).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read nu file {spec}: {e}") from None
    if d == 3:
        try:
            return QutritPhases(Fraction(str(obj["phi1_over_pi"])), Fraction(str(obj["phi2_over_pi"])),
                                int(obj.get("orientation", orientation)))
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigError(f"bad qutrit phase file: {e}") from None
    coeffs = obj.get("coefficients") if isinstance(obj, dict) else obj
    if not isinstance(coeffs, list) or not all(isinstance(c, int) for c in coeffs):
        raise ConfigError("nu file needs an integer list 'coefficients'")
    return CubicNu(d, tuple(coeffs))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hwselftest", description="Heisenberg-Weyl Bell self-test verification toolkit")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--d", type=int, required=True, help="odd prime dimension")
        sp.add_argument("--nu", default="canonical",
                        help="'canonical', 'qutrit-default' (d=3) or a JSON coefficient file")
        sp.add_argument("--orientation", type=int, choices=(1, 2), default=1,
                        help="d=3 phase orientation: omega (1) or omega^2 (2)")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--tol-identity", type=float, default=1e-9)
        sp.add_argument("--tol-eig", type=float, default=1e-7)

    sp = sub.add_parser("identities", help="operator identities and coefficient checks")
    common(sp)
    sp.add_argument("--format", choices=("json",), default="json")

    sp = sub.add_parser("bounds", help="LHV certificates and the quantum maximum")
    common(sp)
    sp.add_argument("--method", choices=("exhaustive", "best_response_exhaustive", "sampled"))
    sp.add_argument("--seeds", default="0", help="seeds for the sampled method, e.g. 0-2")
    sp.add_argument("--starts", type=int, default=64, help="random starts per seed (sampled)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    for name, hlp in (("selftest", "perturb, measure residuals, extract"),
                      ("sweep", "tabulate distance against delta(eps) as CSV")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--seeds", default="0")
        sp.add_argument("--magnitudes", default="0")
        sp.add_argument("--noise-kind", choices=NOISE_KINDS, default="both")
        sp.add_argument("--strategy", help="strategy JSON to perturb instead of the ideal one")
        sp.add_argument("--format", choices=("json", "csv") if name == "selftest" else ("csv",),
                        default="json" if name == "selftest" else "csv")
    return p


def make_config(args) -> RunConfig:
    try:
        d = PrimeDim(args.d).d
    except HWSelfTestError:
        raise ConfigError("d must be an odd prime") from None
    if args.tol_identity <= 0 or args.tol_eig <= 0:
        raise ConfigError("tolerances must be positive")
    try:
        nu = load_nu(d, args.nu, args.orientation)
    except HWSelfTestError as e:
        raise ConfigError(f"invalid nu: {e}") from None
    cfg = RunConfig(args.command, d, nu, args.nu, fmt=args.format, out=args.out,
                    tol_identity=args.tol_identity, tol_eig=args.tol_eig)
    if hasattr(args, "seeds"):
        try:
            cfg.seeds = parse_seeds(args.seeds)
        except ValueError:
            raise ConfigError(f"bad --seeds {args.seeds!r}") from None
    if hasattr(args, "magnitudes"):
        try:
            cfg.magnitudes = parse_magnitudes(args.magnitudes)
        except ValueError:
            raise ConfigError(f"bad --magnitudes {args.magnitudes!r}") from None
    if hasattr(args, "noise_kind"):
        cfg.noise_kind = args.noise_kind
        cfg.strategy_path = args.strategy
    if hasattr(args, "method"):
        cfg.method = args.method or default_method(d)
        if args.starts < 1:
            raise ConfigError("--starts must be >= 1")
        cfg.starts = args.starts
    return cfg


# ---------------------------------------------------------------- output

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def fmt_float(x) -> str:
    """17 significant digits: round-trips every double exactly."""
    return format(float(x), ".17g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
        return
    try:
        Path(cfg.out).write_text(text)
    except OSError as e:
        raise ConfigError(f"cannot write {cfg.out}: {e}") from None


def load_schema(name: str) -> dict:
    """One of the JSON schemas shipped in hwselftest/schemas."""
    from importlib.resources import files
    return json.loads((files("hwselftest") / "schemas" / f"{name}.schema.json").read_text())


def json_text(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------- commands

def identity_checks(cfg: RunConfig) -> dict:
    d, nu = cfg.d, cfg.nu
    bs = build_bell(d, nu)
    sc, sd = sopo_residual(d, nu)
    psi = rotated_bell_state(nu)
    checks = {
        "sopo_C": sc,
        "sopo_D": sd,
        "diagonal_projection": diagonal_projection_norm(bs.B_d, d),
        "full_split": float(np.max(np.abs(bs.B_full - np.eye(d * d) - bs.S - bs.B_d))),
        "hermiticity": float(np.max(np.abs(bs.B_d - bs.B_d.conj().T))),
        "g_unitarity": g_unitarity(nu),
        "bell_value": abs(np.vdot(psi, bs.B_d @ psi) - d * (d - 1)),
        "full_value": abs(np.vdot(psi, bs.B_full @ psi) - d * d),
    }
    if d > 3:
        checks["folding"] = folding_check(d, nu)
        checks["chi_construction"] = float(np.max(np.abs(build_full_bell_from_chi(d, nu) - bs.B_full)))
        chi = char_table(psi, d)
        worst = 0.0
        for idx in np.ndindex(d, d, d, d):
            u, v = PhaseIndex.of(d, idx[0], idx[1]), PhaseIndex.of(d, idx[2], idx[3])
            worst = max(worst, abs(char_closed_form(nu, u, v) - chi[idx]))
        checks["char_closed_form"] = worst
    else:
        import cmath
        w = cmath.exp(2j * math.pi * nu.orientation / 3)
        checks["qutrit_constraint"] = abs(1 - math.sqrt(3) * cmath.exp(3j * nu.phi1) - w)
    eig = max_eigenvalue(bs.B_d)
    return {"identities": checks, "max_eigenvalue": eig,
            "eigenvalue_error": abs(eig - d * (d - 1))}


def cmd_identities(cfg: RunConfig) -> tuple[int, dict]:
    res = identity_checks(cfg)
    passed = {k: v <= cfg.tol_identity for k, v in res["identities"].items()}
    passed["tsirelson_eigenvalue"] = res["eigenvalue_error"] <= cfg.tol_eig
    ok = all(passed.values())
    report = {"config": cfg.to_dict(), "constants": constants(cfg.d), **res,
              "passed": passed, "ok": ok}
    emit(cfg, json_text(report))
    return (EXIT_OK if ok else EXIT_MATH), report


def cmd_bounds(cfg: RunConfig) -> tuple[int, dict]:
    d, nu = cfg.d, cfg.nu
    eig = max_eigenvalue(build_bell(d, nu).B_d)
    seeds = cfg.seeds if cfg.method == "sampled" else [None]
    certs = []
    for seed in seeds:
        t0 = time.perf_counter()
        cert = lhv_bound(d, nu, cfg.method, seed=seed or 0, starts=cfg.starts)
        log.info("lhv %s d=%d seed=%s: %.12g (%.2fs)", cert.method, d, seed, cert.best_value,
                 time.perf_counter() - t0)
        certs.append((seed, cert))
    ok = all(c.gap > 0 for _, c in certs) and abs(eig - d * (d - 1)) <= cfg.tol_eig
    report = {
        "config": cfg.to_dict(), "constants": constants(d),
        "max_eigenvalue": eig,
        "certificates": [dict(c.to_dict(), seed=s, exhaustive=c.exhaustive,
                              label="exact" if c.exhaustive else "lower bound (non-exhaustive)",
                              full_operator_lhv=full_lhv_bound(c)) for s, c in certs],
        "ok": ok,
    }
    if cfg.fmt == "csv":
        emit(cfg, _csv_text(LHV_CSV_HEADER, [csv_row(c, s) for s, c in certs]))
    else:
        emit(cfg, json_text(report))
    return (EXIT_OK if ok else EXIT_MATH), report


def _base_strategy(cfg: RunConfig) -> Strategy:
    if cfg.strategy_path is None:
        return ideal_strategy(cfg.d, cfg.nu)
    try:
        s = Strategy.load(cfg.strategy_path)
    except HWSelfTestError as e:
        raise ConfigError(str(e)) from None
    if s.d != cfg.d:
        raise ConfigError(f"strategy file has d={s.d}, expected {cfg.d}")
    return s


def selftest_rows(cfg: RunConfig):
    base = _base_strategy(cfg)
    for mag in cfg.magnitudes:
        for seed in cfg.seeds:
            noise = NoiseSpec(cfg.noise_kind, mag, seed)
            s = perturb(base, noise)
            prov = {"seed": seed, "noise_kind": cfg.noise_kind, "magnitude": mag,
                    "strategy": cfg.strategy_path or "ideal"}
            res = residuals(s, cfg.nu)
            iso = extract(s, cfg.nu, prov)
            q = qutrit_q_elements(s, cfg.nu) if cfg.d == 3 else None
            yield prov, res, iso, q


def _row_flags(res, iso, q) -> dict:
    flags = dict(res.bound_checks)
    flags["theorem_bound"] = iso.bound_satisfied
    if q is not None:
        flags.update({f"qutrit_{k}": v for k, v in q.bound_checks.items()})
    return flags


def cmd_selftest(cfg: RunConfig) -> tuple[int, dict]:
    rows, ok = [], True
    for prov, res, iso, q in selftest_rows(cfg):
        flags = _row_flags(res, iso, q)
        row_ok = all(flags.values())
        if iso.in_regime and not row_ok:
            ok = False
        rows.append({**prov, "epsilon": res.epsilon, "in_regime": iso.in_regime,
                     "out_of_regime": not iso.in_regime, "flags": flags, "all_flags": row_ok,
                     "residuals": res.to_dict(), "isometry": iso.to_dict(),
                     "qutrit": q.to_dict() if q else None})
    report = {"config": cfg.to_dict(), "constants": constants(cfg.d), "rows": rows, "ok": ok}
    if cfg.fmt == "csv":
        header = ("d", "seed", "magnitude", "epsilon", "in_regime", "state_distance",
                  "max_op_distance", "delta_bound", "max_c_norm", "all_flags")
        emit(cfg, _csv_text(header, [[cfg.d, r["seed"], r["magnitude"], r["epsilon"], r["in_regime"],
                                       r["isometry"]["state_distance"], r["isometry"]["max_op_distance"],
                                       r["isometry"]["delta_bound"], r["residuals"]["max_c_norm"],
                                       r["all_flags"]] for r in rows]))
    else:
        emit(cfg, json_text(report))
    return (EXIT_OK if ok else EXIT_MATH), report


def sweep_table(cfg: RunConfig) -> list:
    rows = []
    for prov, res, iso, _ in selftest_rows(cfg):
        rows.append([cfg.d, prov["seed"], float(prov["magnitude"]), res.epsilon, iso.state_distance,
                     iso.delta_bound, iso.ratio, res.max_c_norm, res.gamma])
    return rows


def cmd_sweep(cfg: RunConfig) -> tuple[int, str]:
    text = _csv_text(SWEEP_HEADER, sweep_table(cfg))
    emit(cfg, text)
    return EXIT_OK, text


COMMANDS = {"identities": cmd_identities, "bounds": cmd_bounds,
            "selftest": cmd_selftest, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutOfRegime)
            code, _ = COMMANDS[cfg.command](cfg)
    except ConfigError as e:
        print(f"hwselftest: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
