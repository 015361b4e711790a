"""Command-line front end.

Subcommands: ``angular``, ``radial``, ``resonances``, ``bifurcation`` and
``figure``. Exit status is 0 on success, 2 when any grid cell failed (the
failures are still written, with a reason) and 1 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from . import angular, classical, radial, resonances
from .core import ComplexEnergy, ParameterError, ProblemParams, Regime, ResonanceRecord, Sheet

log = logging.getLogger("tcres")

CSV_HEADER = (
    "n", "m", "h", "z_plus", "z_minus", "regime", "re_e", "im_e",
    "re_mu", "im_mu", "k_est", "residual", "status", "reason",
)

REGIME_ALIASES = {
    "equal-charges": Regime.EQUAL_CHARGES,
    "equal_charges": Regime.EQUAL_CHARGES,
    "ec": Regime.EQUAL_CHARGES,
    "low-lying": Regime.LOW_LYING,
    "low_lying": Regime.LOW_LYING,
    "ll": Regime.LOW_LYING,
    "high-energy": Regime.HIGH_ENERGY,
    "high_energy": Regime.HIGH_ENERGY,
    "he": Regime.HIGH_ENERGY,
    "direct-jost": Regime.DIRECT_JOST,
    "direct_jost": Regime.DIRECT_JOST,
    "jost": Regime.DIRECT_JOST,
}

DEFAULTS: dict[str, Any] = {
    "zp": 2.0,
    "zm": 4.0,
    "h": 0.01,
    "C": None,
    "mmin": None,
    "mspan": 1,
    "nmin": 0,
    "nmax": 0,
    "regime": "high-energy",
    "branch": "large",
    "c_min": resonances.C_MIN,
    "emin": 0.0,
    "emax": 10.0,
    "samples": 100,
    "e": "1.0",
    "k": "1.0",
    "mu": "1.0",
    "count": 10,
    "format": "csv",
    "out": "-",
    "threads": 1,
}

INT_KEYS = {"mmin", "mspan", "nmin", "nmax", "samples", "count", "threads"}
FLOAT_KEYS = {"zp", "zm", "h", "C", "emin", "emax", "c_min"}


class ConfigError(ValueError):
    """Invalid command line, config file or preset."""


# ---------------------------------------------------------------- figure presets


@dataclass(frozen=True)
class FigurePreset:
    zp: float
    zm: float
    h: float
    regime: str
    n_range: tuple[int, int]
    m_range: tuple[int, int]
    branch: str = ""
    c_min: Optional[float] = None


# Caption parameters as printed, except for the comparison panels: their m
# ranges only match C through m = ceil(C/h) when h = 0.01, and at h = 0.001
# the printed m would sit below the high-energy threshold on (m+1)h.
FIGURES: dict[str, FigurePreset] = {
    "llsol-pos": FigurePreset(2.0, 0.0, 0.01, "low_lying", (0, 4), (1, 250)),
    "llsol-neg": FigurePreset(-2.0, 0.0, 0.01, "low_lying", (0, 4), (1, 250)),
    "hesol-big": FigurePreset(2.0, 4.0, 0.05, "high_energy", (0, 3), (200, 220), "large"),
    "hesol-small": FigurePreset(2.0, 4.0, 0.05, "high_energy", (0, 3), (200, 220), "small"),
    "compres-a": FigurePreset(2.0, 4.0, 0.01, "high_energy", (0, 3), (400, 430), "large"),
    "compres-b": FigurePreset(-2.0, 4.0, 0.01, "high_energy", (0, 3), (700, 730), "large"),
    "compres-c": FigurePreset(4.0, 2.0, 0.01, "high_energy", (0, 3), (400, 430), "large"),
    "compres-d": FigurePreset(-4.0, 2.0, 0.01, "high_energy", (0, 3), (700, 730), "large"),
    "heresol-big": FigurePreset(2.0, 4.0, 0.001, "high_energy", (0, 3), (9000, 9010), "large"),
    "heresol-small": FigurePreset(2.0, 4.0, 0.001, "high_energy", (0, 3), (9000, 9010), "small"),
}


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    subcommand: str
    params: ProblemParams
    options: dict[str, Any] = field(default_factory=dict)
    n_range: tuple[int, ...] = ()
    m_range: tuple[int, ...] = ()
    out: str = "-"
    fmt: str = "csv"
    threads: int = 1


def parse_complex(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS and key not in ("id",):
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def merge_settings(flags: dict[str, Any], config: dict[str, str], env: Optional[dict[str, str]] = None) -> dict[str, Any]:
    """Flags win over the config file, which wins over defaults.

    The thread count additionally falls back to ``TCRES_THREADS``.
    """
    env = os.environ if env is None else env
    merged = dict(DEFAULTS)
    if env.get("TCRES_THREADS"):
        merged["threads"] = env["TCRES_THREADS"]
    for key, value in config.items():
        merged[key] = value
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return {k: _coerce(k, v) for k, v in merged.items()}


def _regime(name: str) -> Regime:
    try:
        return REGIME_ALIASES[str(name).strip().lower()]
    except KeyError as exc:
        raise ConfigError(f"unknown regime {name!r}") from exc


def build_config(subcommand: str, s: dict[str, Any]) -> RunConfig:
    if s["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    if s["format"] not in ("csv", "json"):
        raise ConfigError(f"unknown format {s['format']!r}")
    options: dict[str, Any] = {}
    n_range: tuple[int, ...] = ()
    m_range: tuple[int, ...] = ()
    if subcommand == "figure":
        fid = s.get("id")
        if fid not in FIGURES:
            raise ConfigError(f"unknown figure id {fid!r}; known: {', '.join(FIGURES)}")
        fp = FIGURES[fid]
        zp, zm, h = fp.zp, fp.zm, fp.h
        options["regime"] = Regime(fp.regime)
        n_range = tuple(range(fp.n_range[0], fp.n_range[1] + 1))
        m_range = tuple(range(fp.m_range[0], fp.m_range[1] + 1))
        if fp.branch:
            options["branch"] = fp.branch
        if fp.c_min is not None:
            options["c_min"] = fp.c_min
    else:
        zp, zm, h = s["zp"], s["zm"], s["h"]
    try:
        params = ProblemParams.from_sum_difference(zp, zm, h)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc

    if subcommand == "resonances":
        regime = _regime(s["regime"])
        options["regime"] = regime
        if s["nmax"] < s["nmin"] or s["nmin"] < 0:
            raise ConfigError("need 0 <= nmin <= nmax")
        if s["mspan"] < 1:
            raise ConfigError("mspan must be >= 1")
        if s["mmin"] is not None:
            m0 = s["mmin"]
        elif s["C"] is not None:
            m0 = math.ceil(s["C"] / h - 1e-9)
        else:
            m0 = 0
        if m0 < 0:
            raise ConfigError("m must be non-negative")
        n_range = tuple(range(s["nmin"], s["nmax"] + 1))
        m_range = tuple(range(m0, m0 + s["mspan"]))
        if regime in (Regime.HIGH_ENERGY, Regime.DIRECT_JOST):
            options["branch"] = s["branch"]
            options["c_min"] = s["c_min"]
        elif regime is Regime.LOW_LYING and s.get("branch") in ("upper", "lower"):
            options["branch"] = s["branch"]
    elif subcommand == "bifurcation":
        if not s["emax"] > s["emin"]:
            raise ConfigError("need emin < emax")
        if s["samples"] < 2:
            raise ConfigError("samples must be >= 2")
        options.update(emin=s["emin"], emax=s["emax"], samples=s["samples"])
    elif subcommand == "angular":
        if s["count"] < 1:
            raise ConfigError("count must be >= 1")
        options.update(e=parse_complex(s["e"]), count=s["count"])
    elif subcommand == "radial":
        k = parse_complex(s["k"])
        if k == 0:
            raise ConfigError("k must be nonzero")
        options.update(k=k, mu=parse_complex(s["mu"]))
    return RunConfig(subcommand, params, options, n_range, m_range, s["out"], s["format"], s["threads"])


# ---------------------------------------------------------------- records <-> rows


def _fmt(x: float) -> str:
    return repr(float(x))


def record_row(rec: ResonanceRecord) -> list[str]:
    e = rec.e
    p = rec.params
    return [
        str(rec.n), str(rec.m), _fmt(p.h), _fmt(p.z_plus), _fmt(p.z_minus), rec.regime.value,
        _fmt(e.real), _fmt(e.imag), _fmt(complex(rec.mu).real), _fmt(complex(rec.mu).imag),
        _fmt(rec.k_classical), _fmt(rec.residual), rec.status, rec.reason,
    ]


def record_dict(rec: ResonanceRecord) -> dict[str, Any]:
    out: dict[str, Any] = dict(zip(CSV_HEADER, record_row(rec)))
    for key in ("n", "m"):
        out[key] = int(out[key])
    for key in ("h", "z_plus", "z_minus", "re_e", "im_e", "re_mu", "im_mu", "k_est", "residual"):
        v = float(out[key])
        out[key] = v if math.isfinite(v) else None
    out["i_sign"] = rec.i_sign
    out["family"] = rec.branch
    return out


def row_to_record(row: dict[str, str]) -> ResonanceRecord:
    """Inverse of :func:`record_row`; floats survive bit for bit."""
    params = ProblemParams.from_sum_difference(float(row["z_plus"]), float(row["z_minus"]), float(row["h"]))
    e = complex(float(row["re_e"]), float(row["im_e"]))
    energy: Optional[ComplexEnergy] = None
    if row["status"] == "ok":
        k = complex(e) ** 0.5
        if e.imag < 0.0:
            if k.real < 0.0:
                k = -k
            sheet = Sheet.SECOND
        else:
            if k.imag < 0.0:
                k = -k
            sheet = Sheet.PHYSICAL
        energy = ComplexEnergy(e, k, sheet)
    return ResonanceRecord(
        n=int(row["n"]),
        m=int(row["m"]),
        energy=energy,
        mu=complex(float(row["re_mu"]), float(row["im_mu"])),
        k_classical=float(row["k_est"]),
        regime=Regime(row["regime"]),
        residual=float(row["residual"]),
        params=params,
        status=row["status"],
        reason=row["reason"],
    )


def read_records(source) -> list[ResonanceRecord]:
    """Parse resonance CSV text or an open file."""
    fh = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.DictReader(fh, lineterminator="\n")
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError("not a resonance CSV")
    return [row_to_record(r) for r in reader]


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


# ---------------------------------------------------------------- subcommands


def run_resonances(cfg: RunConfig) -> tuple[str, int]:
    opts = dict(cfg.options)
    regime = opts.pop("regime")
    t0 = time.perf_counter()
    recs = resonances.resonance_grid(cfg.params, regime, cfg.n_range, cfg.m_range, threads=cfg.threads, **opts)
    failed = sum(not r.ok for r in recs)
    log.info("%d cells, %d failed, %.2fs, %d threads", len(recs), failed, time.perf_counter() - t0, cfg.threads)
    if cfg.fmt == "csv":
        text = _csv_text(CSV_HEADER, (record_row(r) for r in recs))
    else:
        text = _json_text([record_dict(r) for r in recs])
    return text, 2 if failed else 0


def _kcell(k) -> str:
    v = classical.serialize_k(k)
    return v if isinstance(v, str) else _fmt(v)


def run_bifurcation(cfg: RunConfig) -> tuple[str, int]:
    o = cfg.options
    curves = classical.bifurcation_diagram(cfg.params, (o["emin"], o["emax"]), o["samples"])
    if cfg.fmt == "csv":
        rows = [(c.id, _fmt(e), _kcell(k)) for c in curves for e, k in c.samples]
        return _csv_text(("curve", "e", "k"), rows), 0
    blocks = [{"curve": c.id, "points": [[e, classical.serialize_k(k)] for e, k in c.samples]} for c in curves]
    return _json_text(blocks), 0


def run_angular(cfg: RunConfig) -> tuple[str, int]:
    o = cfg.options
    try:
        levels = angular.angular_eigenvalues(cfg.params, o["e"], o["count"])
    except angular.AngularError as exc:
        log.error("angular solve failed: %s", exc)
        return "", 2
    header = ("index", "re_mu", "im_mu", "parity", "method", "err_estimate")
    rows = [(str(lv.index), _fmt(complex(lv.mu).real), _fmt(complex(lv.mu).imag), lv.parity.value, lv.method.value,
             _fmt(lv.err_estimate)) for lv in levels]
    if cfg.fmt == "csv":
        return _csv_text(header, rows), 0
    return _json_text([dict(zip(header, r)) for r in rows]), 0


def run_radial(cfg: RunConfig) -> tuple[str, int]:
    o = cfg.options
    try:
        jd = radial.jost(cfg.params, o["k"], o["mu"])
    except (radial.RadialError, ValueError) as exc:
        log.error("radial solve failed: %s", exc)
        return "", 2
    row = {
        "re_k": jd.k.real, "im_k": jd.k.imag, "re_mu": jd.mu.real, "im_mu": jd.mu.imag,
        "re_fplus": jd.f_plus.real, "im_fplus": jd.f_plus.imag,
        "re_fminus": jd.f_minus.real, "im_fminus": jd.f_minus.imag,
        "re_s": jd.s_matrix.real, "im_s": jd.s_matrix.imag,
        "wronskian_check": jd.wronskian_check, "spread": jd.spread,
    }
    if cfg.fmt == "csv":
        return _csv_text(tuple(row), [[_fmt(v) for v in row.values()]]), 0
    return _json_text(row), 0


RUNNERS = {
    "angular": run_angular,
    "radial": run_radial,
    "resonances": run_resonances,
    "figure": run_resonances,
    "bifurcation": run_bifurcation,
}


def run(cfg: RunConfig) -> int:
    text, status = RUNNERS[cfg.subcommand](cfg)
    if cfg.out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            log.error("cannot write %s: %s", cfg.out, exc)
            return 1
    return status


# ---------------------------------------------------------------- argv


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors (exit 1); argparse would exit 2, which means failed cells here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file")
    common.add_argument("--out", help="output path, '-' for stdout")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--threads", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    phys = argparse.ArgumentParser(add_help=False)
    phys.add_argument("--zp", type=float, help="Z+ = Z1 + Z2")
    phys.add_argument("--zm", type=float, help="Z- = Z2 - Z1")
    phys.add_argument("--h", type=float, help="semiclassical parameter")

    ap = _Parser(prog="tcres", description="Two-center Coulomb resonances.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    a = sub.add_parser("angular", parents=[common, phys], help="angular eigenvalues mu_j(E)")
    a.add_argument("--e", help="energy, complex allowed (e.g. 3-0.1j)")
    a.add_argument("--count", type=int)

    r = sub.add_parser("radial", parents=[common, phys], help="Jost data at one (k, mu)")
    r.add_argument("--k")
    r.add_argument("--mu")

    s = sub.add_parser("resonances", parents=[common, phys], help="grid of resonances")
    s.add_argument("--regime", help="equal-charges, low-lying, high-energy or direct-jost")
    s.add_argument("--C", type=float, help="first m is ceil(C/h) unless --mmin is given")
    s.add_argument("--mmin", type=int)
    s.add_argument("--mspan", type=int, help="number of consecutive m values")
    s.add_argument("--nmin", type=int)
    s.add_argument("--nmax", type=int)
    s.add_argument("--branch", help="small/large (high energy) or upper/lower (low lying)")
    s.add_argument("--c-min", dest="c_min", type=float)

    b = sub.add_parser("bifurcation", parents=[common, phys], help="bifurcation set curves")
    b.add_argument("--emin", type=float)
    b.add_argument("--emax", type=float)
    b.add_argument("--samples", type=int)

    f = sub.add_parser("figure", parents=[common], help="caption presets")
    f.add_argument("--id", required=True, choices=sorted(FIGURES))
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = _parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    flags = {k: v for k, v in vars(ns).items() if k not in ("config", "verbose", "subcommand")}
    try:
        config = read_config_file(ns.config) if ns.config else {}
        settings = merge_settings(flags, config)
        cfg = build_config(ns.subcommand, settings)
    except ConfigError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
