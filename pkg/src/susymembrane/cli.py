"""Command-line front end.

Each command reads an optional INI file (one section per command) and long
flags; flags win over the file, which wins over the built-in defaults. The
report is JSON (``config``, ``checks``, ``tables``, ``timings``) or one CSV per
table. Exit status: 0 all checks passed, 1 some check failed, 2 bad
configuration or runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

from . import operators as ops
from . import verify as vf
from .eigensolver import SolverConfig, smallest_eigenpairs
from .grid import BC, REGION_TAGS, build_grid

COMMANDS = (
    "spectrum",
    "verify-algebra",
    "verify-identity",
    "bracketing",
    "region-scan",
    "oscillator-bound",
    "zero-mode-scan",
)
OPERATORS = ("H", "H_susy", "scalar", "H_M")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


# ------------------------------------------------------------------ key types


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(t) for t in s.split(",") if t.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(_int(t) for t in s.split(",") if t.strip())


def _int(s: str) -> int:
    f = float(s)
    if not f.is_integer():
        raise ValueError(f"{s!r} is not an integer")
    return int(f)


def _strs(s: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in s.split(",") if t.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _opt_float(s: str) -> float | None:
    return None if s.strip().lower() in ("", "none") else float(s)


def _opt_str(s: str) -> str | None:
    return None if s.strip().lower() in ("", "none") else s.strip()


PARSERS: dict[str, Callable[[str], Any]] = {
    "L": float, "n": _int, "bc": str, "k": _int, "tol": float, "seed": _int,
    "output": _opt_str, "format": str, "operator": str, "M": float, "eps": float,
    "defect_tol": float, "fields": _int, "supertrace": _bool,
    "schedule": _ints, "eps_sequence": _floats, "trials": _int,
    "M_list": _floats, "region": _strs, "C": _opt_float,
    "a": _floats, "y0": _floats, "L_list": _floats, "h": float,
}

# scan commands take lists under the natural flag name
ALIASES = {("region-scan", "M"): "M_list", ("zero-mode-scan", "L"): "L_list"}

_COMMON = {"tol": 1e-8, "seed": 42, "output": None, "format": "json"}

DEFAULTS: dict[str, dict[str, Any]] = {
    "spectrum": {"L": 6.0, "n": 96, "bc": "dirichlet", "k": 4, "operator": "H", "M": 2.0},
    "verify-algebra": {"L": 4.0, "n": 64, "defect_tol": 1e-11, "fields": 20, "supertrace": False, "k": 6},
    "verify-identity": {"L": 6.0, "n": 96, "schedule": (32, 64, 128), "M": 2.0, "eps": 0.1,
                        "eps_sequence": (0.5, 0.25, 0.1, 0.01), "trials": 50},
    "bracketing": {"L": 8.0, "M": 2.0, "schedule": (32, 64, 128)},
    "region-scan": {"L": 8.0, "n": 128, "M_list": (1.0, 1.5, 2.0, 3.0, 4.0), "region": REGION_TAGS,
                    "schedule": (), "C": None},
    "oscillator-bound": {"a": (1.0, 2.0, 4.0, 8.0, 16.0), "schedule": (512, 1024), "M": 2.0, "y0": ()},
    "zero-mode-scan": {"L_list": (4.0, 6.0, 8.0), "h": 0.125, "k": 2},
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict[str, Any]
    sources: dict[str, dict[str, Any]] = field(default_factory=dict, compare=False)

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def solver(self, k: int = 1) -> SolverConfig:
        return SolverConfig(k=k, tol=self["tol"], seed=self["seed"])


def _allowed(command: str) -> dict[str, Any]:
    return {**_COMMON, **DEFAULTS[command]}


def _canonical_key(command: str, key: str) -> str:
    key = key.strip().replace("-", "_")
    return ALIASES.get((command, key), key)


def _coerce(command: str, key: str, raw: Any) -> Any:
    if key not in _allowed(command):
        raise ConfigError(f"unknown key {key!r} for command {command!r}")
    if not isinstance(raw, str):
        return raw
    try:
        return PARSERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key!r}: {exc}") from None


def _even_n(key: str, v: int) -> None:
    if v < 4 or v % 2:
        raise ConfigError(f"{key}: n must be an even integer >= 4, got {v}")


def validate(cfg: RunConfig) -> None:
    p = cfg.params
    positive = ("L", "M", "tol", "h", "defect_tol")
    for key in positive:
        if key in p and not (p[key] > 0 and math.isfinite(p[key])):
            raise ConfigError(f"{key} must be positive and finite, got {p[key]}")
    for key in ("M_list", "L_list", "a"):
        if key in p:
            if not p[key] or any(not v > 0 for v in p[key]):
                raise ConfigError(f"{key} must be a non-empty list of positive numbers")
    if "a" in p and any(b <= a for a, b in zip(p["a"], p["a"][1:])):
        raise ConfigError("a must be increasing")
    if "n" in p:
        _even_n("n", p["n"])
    for v in p.get("schedule", ()):
        _even_n("schedule", v)
    for key in ("k", "fields", "trials"):
        if key in p and p[key] < 1:
            raise ConfigError(f"{key} must be >= 1, got {p[key]}")
    if "eps" in p and p["eps"] < 0:
        raise ConfigError(f"eps must be >= 0, got {p['eps']}")
    if "eps_sequence" in p:
        e = p["eps_sequence"]
        if len(e) < 2 or any(b >= a for a, b in zip(e, e[1:])) or e[-1] < 0:
            raise ConfigError("eps_sequence must decrease strictly to a value >= 0")
    if "bc" in p:
        try:
            BC.parse(p["bc"])
        except ValueError as exc:
            raise ConfigError(f"bc: {exc}") from None
    if "region" in p and (not p["region"] or any(t not in REGION_TAGS for t in p["region"])):
        raise ConfigError(f"region must be a list drawn from {REGION_TAGS}, got {p['region']}")
    if "operator" in p and p["operator"] not in OPERATORS:
        raise ConfigError(f"operator must be one of {OPERATORS}, got {p['operator']!r}")
    if p["format"] not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {p['format']!r}")
    if cfg.command == "bracketing" and len(p["schedule"]) < 3:
        raise ConfigError("schedule: bracketing needs at least three resolutions")
    if cfg.command == "verify-identity" and len(p["schedule"]) < 2:
        raise ConfigError("schedule: convergence studies need at least two resolutions")


# ------------------------------------------------------------------ parsing


def _read_file(path: str, command: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config: malformed file {path}: {exc}") from None
    return _section(cp, command)


def _section(cp: configparser.ConfigParser, command: str) -> dict[str, str]:
    for sec in cp.sections():
        if sec not in COMMANDS:
            raise ConfigError(f"unknown config section [{sec}]")
    return dict(cp.items(command)) if cp.has_section(command) else {}


def _resolve(command: str, file_vals: dict[str, str], flag_vals: dict[str, Any]) -> RunConfig:
    params = dict(_allowed(command))
    sources: dict[str, dict[str, Any]] = {}
    from_file = {}
    for k, v in file_vals.items():
        key = _canonical_key(command, k)
        from_file[key] = _coerce(command, key, v)
    from_flags = {}
    for k, v in flag_vals.items():
        key = _canonical_key(command, k)
        from_flags[key] = _coerce(command, key, v)
    params.update(from_file)
    params.update(from_flags)
    for key in set(from_file) | set(from_flags):
        src = {}
        if key in from_file:
            src["file"] = from_file[key]
        if key in from_flags:
            src["flag"] = from_flags[key]
        sources[key] = src
    cfg = RunConfig(command, params, sources)
    validate(cfg)
    return cfg


def parse_config_text(text: str, command: str) -> RunConfig:
    """Parse INI text and take the section for ``command``."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config: {exc}") from None
    return _resolve(command, _section(cp, command), {})


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(cfg: RunConfig) -> str:
    """INI text that :func:`parse_config_text` maps back to ``cfg``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp[cfg.command] = {k: _fmt(v) for k, v in sorted(cfg.params.items()) if v is not None}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="susymembrane", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sp = sub.add_parser(command)
        sp.add_argument("--config", help="INI file with a [%s] section" % command)
        keys = set(_allowed(command))
        keys |= {k for (c, k), _ in ALIASES.items() if c == command}
        for key in sorted(keys):
            if key in {v for (c, _), v in ALIASES.items() if c == command}:
                continue
            names = {f"--{key}", f"--{key.replace('_', '-')}"}
            sp.add_argument(*sorted(names), dest=key, default=None, metavar="VALUE")
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Parse command-line arguments (and the ``--config`` file if given)."""
    parser = build_parser()
    try:
        ns = parser.parse_args(list(argv))
    except SystemExit as exc:
        raise ConfigError("invalid command line") from exc
    command = ns.command
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config") and v is not None}
    file_vals = _read_file(ns.config, command) if ns.config else {}
    return _resolve(command, file_vals, flags)


# ------------------------------------------------------------------ running


@dataclass
class Report:
    config: RunConfig
    checks: list[vf.VerificationReport] = field(default_factory=list)
    tables: dict[str, dict[str, list]] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    converged: bool = True
    error: str | None = None

    def table(self, name: str, columns: list[str], rows: list[list]) -> None:
        self.tables[name] = {"columns": columns, "rows": rows}

    def timed(self, name: str, fn: Callable[[], Any]) -> Any:
        t0 = time.perf_counter()
        try:
            return fn()
        finally:
            self.timings[name] = time.perf_counter() - t0

    @property
    def passed(self) -> bool:
        return self.error is None and self.converged and all(c.passed for c in self.checks)

    def to_dict(self) -> dict[str, Any]:
        body = {
            "config": {"command": self.config.command, **self.config.params},
            "config_sources": self.config.sources,
            "checks": [c.to_dict() for c in self.checks],
            "tables": self.tables,
            "timings": self.timings,
            "passed": self.passed,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        if self.error is not None:
            body["error"] = self.error
        return vf._jsonable(body)


def _spectrum(cfg: RunConfig, rep: Report) -> None:
    grid = build_grid(cfg["L"], cfg["n"], cfg["bc"])
    op = {
        "H": lambda: ops.build_H_direct(grid),
        "H_susy": lambda: ops.build_H_susy(grid),
        "scalar": lambda: ops.build_scalar_hamiltonian(grid),
        "H_M": lambda: ops.build_H_M(grid, cfg["M"], spinor=False),
    }[cfg["operator"]]()
    if cfg["k"] > op.dim:
        raise ConfigError(f"k: requested {cfg['k']} eigenpairs but the operator has dimension {op.dim}")
    res = rep.timed("eigensolver", lambda: smallest_eigenpairs(op, cfg.solver(cfg["k"]), keep_vectors=False))
    rep.converged = res.all_converged
    rep.table("spectrum", ["index", "eigenvalue", "residual", "converged"],
              [[j, float(e), float(r), bool(c)] for j, (e, r, c) in
               enumerate(zip(res.eigenvalues, res.residuals, res.converged))])
    rep.tables["spectrum"]["iterations"] = res.iterations


def _verify_algebra(cfg: RunConfig, rep: Report) -> None:
    grid = build_grid(cfg["L"], cfg["n"])
    rep.checks.append(rep.timed("susy_algebra", lambda: vf.check_susy_algebra(grid, cfg["defect_tol"], cfg["fields"], cfg["seed"])))
    rep.checks.append(rep.timed("nonuniqueness", lambda: vf.nonuniqueness_algebra_check(grid, cfg["defect_tol"], cfg["fields"], cfg["seed"])))
    if cfg["supertrace"]:
        rep.checks.append(rep.timed("supertrace", lambda: vf.supertrace_check(grid, cfg["k"], cfg.solver(cfg["k"]))))
    rep.table("defects", ["identity", "relative_defect"],
              [[k, v] for k, v in rep.checks[0].artifacts["defects"].items()])


def _verify_identity(cfg: RunConfig, rep: Report) -> None:
    L, sched, M = cfg["L"], cfg["schedule"], cfg["M"]
    grid = build_grid(L, cfg["n"])
    rows = []
    for kind in ("const", "quadratic", "f_eps"):
        r = rep.timed(f"commutator_{kind}", lambda kind=kind: vf.check_commutator_identity(L, sched, vf.CutoffChoice(kind, M, cfg["eps"])))
        r.check_name = f"commutator_identity[{kind}]"
        rep.checks.append(r)
        orders = [math.nan] + r.artifacts["orders"]
        rows += [[kind, h, d, o] for h, d, o in zip(r.artifacts["h"], r.artifacts["defects"], orders)]
    rep.checks.append(rep.timed("consistency", lambda: vf.check_discretization_consistency(L, sched)))
    rep.checks.append(rep.timed("strong_limit", lambda: vf.check_strong_limit(grid, M, cfg["eps_sequence"])))
    rep.checks.append(rep.timed("strong_limit_bound", lambda: vf.strong_limit_bound_check(grid, M, cfg["eps_sequence"])))
    rep.checks.append(rep.timed("form_bound", lambda: vf.check_form_bound(grid, M, cfg["trials"], cfg["seed"])))
    rep.table("commutator_convergence", ["f", "h", "defect", "order"], rows)


def _bracketing(cfg: RunConfig, rep: Report) -> None:
    r = rep.timed("bracketing", lambda: vf.bracketing_test(cfg["L"], cfg["M"], cfg["schedule"], cfg.solver()))
    rep.checks.append(r)
    rep.checks.append(rep.timed("dirichlet_control", lambda: vf.dirichlet_control(cfg["L"], cfg["M"], cfg["schedule"][1], cfg.solver())))
    rep.table("bracketing", ["n", "h", "lambda_H_M", "min_regional", "tol_disc", "margin"],
              [[x["n"], x["h"], x["lambda_H_M"], x["min_regional"], x["tol_disc"], x["margin"]]
               for x in r.artifacts["rows"]])


def _region_scan(cfg: RunConfig, rep: Report) -> None:
    schedule = cfg["schedule"] or (cfg["n"],)
    scan = rep.timed("regions", lambda: vf.region_positivity_scan(cfg["M_list"], cfg["L"], schedule, cfg["region"], cfg.solver()))
    rep.checks.extend(scan.reports)
    fit = scan.fit if scan.fits else None
    rows = []
    for r in scan.reports:
        if "region" not in r.parameters:
            continue
        M, tag = r.parameters["M"], r.parameters["region"]
        c = (M - r.artifacts["lambda_min"]) * M * M if tag == "II" else math.nan
        rows.append([M, tag, r.artifacts["lambda_min"], r.artifacts["residual"], r.artifacts["boundary_fraction"], c])
    rep.table("regions", ["M", "region", "lambda_min", "residual", "boundary_fraction", "C_hat"], rows)
    if fit is not None:
        rep.tables["regions"]["fitted_C_II"] = fit.fitted_C
    rep.tables["regions"]["threshold_M"] = scan.threshold_M
    if "IV" in cfg["region"]:
        for M in cfg["M_list"]:
            if M**3 >= 2:
                rep.checks.append(vf.region_IV_potential_check(M, seed=cfg["seed"]))
    if cfg["C"] is not None and "II" in cfg["region"]:
        finest = scan.values[schedule[-1]]
        rep.checks.append(vf.region_II_bound_check({M: v["II"] for M, v in finest.items()}, cfg["C"], "config"))


def _oscillator(cfg: RunConfig, rep: Report) -> None:
    solver = SolverConfig(k=1, tol=cfg["tol"], seed=cfg["seed"], max_iter=20000)
    r, fits = rep.timed("oscillator", lambda: vf.check_oscillator_bound(cfg["a"], cfg["schedule"], cfg=solver))
    rep.checks.append(r)
    rows = []
    for ft in fits:
        rows += [[ft.n, a, lam, 1 - lam, c] for (a, lam), c in zip(ft.samples, ft.implied_constants())]
    rep.table("oscillator", ["n", "a", "lambda_min", "deficit", "implied_C"], rows)
    rep.tables["oscillator"]["fitted_C"] = [ft.fitted_C for ft in fits]
    if cfg["y0"]:
        rep.checks.append(vf.scaled_oscillator_check(cfg["M"], cfg["y0"], fits[-1].fitted_C, cfg["schedule"][-1], solver))


def _zero_mode(cfg: RunConfig, rep: Report) -> None:
    scan = rep.timed("zero_mode", lambda: vf.zero_mode_search(cfg["L_list"], cfg["h"], cfg["k"], cfg.solver(cfg["k"])))
    rep.checks.extend(scan.reports)
    cols = ["L", "n", "lambda_min", "residual", "deloc_half_box", "deloc_fixed_radius", "scalar_lambda_min"]
    rep.table("zero_modes", cols, [[r[c] for c in cols] for r in scan.rows])


RUNNERS = {
    "spectrum": _spectrum,
    "verify-algebra": _verify_algebra,
    "verify-identity": _verify_identity,
    "bracketing": _bracketing,
    "region-scan": _region_scan,
    "oscillator-bound": _oscillator,
    "zero-mode-scan": _zero_mode,
}


def run(cfg: RunConfig) -> tuple[int, Report]:
    """Execute one command; returns the exit code and the (possibly partial) report."""
    rep = Report(cfg)
    try:
        RUNNERS[cfg.command](cfg, rep)
    except (ValueError, RuntimeError, ArithmeticError, MemoryError) as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
        return 2, rep
    return (0 if rep.passed else 1), rep


def write_report(rep: Report, output: str | None, fmt: str, stream=None) -> None:
    stream = stream or sys.stdout
    body = rep.to_dict()
    if fmt == "json":
        text = json.dumps(body, indent=2, sort_keys=True) + "\n"
        if output:
            Path(output).write_text(text, encoding="utf-8")
        else:
            stream.write(text)
        return
    tables = body["tables"]
    for name, tab in tables.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(tab["columns"])
        w.writerows(tab["rows"])
        if output:
            path = Path(output)
            if len(tables) > 1:
                path = path.with_name(f"{path.stem}_{name}{path.suffix or '.csv'}")
            path.write_text(buf.getvalue(), encoding="utf-8")
        else:
            stream.write(buf.getvalue())


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    code, rep = run(cfg)
    try:
        write_report(rep, cfg["output"], cfg["format"])
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return 2
    if rep.error:
        print(f"error: {rep.error}", file=sys.stderr)
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.check_name} defect={c.measured_defect:.3e} tol={c.tolerance:.3e}",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
