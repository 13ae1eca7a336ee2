"""Config parsing, experiment orchestration and the ``chemofluid`` command line.

Configs are JSON documents with the sections ``model``, ``domain``,
``solver``, ``initial``, ``rates`` and ``output``; only ``model.a1`` and
``model.a2`` are required. Each run writes ``series.csv``, ``summary.json``
and ``plot_decay.py`` into its output directory. The default output root is
taken from ``$CHEMOFLUID_OUT`` (falling back to ``./chemofluid_out``).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    BlowUpError,
    ConfigError,
    InsufficientDataError,
    ParameterError,
    UnsupportedRegimeError,
)
from .functionals import (
    NORM_KEYS,
    check_dissipation,
    energy_monotonicity_violations,
    quadratic_sandwich_violations,
)
from .grid import DomainSpec
from .model import ModelParams, PotentialSpec, Regime, classify_regime, rate_constants
from .rates import verdicts
from .solver import SolverConfig, default_initial_state, equilibrium_state, run

log = logging.getLogger(__name__)

OUT_ENV = "CHEMOFLUID_OUT"
DEFAULT_OUT = "chemofluid_out"

CSV_COLUMNS = (
    ("t", "E", "F")
    + NORM_KEYS
    + ("min_n1", "min_n2", "min_c", "max_div", "mass_n1", "mass_n2", "log_floor_hits")
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3


@dataclass(frozen=True)
class InitialCondition:
    """``kind="perturbed"`` (see :func:`default_initial_state`) or ``"equilibrium"``."""

    kind: str = "perturbed"
    amplitude: float = 0.2
    extinct_level: float = 0.2
    clip: float = 0.01
    c_level: float = 0.5
    c_amplitude: float = 0.5

    def __post_init__(self):
        if self.kind not in ("perturbed", "equilibrium"):
            raise ParameterError(f"kind must be 'perturbed' or 'equilibrium', got {self.kind!r}")
        for name in ("extinct_level", "clip", "c_level"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")
        if not 0 <= self.amplitude < 1:
            raise ParameterError("amplitude must lie in [0, 1)")
        if not 0 <= self.c_amplitude < 1:
            raise ParameterError("c_amplitude must lie in [0, 1)")

    def build(self, params, dom, regime):
        if self.kind == "equilibrium":
            return equilibrium_state(params, dom, regime)
        return default_initial_state(params, dom, regime, amplitude=self.amplitude,
                                     extinct_level=self.extinct_level, clip=self.clip,
                                     c_level=self.c_level, c_amplitude=self.c_amplitude)


@dataclass(frozen=True)
class RateOptions:
    eps: float = 0.9
    slack: float = 0.1
    margin: float = 0.25
    tol_rel: float = 0.02
    tol_abs: float = 1e-10

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ParameterError("eps must lie in (0, 1)")
        if not 0 <= self.slack < 1:
            raise ParameterError("slack must lie in [0, 1)")
        if not 0 <= self.margin < 1:
            raise ParameterError("margin must lie in [0, 1)")
        if self.tol_rel < 0:
            raise ParameterError("tol_rel must be >= 0")
        if self.tol_abs < 0:
            raise ParameterError("tol_abs must be >= 0")


@dataclass(frozen=True)
class OutputOptions:
    dir: Optional[str] = None


@dataclass(frozen=True)
class Config:
    model: ModelParams
    domain: DomainSpec = field(default_factory=lambda: DomainSpec(1.0, 1.0))
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial: InitialCondition = field(default_factory=InitialCondition)
    rates: RateOptions = field(default_factory=RateOptions)
    output: OutputOptions = field(default_factory=OutputOptions)


_SECTIONS = {
    "model": ModelParams,
    "domain": DomainSpec,
    "solver": SolverConfig,
    "initial": InitialCondition,
    "rates": RateOptions,
    "output": OutputOptions,
}
_REQUIRED = {"model": ("a1", "a2")}
_DOMAIN_DEFAULTS = {"Lx": 1.0, "Ly": 1.0}


def _coerce(value, type_name: str, key: str):
    t = str(type_name).replace("Optional[", "").rstrip("]")
    if t == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {type(value).__name__}")
        return float(value)
    if t == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {type(value).__name__}")
        return value
    if t == "str":
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {type(value).__name__}")
        return value
    raise ConfigError(key, f"unsupported field type {t}")


def _build(cls, doc, path: str, defaults=None):
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    for k in doc:
        if k not in known:
            raise ConfigError(f"{path}.{k}", "unknown key")
    kwargs = dict(defaults or {})
    for name, f in known.items():
        if name not in doc:
            continue
        key = f"{path}.{name}"
        if cls is ModelParams and name == "phi":
            kwargs[name] = _build(PotentialSpec, doc[name], key)
        elif cls is OutputOptions and doc[name] is None:
            kwargs[name] = None
        else:
            kwargs[name] = _coerce(doc[name], f.type, key)
    for name in _REQUIRED.get(path.split(".")[-1], ()):
        if name not in doc:
            raise ConfigError(f"{path}.{name}", "required key is missing")
    try:
        return cls(**kwargs)
    except ParameterError as exc:
        msg = str(exc)
        bad = msg.split()[0].split(".")[-1] if msg else ""
        raise ConfigError(f"{path}.{bad}" if bad in known else path, msg) from None


def config_from_dict(doc: dict) -> Config:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a table at the top level")
    for k in doc:
        if k not in _SECTIONS:
            raise ConfigError(k, "unknown section")
    if "model" not in doc:
        raise ConfigError("model", "required section is missing")
    parts = {}
    for name, cls in _SECTIONS.items():
        defaults = _DOMAIN_DEFAULTS if name == "domain" else None
        if name in doc:
            parts[name] = _build(cls, doc[name], name, defaults)
        elif name == "domain":
            parts[name] = DomainSpec(**_DOMAIN_DEFAULTS)
    return Config(**parts)


def parse_config(text: str) -> Config:
    """Parse and validate a JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"malformed JSON: {exc}") from None
    return config_from_dict(doc)


def load_config(path) -> Config:
    return parse_config(Path(path).read_text())


def config_to_dict(cfg: Config) -> dict:
    return {name: dataclasses.asdict(getattr(cfg, name)) for name in _SECTIONS}


def serialize_config(cfg: Config) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Regime):
        return obj.value
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_series_csv(series, path) -> None:
    """One row per recorded sample with the columns of :data:`CSV_COLUMNS`."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for s in series.samples:
            row = [s.t, s.E, s.F] + [s.norms[k] for k in NORM_KEYS]
            d = s.diagnostics
            row += [d.get(k, float("nan")) for k in ("min_n1", "min_n2", "min_c", "max_div",
                                                      "mass_n1", "mass_n2")]
            row = [repr(float(v)) for v in row] + [str(int(s.log_floor_hits))]
            w.writerow(row)


PLOT_SCRIPT = '''\
"""Plot the recorded decay curves with the predicted reference slopes.

Usage: python plot_decay.py [run_dir]   (needs matplotlib)
"""
import csv
import json
import math
import sys
from pathlib import Path

import matplotlib.pyplot as plt

run_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent
with open(run_dir / "series.csv") as fh:
    rows = list(csv.DictReader(fh))
summary = json.loads((run_dir / "summary.json").read_text())
t = [float(r["t"]) for r in rows]
curves = {
    "n_dist": NDIST_COLUMNS,
    "c_linf": ["c_linf"],
    "u_l2sq": ["u_l2sq"],
}
entries = {e["quantity"]: e for e in summary.get("report", {}).get("entries", [])}
offset = max(1.0, summary.get("t0") or 0.0)

fig, ax = plt.subplots(figsize=(7, 4.5))
for label, cols in curves.items():
    y = [sum(float(r[c]) for c in cols) for r in rows]
    pts = [(ti, yi) for ti, yi in zip(t, y) if yi > 0]
    if not pts:
        continue
    line, = ax.semilogy(*zip(*pts), label=label)
    e = entries.get(label)
    if e and e.get("predicted") is not None and e.get("t_start") is not None:
        t_ref = [ti for ti, _ in pts if e["t_start"] <= ti <= e["t_end"]]
        if not t_ref:
            continue
        y0 = dict(pts)[t_ref[0]]
        if e["fit_kind"] == "exponential":
            ref = [y0 * math.exp(-e["predicted"] * (ti - t_ref[0])) for ti in t_ref]
        else:
            ref = [y0 * ((ti + offset) / (t_ref[0] + offset)) ** (-e["predicted"]) for ti in t_ref]
        ax.semilogy(t_ref, ref, "--", color=line.get_color(), alpha=0.7,
                    label=f"{label} predicted ({e['predicted']:.3g})")
ax.set_xlabel("t")
ax.set_title(f"{summary.get('regime')}  a1={summary['config']['model']['a1']}  "
             f"a2={summary['config']['model']['a2']}")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(run_dir / "decay.png", dpi=150)
print("wrote", run_dir / "decay.png")
'''


def write_plot_script(path, regime: Regime) -> None:
    if regime is Regime.EXCLUSION_II:
        cols = ["n1_l1", "n2_l2sq"]
    elif regime is Regime.EXCLUSION_III:
        cols = ["n1_l2sq", "n2_l1"]
    else:
        cols = ["n1_l2sq", "n2_l2sq"]
    Path(path).write_text(PLOT_SCRIPT.replace("NDIST_COLUMNS", repr(cols)))


def resolve_out_dir(cfg: Config, out: Optional[str] = None) -> Path:
    """``out``, else ``output.dir`` from the config, else ``$CHEMOFLUID_OUT/run``."""
    if out:
        return Path(out)
    if cfg.output.dir:
        return Path(cfg.output.dir)
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT)) / "run"


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    summary: dict
    series: Optional[object] = field(default=None, repr=False)  # TimeSeries when one was produced


def _finish(out_dir: Path, summary: dict, code: int, series=None) -> RunResult:
    summary["exit_code"] = code
    (out_dir / "summary.json").write_text(dump_json(summary))
    return RunResult(code, out_dir, summary, series)


def run_experiment(cfg: Config, out_dir=None) -> RunResult:
    """Simulate one configuration and write its artifacts.

    The exit code is 0 exactly when every graded verdict passes, the
    dissipation audit passes and every invariant counter is zero.
    """
    out_dir = resolve_out_dir(cfg, out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    params, dom = cfg.model, cfg.domain
    regime = classify_regime(params.a1, params.a2)
    summary = {
        "config": config_to_dict(cfg),
        "regime": regime.value,
        "csv_columns": list(CSV_COLUMNS),
    }

    def timed():
        summary["timing"] = {"wall_seconds": time.perf_counter() - t_start}

    if regime is Regime.UNSUPPORTED:
        summary["status"] = "unsupported regime"
        summary["error"] = (f"unsupported regime for a1={params.a1}, a2={params.a2}: "
                            "no convergence result covers these coefficients")
        timed()
        return _finish(out_dir, summary, EXIT_USAGE)

    rc = rate_constants(params, regime, domain=dom, eps=cfg.rates.eps)
    summary["equilibrium"] = {"n1": rc.equilibrium.n1_star, "n2": rc.equilibrium.n2_star}
    summary["rate_constants"] = rc.to_dict()
    write_plot_script(out_dir / "plot_decay.py", regime)

    initial = cfg.initial.build(params, dom, regime)
    try:
        series = run(initial, params, cfg.solver, regime)
    except BlowUpError as exc:
        if exc.series is not None:
            write_series_csv(exc.series, out_dir / "series.csv")
            summary["invariants"] = exc.series.diagnostics
        summary["status"] = "blowup"
        summary["error"] = str(exc)
        timed()
        return _finish(out_dir, summary, EXIT_BLOWUP, exc.series)

    write_series_csv(series, out_dir / "series.csv")
    diag = dict(series.diagnostics)

    report = verdicts(series, rc, regime, slack=cfg.rates.slack, margin=cfg.rates.margin)
    summary["t0"] = report.t0
    summary["report"] = report.to_dict()

    counters = {k: diag[k] for k in ("floor_activations", "log_floor_activations",
                                     "div_violations", "positivity_violations",
                                     "cmax_violations", "mass_violations")}
    t0 = report.t0 if report.t0 is not None else -math.inf
    counters["energy_monotonicity_violations"] = energy_monotonicity_violations(series.samples, t0)
    if regime is Regime.COEXISTENCE:
        counters["quadratic_sandwich_violations"] = quadratic_sandwich_violations(
            series.samples, params, rc.equilibrium)
    try:
        diss = check_dissipation(series.samples, rc.dissipation_rate, tol_abs=cfg.rates.tol_abs,
                                 tol_rel=cfg.rates.tol_rel, t0=t0).to_dict()
    except InsufficientDataError as exc:
        diss = {"passed": False, "error": str(exc)}
        report.complete = False
    diss["rate"] = rc.dissipation_rate
    summary["dissipation"] = diss
    summary["invariants"] = {**diag, **counters}
    summary["invariant_violations"] = int(sum(counters.values()))
    summary["final"] = {
        "t": series.samples[-1].t,
        "n1_linf": series.samples[-1].norms["n1_linf"],
        "n2_linf": series.samples[-1].norms["n2_linf"],
        "c_linf": series.samples[-1].norms["c_linf"],
        "u_linf": series.samples[-1].norms["u_linf"],
    }

    if not report.complete:
        summary["status"] = "insufficient data"
        code = EXIT_FAIL
    elif report.passed and diss["passed"] and summary["invariant_violations"] == 0:
        summary["status"] = "pass"
        code = EXIT_OK
    else:
        summary["status"] = "fail"
        code = EXIT_FAIL
    timed()
    return _finish(out_dir, summary, code, series)


def point_dir_name(a1: float, a2: float) -> str:
    return f"a1_{a1!r}__a2_{a2!r}"


def _sweep_point(args):
    doc, a1, a2, out_dir = args
    doc = json.loads(doc)
    doc["model"]["a1"], doc["model"]["a2"] = a1, a2
    row = {"a1": a1, "a2": a2, "dir": Path(out_dir).name}
    try:
        res = run_experiment(config_from_dict(doc), out_dir)
    except Exception as exc:  # a failing point must not abort the sweep
        row.update(regime=classify_regime(a1, a2).value, status="error",
                   exit_code=EXIT_FAIL, error=f"{type(exc).__name__}: {exc}")
        return row, None
    s = res.summary
    row.update(regime=s["regime"], status=s["status"], exit_code=res.exit_code,
               t0=s.get("t0"), error=s.get("error"))
    if "final" in s:
        eq = s["equilibrium"]
        dist = max(s["final"]["n1_linf"], s["final"]["n2_linf"])
        row["final_distance"] = dist
        row["reached_equilibrium"] = bool(dist <= 1e-2 * max(eq["n1"], eq["n2"]))
    if "report" in s:
        row["rates"] = {e["quantity"]: {"fitted": e["fitted"], "predicted": e["predicted"],
                                        "verdict": e["verdict"]}
                        for e in s["report"]["entries"]}
    return row, s["timing"]["wall_seconds"]


def sweep(base: Config, a1_values, a2_values, jobs: int = 1, out_root=None) -> dict:
    """Run every ``(a1, a2)`` pair of the grid and aggregate the verdicts.

    Each point writes into its own subdirectory of ``out_root``. The
    aggregate (also saved as ``sweep.json``) is independent of ``jobs``
    apart from its ``timing`` entry.
    """
    out_root = Path(out_root) if out_root else resolve_out_dir(base).parent / "sweep"
    out_root.mkdir(parents=True, exist_ok=True)
    doc = json.dumps(config_to_dict(base))
    tasks = [(doc, float(a1), float(a2), str(out_root / point_dir_name(float(a1), float(a2))))
             for a1 in a1_values for a2 in a2_values]
    t_start = time.perf_counter()
    if jobs <= 1:
        results = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    rows = [r for r, _ in results]
    agg = {
        "a1_values": [float(a) for a in a1_values],
        "a2_values": [float(a) for a in a2_values],
        "points": rows,
        "failures": sum(r["status"] not in ("pass", "unsupported regime") for r in rows),
        "timing": {"wall_seconds": time.perf_counter() - t_start, "jobs": jobs,
                   "point_seconds": [w for _, w in results]},
    }
    (out_root / "sweep.json").write_text(dump_json(agg))
    return agg


def _float_list(text: str):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chemofluid", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one configuration")
    r.add_argument("--config", required=True, help="JSON configuration file")
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV}/run)")

    s = sub.add_parser("sweep", help="run a grid of (a1, a2) values")
    s.add_argument("--config", required=True, help="base JSON configuration; its a1, a2 are replaced")
    s.add_argument("--a1", type=_float_list, required=True, help="comma-separated a1 values")
    s.add_argument("--a2", type=_float_list, required=True, help="comma-separated a2 values")
    s.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    s.add_argument("--out", help=f"output root (default ${OUT_ENV}/sweep)")

    k = sub.add_parser("rates", help="print the closed-form rate constants")
    k.add_argument("--config", required=True, help="JSON configuration file")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "rates":
        try:
            rc = rate_constants(cfg.model, domain=cfg.domain, eps=cfg.rates.eps)
        except UnsupportedRegimeError as exc:
            print(f"error: unsupported regime: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(dump_json(rc.to_dict()), end="")
        return EXIT_OK

    if args.command == "run":
        res = run_experiment(cfg, args.out)
        s = res.summary
        if s["status"] == "unsupported regime":
            print(f"error: {s['error']}", file=sys.stderr)
        for e in s.get("report", {}).get("entries", []):
            fitted = "-" if e["fitted"] is None else f"{e['fitted']:.4g}"
            print(f"{e['quantity']:<8} {e['fit_kind']:<11} fitted={fitted:<10} "
                  f"bound={e['predicted']:.4g}  {e['verdict']}")
        print(f"status: {s['status']}  ({res.out_dir})")
        return res.exit_code

    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    agg = sweep(cfg, args.a1, args.a2, args.jobs, args.out)
    for row in agg["points"]:
        print(f"a1={row['a1']:<5g} a2={row['a2']:<5g} {row['regime']:<13} {row['status']}")
    return EXIT_OK if agg["failures"] == 0 else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
