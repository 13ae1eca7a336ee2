"""Sandwich time, decay-rate fits and verdicts against the predicted rates."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .errors import ChemofluidError, InsufficientDataError, NoSandwichError
from .functionals import LyapunovSample
from .model import Equilibrium, Regime, RateConstants

# Fits stop where a quantity has fallen this far below its post-t0 maximum:
# beyond that the values are dominated by round-off, not by the dynamics.
REL_FLOOR_LINEAR = 1e-12
REL_FLOOR_SQUARED = 1e-24
MIN_FIT_POINTS = 5


class FitDomainError(ChemofluidError, ValueError):
    """Decay fits need strictly positive data."""


@dataclass
class TimeSeries:
    samples: list
    params: Any = None
    regime: Optional[Regime] = None
    domain: Any = None
    config: Any = None
    equilibrium: Optional[Equilibrium] = None
    diagnostics: dict = field(default_factory=dict)
    final_state: Any = None

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.samples], dtype=float)

    def column(self, name: str) -> np.ndarray:
        if name in ("E", "F", "t"):
            return np.array([getattr(s, name) for s in self.samples], dtype=float)
        if self.samples and name in self.samples[0].norms:
            return np.array([s.norms[name] for s in self.samples], dtype=float)
        return np.array([s.diagnostics[name] for s in self.samples], dtype=float)


def _samples(series):
    return series.samples if isinstance(series, TimeSeries) else list(series)


def sandwich_time(series, eq: Equilibrium) -> float:
    """First sample time from which every density stays within half its equilibrium value.

    Components whose equilibrium value is zero are exempt.
    """
    samples = _samples(series)
    if not samples:
        raise InsufficientDataError("empty series")
    ok = np.ones(len(samples), dtype=bool)
    for key, level in (("n1_linf", eq.n1_star), ("n2_linf", eq.n2_star)):
        if level > 0:
            ok &= np.array([s.norms[key] <= level / 2 for s in samples])
    if not ok[-1]:
        raise NoSandwichError("densities are outside [N/2, 3N/2] at the last sample")
    bad = np.flatnonzero(~ok)
    k = 0 if bad.size == 0 else int(bad[-1]) + 1
    return float(samples[k].t)


@dataclass
class FitResult:
    rate: float
    residual: float
    t_start: float
    t_end: float
    points: int


def _window(t, y, window):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        lo, hi = window
        keep = (t >= lo) & (t <= hi)
        t, y = t[keep], y[keep]
    if t.size < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need {MIN_FIT_POINTS} samples in the fit window, got {t.size}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise FitDomainError("decay fits need strictly positive, finite values")
    return t, y


def _linear_fit(x, z):
    slope, intercept = np.polyfit(x, z, 1)
    resid = z - (slope * x + intercept)
    return float(slope), float(np.sqrt(np.mean(resid**2)))


def fit_exponential(t, y, window=None) -> FitResult:
    """Least-squares slope of ``-log y`` against ``t``."""
    t, y = _window(t, y, window)
    rate, res = _linear_fit(t, -np.log(y))
    return FitResult(rate, res, float(t[0]), float(t[-1]), int(t.size))


def fit_algebraic(t, y, offset: float, window=None) -> FitResult:
    """Least-squares slope of ``-log y`` against ``log(t + offset)``."""
    t, y = _window(t, y, window)
    if np.any(t + offset <= 0):
        raise FitDomainError("t + offset must be positive")
    rate, res = _linear_fit(np.log(t + offset), -np.log(y))
    return FitResult(rate, res, float(t[0]), float(t[-1]), int(t.size))


@dataclass
class RateEntry:
    quantity: str
    definition: str
    fit_kind: str
    predicted: float
    verdict: str
    fitted: Optional[float] = None
    residual: Optional[float] = None
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    points: int = 0
    offset: Optional[float] = None
    note: str = ""


@dataclass
class RateReport:
    regime: str
    t0: Optional[float]
    slack: float
    entries: list = field(default_factory=list)
    complete: bool = True
    note: str = ""

    @property
    def graded(self):
        return [e for e in self.entries if e.verdict != "INFO"]

    @property
    def passed(self) -> bool:
        return self.complete and all(e.verdict == "PASS" for e in self.graded)

    @property
    def failures(self) -> int:
        return sum(e.verdict != "PASS" for e in self.graded)

    def entry(self, quantity: str) -> RateEntry:
        for e in self.entries:
            if e.quantity == quantity:
                return e
        raise KeyError(quantity)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def quantity_table(regime: Regime, rc: RateConstants):
    """Graded and informational quantities for ``regime``.

    Rows are ``(label, definition, columns, fit kind, predicted bound,
    graded, squared)``. Graded rows use the sharp L1/L2 bounds; the
    L-infinity rates obtained by interpolation are informational.
    """
    regime = Regime(regime)
    if regime is Regime.COEXISTENCE:
        kappa = rc.kappa_rate
        return [
            ("n_dist", "||n1-N1||_2^2 + ||n2-N2||_2^2", ("n1_l2sq", "n2_l2sq"),
             "exponential", kappa, True, True),
            ("c_linf", "||c||_inf", ("c_linf",), "exponential", rc.c_rate, True, False),
            ("u_l2sq", "||u||_2^2", ("u_l2sq",), "exponential",
             min(rc.lambda_P, kappa / 2), True, True),
            ("n1_linf", "||n1-N1||_inf", ("n1_linf",), "exponential",
             rc.predicted_n_rate[0], False, False),
            ("n2_linf", "||n2-N2||_inf", ("n2_linf",), "exponential",
             rc.predicted_n_rate[1], False, False),
            ("u_linf", "||u||_inf", ("u_linf",), "exponential", rc.predicted_u_rate, False, False),
        ]
    if regime is Regime.EXCLUSION_II:
        n_cols, n_def = ("n1_l1", "n2_l2sq"), "||n1||_1 + ||n2-1||_2^2"
    else:
        n_cols, n_def = ("n1_l2sq", "n2_l1"), "||n1-1||_2^2 + ||n2||_1"
    return [
        ("n_dist", n_def, n_cols, "algebraic", 1.0, True, False),
        ("c_linf", "||c||_inf", ("c_linf",), "exponential", rc.c_rate, True, False),
        ("u_l2sq", "||u||_2^2", ("u_l2sq",), "algebraic", 1.0, True, True),
        ("n1_linf", "||n1-N1||_inf", ("n1_linf",), "algebraic", rc.predicted_n_rate[0], False, False),
        ("n2_linf", "||n2-N2||_inf", ("n2_linf",), "algebraic", rc.predicted_n_rate[1], False, False),
        ("u_linf", "||u||_inf", ("u_linf",), "algebraic", rc.predicted_u_rate, False, False),
    ]


def fit_window(t, y, t0: float, margin: float, rel_floor: float):
    """Tail window ``[t0 + margin (tv - t0), tv]``.

    ``tv`` is the final time, or the last sample before ``y`` first drops
    below ``rel_floor`` times its maximum on ``[t0, end]`` (searching only
    after that maximum, so a quantity that starts at zero is not cut off).
    """
    after = t >= t0
    ta, ya = t[after], y[after]
    if ta.size == 0:
        return t0, t0
    k = int(np.argmax(ya))
    below = np.flatnonzero(ya[k:] <= rel_floor * ya[k])
    tv = float(ta[-1]) if below.size == 0 else float(ta[k + max(int(below[0]) - 1, 0)])
    return t0 + margin * (tv - t0), tv


def verdicts(series: TimeSeries, rc: RateConstants, regime: Optional[Regime] = None,
             slack: float = 0.10, margin: float = 0.25) -> RateReport:
    """Fit every tracked quantity and compare it with its predicted bound.

    The bounds are lower bounds on the decay speed, so a fitted rate
    ``>= bound * (1 - slack)`` passes. Algebraic fits use the offset
    ``max(1, t0)``.
    """
    regime = Regime(regime if regime is not None else rc.regime)
    t = series.t
    try:
        t0 = sandwich_time(series, rc.equilibrium)
    except (NoSandwichError, InsufficientDataError) as exc:
        report = RateReport(regime.value, None, slack, complete=False, note=str(exc))
        for label, definition, _, kind, bound, graded, _ in quantity_table(regime, rc):
            report.entries.append(RateEntry(label, definition, kind, bound,
                                            "INCOMPLETE" if graded else "INFO", note=str(exc)))
        return report

    report = RateReport(regime.value, t0, slack)
    offset = max(1.0, t0)
    for label, definition, cols, kind, bound, graded, squared in quantity_table(regime, rc):
        y = sum(series.column(c) for c in cols)
        floor = REL_FLOOR_SQUARED if squared else REL_FLOOR_LINEAR
        lo, hi = fit_window(t, y, t0, margin, floor)
        entry = RateEntry(label, definition, kind, bound, "INFO", t_start=lo, t_end=hi)
        try:
            if kind == "exponential":
                fit = fit_exponential(t, y, (lo, hi))
            else:
                fit = fit_algebraic(t, y, offset, (lo, hi))
                entry.offset = offset
        except (InsufficientDataError, FitDomainError) as exc:
            entry.note = str(exc)
            if graded:
                entry.verdict = "INCOMPLETE"
                report.complete = False
            report.entries.append(entry)
            continue
        entry.fitted, entry.residual, entry.points = fit.rate, fit.residual, fit.points
        entry.t_start, entry.t_end = fit.t_start, fit.t_end
        if graded:
            entry.verdict = "PASS" if fit.rate >= bound * (1.0 - slack) else "FAIL"
        report.entries.append(entry)
    return report
