"""Norms, the regime-specific Lyapunov energies and dissipation audits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, NumericError
from .grid import DomainSpec, VectorField, cell_velocity
from .model import Equilibrium, ModelParams, Regime, equilibrium

NORM_KEYS = (
    "n1_l1", "n1_l2sq", "n1_linf",
    "n2_l1", "n2_l2sq", "n2_linf",
    "c_linf", "c_l2sq",
    "u_l2sq", "u_linf",
)


@dataclass
class LyapunovSample:
    t: float
    E: float
    F: float
    norms: dict
    log_floor_hits: int = 0
    diagnostics: dict = field(default_factory=dict)


def norm(f, dom: DomainSpec, kind: str, shift: float = 0.0) -> float:
    """Midpoint-rule norm of ``f - shift``.

    ``kind`` is ``"L1"``, ``"L2sq"`` (squared L2) or ``"Linf"``. For a
    :class:`VectorField` the squared L2 norm sums the face values (the MAC
    kinetic energy) while L1 and Linf use the speed at cell centres; ``shift``
    must then be zero.
    """
    if isinstance(f, VectorField):
        if shift != 0:
            raise ValueError("vector norms take no shift")
        if kind == "L2sq":
            return float((np.sum(f.u**2) + np.sum(f.v**2)) * dom.cell_area)
        uc, vc = cell_velocity(f)
        speed = np.hypot(uc, vc)
        if kind == "L1":
            return float(np.sum(speed) * dom.cell_area)
        if kind == "Linf":
            return float(np.max(speed))
        raise ValueError(f"unknown norm kind {kind!r}")
    d = np.asarray(f, dtype=float) - shift
    if kind == "L1":
        return float(np.sum(np.abs(d)) * dom.cell_area)
    if kind == "L2sq":
        return float(np.sum(d * d) * dom.cell_area)
    if kind == "Linf":
        return float(np.max(np.abs(d)))
    raise ValueError(f"unknown norm kind {kind!r}")


def relative_entropy_density(n, n_star: float, floor: float):
    """Pointwise ``n - N - N log(n/N)`` and the number of floored entries.

    Written as ``N (r - log(1 + r))`` with ``r = n/N - 1``: a short series
    for tiny ``r`` keeps the relative accuracy near equilibrium, ``log1p``
    covers moderate ``r`` and ``log(n/N)`` is used far away, where forming
    ``r`` first would cancel digits.
    """
    hits = int(np.count_nonzero(n < floor))
    m = np.maximum(n, floor)
    q = m / n_star
    r = (m - n_star) / n_star
    small = np.abs(r) < 1e-4
    near = np.abs(r) < 0.5
    rs = np.where(small, r, 0.0)
    series = rs * rs * (0.5 - rs / 3.0 + rs * rs / 4.0 - rs**3 / 5.0)
    log_q = np.where(near, np.log1p(np.where(near, r, 0.0)), np.log(q))
    return n_star * np.where(small, series, r - log_q), hits


def energy_weights(params: ModelParams, regime: Regime, eq: Optional[Equilibrium] = None):
    """Weights ``(w1, w2, wc)`` of the species and signal parts of the energy."""
    regime = Regime(regime)
    if eq is None:
        eq = equilibrium(params, regime)
    a1, a2, mu1, mu2 = params.a1, params.a2, params.mu1, params.mu2
    if regime is Regime.COEXISTENCE:
        k = a1 * mu1 / (a2 * mu2)
        wc = 0.5 * (eq.n1_star * params.chi1**2 / 4 + k * eq.n2_star * params.chi2**2 / 4 + 1.0)
        return 1.0, k, wc
    if regime is Regime.EXCLUSION_II:
        return 1.0, mu1 / (a2 * mu2), mu1 * params.chi2**2 / (8 * a2 * mu2)
    if regime is Regime.EXCLUSION_III:
        return 1.0, a1 * mu1 / mu2, params.chi1**2 / 8
    raise NumericError("no energy is defined for the unsupported regime")


def lyapunov(state, params: ModelParams, regime: Regime, eq: Optional[Equilibrium] = None,
             floor: float = 1e-14) -> LyapunovSample:
    """Energy ``E`` and dissipation ``F`` of the active regime, plus the norm set.

    Norms of the densities are distances to the regime equilibrium; signal
    and velocity norms are distances to zero.
    """
    regime = Regime(regime)
    if eq is None:
        eq = equilibrium(params, regime)
    dom = state.domain
    dA = dom.cell_area
    n1, n2, c = state.n1, state.n2, state.c
    w1, w2, wc = energy_weights(params, regime, eq)
    c2 = float(np.sum(c * c) * dA)
    hits = 0

    if regime is Regime.COEXISTENCE:
        h1, k1 = relative_entropy_density(n1, eq.n1_star, floor)
        h2, k2 = relative_entropy_density(n2, eq.n2_star, floor)
        hits = k1 + k2
        parts = {"n1": float(np.sum(h1) * dA), "n2": w2 * float(np.sum(h2) * dA)}
        F = float(np.sum((n1 - eq.n1_star) ** 2) * dA + np.sum((n2 - eq.n2_star) ** 2) * dA)
    elif regime is Regime.EXCLUSION_II:
        h2, hits = relative_entropy_density(n2, 1.0, floor)
        parts = {"n1": float(np.sum(n1) * dA), "n2": w2 * float(np.sum(h2) * dA)}
        F = float(np.sum(n1 * n1) * dA + np.sum((n2 - 1.0) ** 2) * dA)
    else:
        h1, hits = relative_entropy_density(n1, 1.0, floor)
        parts = {"n1": float(np.sum(h1) * dA), "n2": w2 * float(np.sum(n2) * dA)}
        F = float(np.sum((n1 - 1.0) ** 2) * dA + np.sum(n2 * n2) * dA)
    parts["c"] = wc * c2
    for name, val in parts.items():
        if not np.isfinite(val):
            raise NumericError(f"non-finite energy integrand for {name!r} at t={state.t:.6g}")
    if not np.isfinite(F):
        raise NumericError(f"non-finite dissipation integrand at t={state.t:.6g}")
    E = parts["n1"] + parts["n2"] + parts["c"]

    norms = {
        "n1_l1": norm(n1, dom, "L1", eq.n1_star),
        "n1_l2sq": norm(n1, dom, "L2sq", eq.n1_star),
        "n1_linf": norm(n1, dom, "Linf", eq.n1_star),
        "n2_l1": norm(n2, dom, "L1", eq.n2_star),
        "n2_l2sq": norm(n2, dom, "L2sq", eq.n2_star),
        "n2_linf": norm(n2, dom, "Linf", eq.n2_star),
        "c_linf": norm(c, dom, "Linf"),
        "c_l2sq": c2,
        "u_l2sq": norm(state.vel, dom, "L2sq"),
        "u_linf": norm(state.vel, dom, "Linf"),
    }
    return LyapunovSample(t=float(state.t), E=E, F=F, norms=norms, log_floor_hits=hits)


@dataclass
class DissipationReport:
    passed: bool
    worst_residual: float
    worst_time: Optional[float]
    violations: int
    checked: int
    first_violation_time: Optional[float] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _as_arrays(samples):
    t = np.array([s.t for s in samples], dtype=float)
    E = np.array([s.E for s in samples], dtype=float)
    F = np.array([s.F for s in samples], dtype=float)
    return t, E, F


def check_dissipation(samples: Sequence[LyapunovSample], rate: float, tol_abs: float = 1e-10,
                      tol_rel: float = 0.02, t0: float = -np.inf) -> DissipationReport:
    """Audit ``dE/dt <= -rate * F`` along a recorded trajectory.

    At each interior sample with ``t >= t0`` the centred difference of ``E``
    gives ``dE/dt`` and the residual ``r = dE/dt + rate * F`` must satisfy
    ``r <= tol_abs + tol_rel * |dE/dt|``.
    """
    if len(samples) < 3:
        raise InsufficientDataError(f"need at least 3 samples, got {len(samples)}")
    t, E, F = _as_arrays(samples)
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    dEdt = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    resid = dEdt + rate * F[1:-1]
    tc = t[1:-1]
    active = tc >= t0
    allowed = tol_abs + tol_rel * np.abs(dEdt)
    bad = active & (resid > allowed)
    checked = int(np.count_nonzero(active))
    if checked == 0:
        return DissipationReport(True, 0.0, None, 0, 0)
    excess = np.where(active, resid - allowed, -np.inf)
    k = int(np.argmax(excess))
    first = float(tc[bad][0]) if bad.any() else None
    return DissipationReport(
        passed=not bad.any(),
        worst_residual=float(resid[k]),
        worst_time=float(tc[k]),
        violations=int(np.count_nonzero(bad)),
        checked=checked,
        first_violation_time=first,
    )


def energy_monotonicity_violations(samples: Sequence[LyapunovSample], t0: float = -np.inf,
                                   rel: float = 1e-8) -> int:
    """Count consecutive sample pairs after ``t0`` where ``E`` grows by more than ``rel``."""
    t, E, _ = _as_arrays(samples)
    keep = t >= t0
    E = E[keep]
    if E.size < 2:
        return 0
    return int(np.count_nonzero(E[1:] > E[:-1] * (1.0 + rel)))


def quadratic_sandwich_violations(samples: Sequence[LyapunovSample], params: ModelParams,
                                  eq: Optional[Equilibrium] = None, rtol: float = 1e-10) -> int:
    """Check the two-sided comparison of ``E`` with the squared L2 distance.

    Applies only in the coexistence regime and only to samples whose
    densities lie within ``[N/2, 3N/2]`` pointwise. There the energy obeys
    ``(2/9) min(1/N1, k/N2) D <= E <= theta D + wc ||c||^2`` with
    ``D = ||n1 - N1||^2 + ||n2 - N2||^2``, ``k = a1 mu1/(a2 mu2)`` and
    ``theta = 2 max(1/N1, k/N2)``.
    """
    if eq is None:
        eq = equilibrium(params, Regime.COEXISTENCE)
    _, k, wc = energy_weights(params, Regime.COEXISTENCE, eq)
    lo = (2.0 / 9.0) * min(1.0 / eq.n1_star, k / eq.n2_star)
    theta = 2.0 * max(1.0 / eq.n1_star, k / eq.n2_star)
    bad = 0
    for s in samples:
        nm = s.norms
        if nm["n1_linf"] > eq.n1_star / 2 or nm["n2_linf"] > eq.n2_star / 2:
            continue
        D = nm["n1_l2sq"] + nm["n2_l2sq"]
        upper = theta * D + wc * nm["c_l2sq"]
        if s.E < lo * D * (1 - rtol) or s.E > upper * (1 + rtol) + 1e-300:
            bad += 1
    return bad
