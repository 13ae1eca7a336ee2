"""IMEX time stepping for the coupled two-species chemotaxis-fluid system.

Each step treats diffusion and viscosity implicitly (transform solves) and
everything else explicitly: donor-cell transport of the densities by the
combined drift ``u + chi * grad c``, transport of the signal by ``u``,
Lotka-Volterra kinetics, consumption, optional velocity convection and the
buoyancy force. A Chorin projection then restores discrete incompressibility.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BlowUpError, ParameterError, StepRejectedError, UnsupportedRegimeError
from .grid import (
    DomainSpec,
    VectorField,
    advect_scalar,
    divergence,
    face_average,
    gradient,
    helmholtz_neumann_solve,
    helmholtz_velocity_solve,
    poisson_neumann_solve,
    upwind_flux_divergence,
    velocity_convection,
)
from .model import ModelParams, PotentialSpec, Regime, classify_regime, equilibrium

log = logging.getLogger(__name__)


@dataclass
class State:
    t: float
    n1: np.ndarray
    n2: np.ndarray
    c: np.ndarray
    vel: VectorField
    pressure: np.ndarray
    domain: DomainSpec

    def copy(self) -> "State":
        return State(self.t, self.n1.copy(), self.n2.copy(), self.c.copy(), self.vel.copy(),
                     self.pressure.copy(), self.domain)


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping options.

    ``dt`` is the largest step the integrator may take; :func:`run` uses
    ``min(dt, stable_dt(state))`` at every step.
    """

    dt: float = 0.01
    t_end: float = 60.0
    cfl_safety: float = 0.2
    positivity_floor: float = 1e-14
    record_every: int = 5

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError(f"dt must be > 0, got {self.dt!r}")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ParameterError(f"t_end must be >= 0, got {self.t_end!r}")
        if not (0 < self.cfl_safety <= 1):
            raise ParameterError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety!r}")
        if not (self.positivity_floor > 0):
            raise ParameterError("positivity_floor must be > 0")
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            raise ParameterError(f"record_every must be a positive integer, got {self.record_every!r}")


@dataclass
class StepStats:
    """Counters accumulated across steps by :func:`step`."""

    steps: int = 0
    floor_activations: int = 0
    floor_by_field: dict = field(default_factory=lambda: {"n1": 0, "n2": 0, "c": 0})


def kinetics(n1, n2, params: ModelParams):
    """Lotka-Volterra competition terms for the two species."""
    return (params.mu1 * n1 * (1.0 - n1 - params.a1 * n2),
            params.mu2 * n2 * (1.0 - params.a2 * n1 - n2))


def consumption(c, n1, n2, params: ModelParams):
    """Signal sink ``-(alpha n1 + beta n2) c``; nonpositive for nonnegative inputs."""
    return -(params.alpha * n1 + params.beta * n2) * c


@functools.lru_cache(maxsize=32)
def _grad_phi_faces(dom: DomainSpec, phi: PotentialSpec):
    xu, yu = dom.u_faces()
    xv, yv = dom.v_faces()
    gxu, _ = phi.gradient(xu, yu, dom.Lx, dom.Ly)
    _, gyv = phi.gradient(xv, yv, dom.Lx, dom.Ly)
    gxu[0, :] = gxu[-1, :] = 0.0
    gyv[:, 0] = gyv[:, -1] = 0.0
    return gxu, gyv


def buoyancy(n1, n2, params: ModelParams, dom: DomainSpec) -> VectorField:
    """Face-centred ``(gamma n1 + delta n2) grad phi`` with the mean density removed.

    A constant density times ``grad phi`` is itself a gradient, so dropping
    the mean only shifts the pressure; it makes the uniform equilibrium an
    exact fixed point of the velocity update.
    """
    rho = params.gamma * n1 + params.delta * n2
    rho = rho - np.mean(rho)
    faces = face_average(rho, dom)
    gxu, gyv = _grad_phi_faces(dom, params.phi)
    return VectorField(faces.u * gxu, faces.v * gyv)


def _drift_bounds(state: State, params: ModelParams):
    dom = state.domain
    gc = gradient(state.c, dom)
    wx = max(float(np.max(np.abs(state.vel.u + chi * gc.u))) for chi in (params.chi1, params.chi2))
    wy = max(float(np.max(np.abs(state.vel.v + chi * gc.v))) for chi in (params.chi1, params.chi2))
    return wx, wy


def stable_dt(state: State, params: ModelParams, cfg: SolverConfig) -> float:
    """Largest admissible explicit step.

    ``cfl_safety`` times the smaller of the advective limit
    ``min(dx / max|w_x|, dy / max|w_y|)`` for the drifts ``w = u + chi grad c``
    and the reaction limit ``1 / (max(mu) (1 + max n))``. Diffusion is
    implicit and imposes nothing.
    """
    dom = state.domain
    wx, wy = _drift_bounds(state, params)
    adv = math.inf
    if wx > 0:
        adv = min(adv, dom.dx / wx)
    if wy > 0:
        adv = min(adv, dom.dy / wy)
    nmax = max(float(np.max(state.n1)), float(np.max(state.n2)))
    react = 1.0 / (max(params.mu1, params.mu2) * (1.0 + nmax))
    return cfg.cfl_safety * min(adv, react)


def _apply_floor(arr, floor, name, stats):
    bad = arr < 0.0
    k = int(np.count_nonzero(bad))
    if k:
        arr[bad] = floor
        if stats is not None:
            stats.floor_activations += k
            stats.floor_by_field[name] += k
    return arr


def step(state: State, params: ModelParams, cfg: SolverConfig, dt: Optional[float] = None,
         stats: Optional[StepStats] = None) -> State:
    """Advance ``state`` by one IMEX step of size ``dt`` (default ``cfg.dt``)."""
    dt = cfg.dt if dt is None else dt
    for name in ("n1", "n2", "c"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise BlowUpError(name, state.t)
    if not state.vel.is_finite():
        raise BlowUpError("vel", state.t)
    limit = stable_dt(state, params, cfg)
    if dt > limit * (1.0 + 1e-12):
        raise StepRejectedError(f"dt={dt:.6g} exceeds stable_dt={limit:.6g} at t={state.t:.6g}")
    dom = state.domain
    n1, n2, c, vel = state.n1, state.n2, state.c, state.vel
    t_new = state.t + dt

    gc = gradient(c, dom)
    k1, k2 = kinetics(n1, n2, params)
    w1 = vel + gc.scaled(params.chi1)
    w2 = vel + gc.scaled(params.chi2)
    rhs1 = n1 + dt * (k1 - upwind_flux_divergence(n1, w1.u, w1.v, dom))
    rhs2 = n2 + dt * (k2 - upwind_flux_divergence(n2, w2.u, w2.v, dom))
    rhsc = c + dt * (consumption(c, n1, n2, params) - advect_scalar(c, vel, dom))

    new = {}
    for name, rhs in (("n1", rhs1), ("n2", rhs2), ("c", rhsc)):
        f = helmholtz_neumann_solve(rhs, dom, dt)
        if not np.all(np.isfinite(f)):
            raise BlowUpError(name, t_new)
        new[name] = _apply_floor(f, cfg.positivity_floor, name, stats)

    force = buoyancy(n1, n2, params, dom)
    if params.convective:
        force = force - velocity_convection(vel, dom)
    ustar = (vel + force.scaled(dt)).enforce_no_slip()
    ustar = helmholtz_velocity_solve(ustar, dom, dt)
    p = poisson_neumann_solve(divergence(ustar, dom) / dt, dom)
    u_new = (ustar - gradient(p, dom).scaled(dt)).enforce_no_slip()
    if not u_new.is_finite():
        raise BlowUpError("vel", t_new)
    # u_t = Lap u + grad P, so the correction -dt grad p corresponds to P = -p
    pressure = -p
    if not np.all(np.isfinite(pressure)):
        raise BlowUpError("pressure", t_new)

    if stats is not None:
        stats.steps += 1
    return State(t_new, new["n1"], new["n2"], new["c"], u_new, pressure, dom)


def default_initial_state(params: ModelParams, dom: DomainSpec, regime: Optional[Regime] = None,
                          amplitude: float = 0.2, extinct_level: float = 0.2,
                          clip: float = 0.01, c_level: float = 0.5,
                          c_amplitude: float = 0.5) -> State:
    """Equilibrium plus a smooth positive perturbation.

    ``n_i = N_i (1 + amplitude cos(pi x/Lx) cos(pi y/Ly))`` clipped from
    below at ``clip``; a species whose equilibrium value is zero starts from
    ``extinct_level`` in place of ``N_i``. The signal starts at
    ``c_level (1 + c_amplitude cos(pi x/Lx))`` and the fluid at rest.
    """
    if regime is None:
        regime = classify_regime(params.a1, params.a2)
    eq = equilibrium(params, regime)
    x, y = dom.cell_centers()
    shape = np.cos(np.pi * x / dom.Lx) * np.cos(np.pi * y / dom.Ly)
    dens = []
    for level in eq.as_tuple():
        base = level if level > 0 else extinct_level
        dens.append(np.maximum(base * (1.0 + amplitude * shape), clip))
    c = c_level * (1.0 + c_amplitude * np.cos(np.pi * x / dom.Lx))
    return State(0.0, dens[0], dens[1], c, VectorField.zeros(dom), np.zeros(dom.shape), dom)


def equilibrium_state(params: ModelParams, dom: DomainSpec,
                      regime: Optional[Regime] = None) -> State:
    eq = equilibrium(params, regime)
    return State(0.0, np.full(dom.shape, eq.n1_star), np.full(dom.shape, eq.n2_star),
                 np.zeros(dom.shape), VectorField.zeros(dom), np.zeros(dom.shape), dom)


def _sample(state, params, regime, eq, cfg, log_hits):
    from .functionals import lyapunov

    s = lyapunov(state, params, regime, eq, floor=cfg.positivity_floor)
    log_hits[0] += s.log_floor_hits
    dom = state.domain
    s.diagnostics.update(
        min_n1=float(np.min(state.n1)),
        min_n2=float(np.min(state.n2)),
        min_c=float(np.min(state.c)),
        max_div=float(np.max(np.abs(divergence(state.vel, dom)))),
        mass_n1=float(np.sum(state.n1) * dom.cell_area),
        mass_n2=float(np.sum(state.n2) * dom.cell_area),
    )
    return s


def run(initial: State, params: ModelParams, cfg: SolverConfig,
        regime: Optional[Regime] = None, progress: bool = False):
    """Integrate from ``initial`` to ``cfg.t_end`` and record diagnostics.

    A :class:`~chemofluid.functionals.LyapunovSample` is taken at the start,
    every ``cfg.record_every`` steps and at the final time. Besides the
    samples, the returned :class:`~chemofluid.rates.TimeSeries` carries the
    invariant counters checked along the way (positivity floor, discrete
    divergence, monotone signal maximum, mass balance).

    Raises
    ------
    BlowUpError
        With ``series`` set to the diagnostics gathered up to the last
        valid time.
    """
    from .rates import TimeSeries

    if regime is None:
        regime = classify_regime(params.a1, params.a2)
    regime = Regime(regime)
    if regime is Regime.UNSUPPORTED:
        raise UnsupportedRegimeError(f"a1={params.a1}, a2={params.a2} is not covered")
    eq = equilibrium(params, regime)
    dom = initial.domain
    stats = StepStats()
    log_hits = [0]
    diag = {
        "floor_activations": 0,
        "log_floor_activations": 0,
        "div_violations": 0,
        "positivity_violations": 0,
        "cmax_violations": 0,
        "mass_violations": 0,
        "max_div_times_dx": 0.0,
        "max_mass_residual": 0.0,
        "max_cmax_increase": 0.0,
        "steps": 0,
        "dt_min": None,
        "dt_max": None,
    }
    positive = {
        "n1": bool(np.min(initial.n1) > 0),
        "n2": bool(np.min(initial.n2) > 0),
    }
    series = TimeSeries(samples=[], params=params, regime=regime, domain=dom, config=cfg,
                        equilibrium=eq, diagnostics=diag)

    def record(st):
        s = _sample(st, params, regime, eq, cfg, log_hits)
        series.samples.append(s)
        d = s.diagnostics
        diag["max_div_times_dx"] = max(diag["max_div_times_dx"], d["max_div"] * min(dom.dx, dom.dy))
        if d["max_div"] > 1e-9 / min(dom.dx, dom.dy):
            diag["div_violations"] += 1
        if (positive["n1"] and d["min_n1"] <= 0) or (positive["n2"] and d["min_n2"] <= 0) or d["min_c"] < 0:
            diag["positivity_violations"] += 1

    state = initial
    record(state)
    t_end = cfg.t_end
    nsteps = 0
    next_report = 0.1 * t_end
    while state.t < t_end * (1.0 - 1e-13):
        dt = min(cfg.dt, stable_dt(state, params, cfg), t_end - state.t)
        try:
            new = step(state, params, cfg, dt=dt, stats=stats)
        except BlowUpError as exc:
            diag["floor_activations"] = stats.floor_activations
            diag["log_floor_activations"] = log_hits[0]
            diag["steps"] = nsteps
            diag["blowup"] = {"field": exc.field, "t": exc.t, "last_valid_t": state.t}
            exc.series = series
            raise
        nsteps += 1
        diag["dt_min"] = dt if diag["dt_min"] is None else min(diag["dt_min"], dt)
        diag["dt_max"] = dt if diag["dt_max"] is None else max(diag["dt_max"], dt)

        cmax_old = float(np.max(state.c))
        cmax_new = float(np.max(new.c))
        increase = cmax_new - cmax_old
        if cmax_old > 0:
            diag["max_cmax_increase"] = max(diag["max_cmax_increase"], increase / cmax_old)
        if increase > 1e-12 * cmax_old:
            diag["cmax_violations"] += 1

        # conservative transport: only the kinetics change the total mass
        area = dom.cell_area
        k1, k2 = kinetics(state.n1, state.n2, params)
        for old, newf, k in ((state.n1, new.n1, k1), (state.n2, new.n2, k2)):
            rate = float(np.sum(k)) * area
            res = (float(np.sum(newf)) - float(np.sum(old))) * area / dt - rate
            diag["max_mass_residual"] = max(diag["max_mass_residual"], abs(res))
            if abs(res) > dt * max(1.0, abs(rate)):
                diag["mass_violations"] += 1

        state = new
        if nsteps % cfg.record_every == 0 or state.t >= t_end * (1.0 - 1e-13):
            record(state)
        if progress and state.t >= next_report:
            log.info("t=%.3f steps=%d dt=%.3g", state.t, nsteps, dt)
            next_report += 0.1 * t_end

    diag["floor_activations"] = stats.floor_activations
    diag["log_floor_activations"] = log_hits[0]
    diag["steps"] = nsteps
    series.final_state = state
    return series

