"""Model coefficients, regime classification, equilibria and closed-form rates."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError, UnsupportedRegimeError


@dataclass(frozen=True)
class PotentialSpec:
    """Gravitational potential driving the buoyancy force.

    ``kind="linear"`` gives ``phi = gx*x + gy*y``; ``kind="cosine"`` gives
    ``phi = amplitude * cos(kx*pi*x/Lx) * cos(ky*pi*y/Ly)``.
    """

    kind: str = "linear"
    gx: float = 0.0
    gy: float = -1.0
    amplitude: float = 1.0
    kx: float = 1.0
    ky: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "cosine"):
            raise ParameterError(f"phi.kind must be 'linear' or 'cosine', got {self.kind!r}")

    def gradient(self, x, y, Lx=1.0, Ly=1.0):
        """Return ``(dphi/dx, dphi/dy)`` evaluated at the points ``(x, y)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "linear":
            shape = np.broadcast(x, y).shape
            return np.full(shape, float(self.gx)), np.full(shape, float(self.gy))
        ax = self.kx * math.pi / Lx
        ay = self.ky * math.pi / Ly
        gx = -self.amplitude * ax * np.sin(ax * x) * np.cos(ay * y)
        gy = -self.amplitude * ay * np.cos(ax * x) * np.sin(ay * y)
        return gx, gy


@dataclass(frozen=True)
class ModelParams:
    a1: float
    a2: float
    chi1: float = 0.5
    chi2: float = 0.5
    mu1: float = 1.0
    mu2: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    convective: int = 1
    phi: PotentialSpec = field(default_factory=PotentialSpec)

    def __post_init__(self):
        for name in ("mu1", "mu2", "alpha", "beta", "gamma", "delta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be > 0, got {v!r}")
        for name in ("chi1", "chi2", "a1", "a2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be >= 0, got {v!r}")
        if self.convective not in (0, 1):
            raise ParameterError(f"convective must be 0 or 1, got {self.convective!r}")

    def swapped(self) -> "ModelParams":
        """Exchange the roles of the two species."""
        return ModelParams(
            a1=self.a2, a2=self.a1, chi1=self.chi2, chi2=self.chi1,
            mu1=self.mu2, mu2=self.mu1, alpha=self.beta, beta=self.alpha,
            gamma=self.delta, delta=self.gamma, convective=self.convective,
            phi=self.phi,
        )

    def to_dict(self) -> dict:
        return asdict(self)


class Regime(str, enum.Enum):
    COEXISTENCE = "CoexistenceI"
    EXCLUSION_II = "ExclusionII"
    EXCLUSION_III = "ExclusionIII"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class Equilibrium:
    n1_star: float
    n2_star: float

    def as_tuple(self):
        return (self.n1_star, self.n2_star)


def classify_regime(a1: float, a2: float) -> Regime:
    """Map the competition coefficients onto the convergence case they belong to.

    Zero coefficients and the doubly strong competition ``a1 >= 1, a2 >= 1``
    are not covered by any case and come back as ``Regime.UNSUPPORTED``.
    """
    if not (a1 >= 0 and a2 >= 0):
        raise ParameterError(f"competition coefficients must be >= 0, got a1={a1!r}, a2={a2!r}")
    if a1 == 0 or a2 == 0:
        return Regime.UNSUPPORTED
    if a1 < 1 and a2 < 1:
        return Regime.COEXISTENCE
    if a1 >= 1 > a2:
        return Regime.EXCLUSION_II
    if a2 >= 1 > a1:
        return Regime.EXCLUSION_III
    return Regime.UNSUPPORTED


def _require_supported(regime: Regime):
    if regime is Regime.UNSUPPORTED:
        raise UnsupportedRegimeError(
            "a1 >= 1 and a2 >= 1 (or a zero competition coefficient) is not covered"
        )


def equilibrium(params: ModelParams, regime: Optional[Regime] = None) -> Equilibrium:
    if regime is None:
        regime = classify_regime(params.a1, params.a2)
    regime = Regime(regime)
    _require_supported(regime)
    if regime is Regime.COEXISTENCE:
        det = 1.0 - params.a1 * params.a2
        return Equilibrium((1.0 - params.a1) / det, (1.0 - params.a2) / det)
    if regime is Regime.EXCLUSION_II:
        return Equilibrium(0.0, 1.0)
    return Equilibrium(1.0, 0.0)


def dirichlet_eigenvalue(*sides: float) -> float:
    """First eigenvalue of -Laplacian with zero Dirichlet data on a box."""
    if not sides or any(not (s > 0) for s in sides):
        raise ParameterError(f"box sides must be positive, got {sides!r}")
    return math.pi**2 * sum(1.0 / s**2 for s in sides)


@dataclass(frozen=True)
class RateConstants:
    """Explicit decay rates for one parameter set.

    Fields that belong to another regime stay ``None``. ``predicted_n_rate``
    is the pair of L-infinity rates (species 1, species 2); in the exclusion
    cases these are algebraic exponents, in the coexistence case exponential
    rates, as recorded in ``decay_kind``.
    """

    regime: Regime
    equilibrium: Equilibrium
    lambda_P: float
    c_rate: float
    d: int
    eps: float
    decay_kind: str
    predicted_n_rate: tuple
    predicted_u_rate: float
    kappa_rate: Optional[float] = None
    tau: Optional[float] = None
    theta: Optional[float] = None
    sigma: Optional[float] = None
    rho: Optional[float] = None

    @property
    def dissipation_rate(self) -> float:
        return {
            Regime.COEXISTENCE: self.tau,
            Regime.EXCLUSION_II: self.sigma,
            Regime.EXCLUSION_III: self.rho,
        }[self.regime]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["regime"] = self.regime.value
        out["predicted_n_rate"] = list(self.predicted_n_rate)
        return out


def rate_constants(params: ModelParams, regime: Optional[Regime] = None, domain=None,
                   d: int = 2, eps: float = 0.9) -> RateConstants:
    """Evaluate every closed-form rate that applies in ``regime``.

    Parameters
    ----------
    domain : object with ``Lx``, ``Ly`` (and optionally ``Lz``) side lengths
        Rectangle whose first Dirichlet eigenvalue stands in for the
        Poincare constant. Defaults to the unit square.
    d : int
        Space dimension entering the interpolation exponents.
    eps : float
        Interpolation slack in (0, 1) for the velocity L-infinity rate.
    """
    if regime is None:
        regime = classify_regime(params.a1, params.a2)
    regime = Regime(regime)
    _require_supported(regime)
    if not (0 < eps < 1):
        raise ParameterError(f"eps must lie in (0, 1), got {eps!r}")
    if d not in (2, 3):
        raise ParameterError(f"d must be 2 or 3, got {d!r}")

    if domain is None:
        sides = (1.0, 1.0)
    else:
        sides = (domain.Lx, domain.Ly) + ((domain.Lz,) if hasattr(domain, "Lz") else ())
    lam = dirichlet_eigenvalue(*sides)
    eq = equilibrium(params, regime)
    n1s, n2s = eq.n1_star, eq.n2_star
    c_rate = (params.alpha * n1s + params.beta * n2s) / 2.0
    a1, a2, mu1, mu2 = params.a1, params.a2, params.mu1, params.mu2

    if regime is Regime.COEXISTENCE:
        tau = (1 - a1 * a2) * mu1 * min(0.5, a1 / ((1 + a1 * a2) * a2))
        denom = max(1.0 / n1s, a1 * mu1 / (a2 * mu2 * n2s))
        kappa = 0.5 * min(tau / denom, params.alpha * n1s + params.beta * n2s)
        return RateConstants(
            regime=regime, equilibrium=eq, lambda_P=lam, c_rate=c_rate, d=d, eps=eps,
            decay_kind="exponential",
            predicted_n_rate=(kappa / (d + 2), kappa / (d + 2)),
            predicted_u_rate=eps / (d + 2) * min(lam, kappa / 2),
            kappa_rate=kappa, tau=tau, theta=2.0 * denom,
        )
    if regime is Regime.EXCLUSION_II:
        sigma = (1 - a2) * mu1 * min(1.0 / (2 * a2), 1.0 / (1 + a2))
        return RateConstants(
            regime=regime, equilibrium=eq, lambda_P=lam, c_rate=c_rate, d=d, eps=eps,
            decay_kind="algebraic",
            predicted_n_rate=(1.0 / (d + 1), 1.0 / (d + 2)),
            predicted_u_rate=eps / (d + 2), sigma=sigma,
        )
    rho = (1 - a1) * mu1 * min(0.5, a1 / (1 + a1))
    return RateConstants(
        regime=regime, equilibrium=eq, lambda_P=lam, c_rate=c_rate, d=d, eps=eps,
        decay_kind="algebraic",
        predicted_n_rate=(1.0 / (d + 2), 1.0 / (d + 1)),
        predicted_u_rate=eps / (d + 2), rho=rho,
    )
