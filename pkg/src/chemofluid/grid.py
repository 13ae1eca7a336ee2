"""Uniform rectangle with a staggered (MAC) layout and its discrete operators.

Scalar fields are plain ``(nx, ny)`` arrays of cell-centred values, indexed
``f[i, j]`` with ``i`` running along x. Velocities are :class:`VectorField`
pairs with the horizontal component on vertical faces, shape ``(nx+1, ny)``,
and the vertical component on horizontal faces, shape ``(nx, ny+1)``.

Scalars obey zero-flux walls (ghost cells reflect the first interior value).
Velocities obey no-slip: normal components vanish on wall faces and
tangential ghosts take the negated interior value.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft

from .errors import NumericError, ParameterError

MIN_CELLS = 4


@dataclass(frozen=True)
class DomainSpec:
    Lx: float = 1.0
    Ly: float = 1.0
    nx: int = 64
    ny: int = 64

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise ParameterError(f"side lengths must be positive, got Lx={self.Lx}, Ly={self.Ly}")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < MIN_CELLS:
                raise ParameterError(f"{name} must be an integer >= {MIN_CELLS}, got {n!r}")

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    @property
    def shape(self):
        return (self.nx, self.ny)

    def cell_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def u_faces(self):
        x = np.arange(self.nx + 1) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def v_faces(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    # Eigenvalues of the 1-D second-difference operators (negated, so >= 0).
    @cached_property
    def _neumann_eigs(self):
        kx = np.arange(self.nx)
        ky = np.arange(self.ny)
        lx = (2.0 / self.dx**2) * (1.0 - np.cos(np.pi * kx / self.nx))
        ly = (2.0 / self.dy**2) * (1.0 - np.cos(np.pi * ky / self.ny))
        return lx[:, None] + ly[None, :]

    @cached_property
    def _u_eigs(self):
        # x: Dirichlet at the wall faces (DST-I); y: reflected ghosts about the wall (DST-II)
        kx = np.arange(1, self.nx)
        ky = np.arange(1, self.ny + 1)
        lx = (2.0 / self.dx**2) * (1.0 - np.cos(np.pi * kx / self.nx))
        ly = (2.0 / self.dy**2) * (1.0 - np.cos(np.pi * ky / self.ny))
        return lx[:, None] + ly[None, :]

    @cached_property
    def _v_eigs(self):
        kx = np.arange(1, self.nx + 1)
        ky = np.arange(1, self.ny)
        lx = (2.0 / self.dx**2) * (1.0 - np.cos(np.pi * kx / self.nx))
        ly = (2.0 / self.dy**2) * (1.0 - np.cos(np.pi * ky / self.ny))
        return lx[:, None] + ly[None, :]


@dataclass
class VectorField:
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, dom: DomainSpec) -> "VectorField":
        return cls(np.zeros((dom.nx + 1, dom.ny)), np.zeros((dom.nx, dom.ny + 1)))

    def copy(self) -> "VectorField":
        return VectorField(self.u.copy(), self.v.copy())

    def enforce_no_slip(self):
        self.u[0, :] = 0.0
        self.u[-1, :] = 0.0
        self.v[:, 0] = 0.0
        self.v[:, -1] = 0.0
        return self

    def __add__(self, other):
        return VectorField(self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return VectorField(self.u - other.u, self.v - other.v)

    def scaled(self, s):
        return VectorField(s * self.u, s * self.v)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.u))), float(np.max(np.abs(self.v))))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))


def _check_shape(f, dom):
    if f.shape != dom.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {dom.shape}")


def _check_vel(vel, dom):
    if vel.u.shape != (dom.nx + 1, dom.ny) or vel.v.shape != (dom.nx, dom.ny + 1):
        raise ValueError(
            f"velocity shapes {vel.u.shape}, {vel.v.shape} do not match grid {dom.shape}"
        )


def laplacian_neumann(f: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """Five-point Laplacian with zero normal derivative at the walls."""
    _check_shape(f, dom)
    g = np.pad(f, 1, mode="edge")
    return (g[2:, 1:-1] - 2.0 * f + g[:-2, 1:-1]) / dom.dx**2 + (
        g[1:-1, 2:] - 2.0 * f + g[1:-1, :-2]
    ) / dom.dy**2


def gradient(p: np.ndarray, dom: DomainSpec) -> VectorField:
    """Face-centred gradient; wall faces carry zero (no normal flux)."""
    _check_shape(p, dom)
    out = VectorField.zeros(dom)
    out.u[1:-1, :] = (p[1:, :] - p[:-1, :]) / dom.dx
    out.v[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / dom.dy
    return out


def divergence(vel: VectorField, dom: DomainSpec) -> np.ndarray:
    _check_vel(vel, dom)
    return (vel.u[1:, :] - vel.u[:-1, :]) / dom.dx + (vel.v[:, 1:] - vel.v[:, :-1]) / dom.dy


def upwind_flux_divergence(f: np.ndarray, wx: np.ndarray, wy: np.ndarray,
                           dom: DomainSpec) -> np.ndarray:
    """Divergence of the flux ``f * w`` with donor-cell face values.

    ``wx`` and ``wy`` live on the x- and y-faces; whatever they hold on the
    wall faces is ignored, so the walls never pass flux.
    """
    fx = np.zeros((dom.nx + 1, dom.ny))
    w = wx[1:-1, :]
    fx[1:-1, :] = np.where(w > 0, w * f[:-1, :], w * f[1:, :])
    fy = np.zeros((dom.nx, dom.ny + 1))
    w = wy[:, 1:-1]
    fy[:, 1:-1] = np.where(w > 0, w * f[:, :-1], w * f[:, 1:])
    return (fx[1:, :] - fx[:-1, :]) / dom.dx + (fy[:, 1:] - fy[:, :-1]) / dom.dy


def central_flux_divergence(f, wx, wy, dom):
    fx = np.zeros((dom.nx + 1, dom.ny))
    fx[1:-1, :] = wx[1:-1, :] * 0.5 * (f[:-1, :] + f[1:, :])
    fy = np.zeros((dom.nx, dom.ny + 1))
    fy[:, 1:-1] = wy[:, 1:-1] * 0.5 * (f[:, :-1] + f[:, 1:])
    return (fx[1:, :] - fx[:-1, :]) / dom.dx + (fy[:, 1:] - fy[:, :-1]) / dom.dy


def chemotaxis_divergence(n: np.ndarray, c: np.ndarray, chi: float, dom: DomainSpec,
                          upwind: bool = True) -> np.ndarray:
    """Return ``div(chi * n * grad c)`` in conservative flux form.

    With ``upwind=True`` the face density is taken from the cell the drift
    ``chi * grad c`` comes from; otherwise the two neighbours are averaged.
    Either way the walls carry no flux, so the area-weighted sum vanishes.
    """
    _check_shape(n, dom)
    drift = gradient(c, dom).scaled(chi)
    if upwind:
        return upwind_flux_divergence(n, drift.u, drift.v, dom)
    return central_flux_divergence(n, drift.u, drift.v, dom)


def advect_scalar(f: np.ndarray, vel: VectorField, dom: DomainSpec) -> np.ndarray:
    """Transport term ``u . grad f`` for a divergence-free MAC velocity.

    Evaluated as the donor-cell divergence of ``f u``, which coincides with
    ``u . grad f`` whenever the discrete divergence of ``vel`` vanishes and
    keeps the scheme conservative.
    """
    _check_shape(f, dom)
    _check_vel(vel, dom)
    return upwind_flux_divergence(f, vel.u, vel.v, dom)


def helmholtz_neumann_solve(rhs: np.ndarray, dom: DomainSpec, coef: float) -> np.ndarray:
    """Solve ``(I - coef * Lap_N) f = rhs`` with the cosine transform."""
    _check_shape(rhs, dom)
    hat = fft.dctn(rhs, type=2, norm="ortho")
    hat /= 1.0 + coef * dom._neumann_eigs
    return fft.idctn(hat, type=2, norm="ortho")


class CompatibilityWarning(UserWarning):
    """Poisson right-hand side had a non-negligible mean, which was removed."""


def poisson_neumann_solve(rhs: np.ndarray, dom: DomainSpec, tol: float = 1e-12) -> np.ndarray:
    """Zero-mean solution of ``Lap_N p = rhs - mean(rhs)``.

    A mean larger than ``tol`` (relative to ``max|rhs|``) violates the
    Neumann compatibility condition; it is subtracted and a
    :class:`CompatibilityWarning` is issued.
    """
    _check_shape(rhs, dom)
    if not np.all(np.isfinite(rhs)):
        raise NumericError("non-finite right-hand side in Poisson solve")
    mean = float(np.mean(rhs))
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    if abs(mean) > tol * max(scale, 1.0):
        warnings.warn(f"removed mean {mean:.3e} from Poisson right-hand side",
                      CompatibilityWarning, stacklevel=2)
    hat = fft.dctn(rhs, type=2, norm="ortho")
    eig = dom._neumann_eigs.copy()
    eig[0, 0] = 1.0
    hat = -hat / eig
    hat[0, 0] = 0.0
    return fft.idctn(hat, type=2, norm="ortho")


def velocity_laplacian(vel: VectorField, dom: DomainSpec) -> VectorField:
    """Component-wise Laplacian under no-slip; wall faces return zero."""
    _check_vel(vel, dom)
    out = VectorField.zeros(dom)
    u = vel.u
    uy = np.concatenate([-u[:, :1], u, -u[:, -1:]], axis=1)
    out.u[1:-1, :] = (u[2:, :] - 2 * u[1:-1, :] + u[:-2, :]) / dom.dx**2 + (
        uy[1:-1, 2:] - 2 * uy[1:-1, 1:-1] + uy[1:-1, :-2]
    ) / dom.dy**2
    v = vel.v
    vx = np.concatenate([-v[:1, :], v, -v[-1:, :]], axis=0)
    out.v[:, 1:-1] = (vx[2:, 1:-1] - 2 * vx[1:-1, 1:-1] + vx[:-2, 1:-1]) / dom.dx**2 + (
        v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]
    ) / dom.dy**2
    return out


def helmholtz_velocity_solve(rhs: VectorField, dom: DomainSpec, coef: float) -> VectorField:
    """Solve ``(I - coef * Lap) u = rhs`` for both components under no-slip."""
    _check_vel(rhs, dom)
    out = VectorField.zeros(dom)
    hat = fft.dst(fft.dst(rhs.u[1:-1, :], type=1, axis=0, norm="ortho"),
                  type=2, axis=1, norm="ortho")
    hat /= 1.0 + coef * dom._u_eigs
    out.u[1:-1, :] = fft.idst(fft.idst(hat, type=2, axis=1, norm="ortho"),
                              type=1, axis=0, norm="ortho")
    hat = fft.dst(fft.dst(rhs.v[:, 1:-1], type=2, axis=0, norm="ortho"),
                  type=1, axis=1, norm="ortho")
    hat /= 1.0 + coef * dom._v_eigs
    out.v[:, 1:-1] = fft.idst(fft.idst(hat, type=1, axis=1, norm="ortho"),
                              type=2, axis=0, norm="ortho")
    return out


def _upwind_diff(q, qm, qp, w, h):
    return np.where(w > 0, (q - qm) / h, (qp - q) / h)


def velocity_convection(vel: VectorField, dom: DomainSpec) -> VectorField:
    """Upwind ``(u . grad) u`` on the faces; wall faces return zero."""
    _check_vel(vel, dom)
    u, v = vel.u, vel.v
    out = VectorField.zeros(dom)

    ui = u[1:-1, :]
    v_at_u = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
    uy = np.concatenate([-u[:, :1], u, -u[:, -1:]], axis=1)[1:-1, :]
    out.u[1:-1, :] = ui * _upwind_diff(ui, u[:-2, :], u[2:, :], ui, dom.dx) + v_at_u * _upwind_diff(
        ui, uy[:, :-2], uy[:, 2:], v_at_u, dom.dy
    )

    vi = v[:, 1:-1]
    u_at_v = 0.25 * (u[:-1, :-1] + u[1:, :-1] + u[:-1, 1:] + u[1:, 1:])
    vx = np.concatenate([-v[:1, :], v, -v[-1:, :]], axis=0)[:, 1:-1]
    out.v[:, 1:-1] = u_at_v * _upwind_diff(vi, vx[:-2, :], vx[2:, :], u_at_v, dom.dx) + vi * _upwind_diff(
        vi, v[:, :-2], v[:, 2:], vi, dom.dy
    )
    return out


def face_average(f: np.ndarray, dom: DomainSpec) -> VectorField:
    """Arithmetic mean of a cell field onto interior faces (walls get zero)."""
    out = VectorField.zeros(dom)
    out.u[1:-1, :] = 0.5 * (f[:-1, :] + f[1:, :])
    out.v[:, 1:-1] = 0.5 * (f[:, :-1] + f[:, 1:])
    return out


def cell_velocity(vel: VectorField):
    """Velocity components averaged to the cell centres."""
    return 0.5 * (vel.u[:-1, :] + vel.u[1:, :]), 0.5 * (vel.v[:, :-1] + vel.v[:, 1:])
