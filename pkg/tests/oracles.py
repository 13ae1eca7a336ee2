"""Brute-force reference implementations used as test oracles.

Everything here is assembled cell by cell (or face by face) with explicit
loops and dense matrices. Nothing is imported from the package apart from
plain parameter containers, so agreement with the fast operators is a real
cross-check.
"""
import math

import numpy as np


class Grid:
    def __init__(self, nx, ny, Lx=1.0, Ly=1.0):
        self.nx, self.ny, self.Lx, self.Ly = nx, ny, Lx, Ly
        self.dx, self.dy = Lx / nx, Ly / ny

    # flat index maps
    def c(self, i, j):
        return i * self.ny + j

    @property
    def ncell(self):
        return self.nx * self.ny


def neumann_laplacian_matrix(g: Grid):
    """Five-point stencil; a missing neighbour (wall) contributes nothing."""
    A = np.zeros((g.ncell, g.ncell))
    for i in range(g.nx):
        for j in range(g.ny):
            r = g.c(i, j)
            for di, dj, h in ((1, 0, g.dx), (-1, 0, g.dx), (0, 1, g.dy), (0, -1, g.dy)):
                ii, jj = i + di, j + dj
                if 0 <= ii < g.nx and 0 <= jj < g.ny:
                    A[r, g.c(ii, jj)] += 1.0 / h**2
                    A[r, r] -= 1.0 / h**2
    return A


def face_gradient(g: Grid, p):
    """Interior-face differences of a cell field; wall faces zero."""
    gu = np.zeros((g.nx + 1, g.ny))
    gv = np.zeros((g.nx, g.ny + 1))
    for i in range(1, g.nx):
        for j in range(g.ny):
            gu[i, j] = (p[i, j] - p[i - 1, j]) / g.dx
    for i in range(g.nx):
        for j in range(1, g.ny):
            gv[i, j] = (p[i, j] - p[i, j - 1]) / g.dy
    return gu, gv


def face_divergence(g: Grid, u, v):
    out = np.zeros((g.nx, g.ny))
    for i in range(g.nx):
        for j in range(g.ny):
            out[i, j] = (u[i + 1, j] - u[i, j]) / g.dx + (v[i, j + 1] - v[i, j]) / g.dy
    return out


def donor_cell_matrix(g: Grid, wu, wv):
    """Matrix of ``f -> div(f w)`` with upwind face values; walls carry no flux."""
    A = np.zeros((g.ncell, g.ncell))
    for i in range(1, g.nx):  # x-face between (i-1, j) and (i, j)
        for j in range(g.ny):
            w = wu[i, j]
            src = g.c(i - 1, j) if w > 0 else g.c(i, j)
            A[g.c(i, j), src] -= w / g.dx   # flux leaves through the left face of cell i
            A[g.c(i - 1, j), src] += w / g.dx
    for i in range(g.nx):
        for j in range(1, g.ny):
            w = wv[i, j]
            src = g.c(i, j - 1) if w > 0 else g.c(i, j)
            A[g.c(i, j), src] -= w / g.dy
            A[g.c(i, j - 1), src] += w / g.dy
    return A


def central_flux_matrix(g: Grid, wu, wv):
    A = np.zeros((g.ncell, g.ncell))
    for i in range(1, g.nx):
        for j in range(g.ny):
            w = wu[i, j] / (2 * g.dx)
            for src in (g.c(i - 1, j), g.c(i, j)):
                A[g.c(i, j), src] -= w
                A[g.c(i - 1, j), src] += w
    for i in range(g.nx):
        for j in range(1, g.ny):
            w = wv[i, j] / (2 * g.dy)
            for src in (g.c(i, j - 1), g.c(i, j)):
                A[g.c(i, j), src] -= w
                A[g.c(i, j - 1), src] += w
    return A


def apply(A, f):
    return (A @ f.ravel()).reshape(f.shape)


def u_laplacian_matrix(g: Grid):
    """Laplacian on the interior x-faces under no-slip.

    Unknowns are faces ``i = 1..nx-1``; wall faces are zero and the ghost
    beyond the top/bottom wall is the negated interior value.
    """
    m, n = g.nx - 1, g.ny
    idx = lambda i, j: (i - 1) * n + j
    A = np.zeros((m * n, m * n))
    for i in range(1, g.nx):
        for j in range(n):
            r = idx(i, j)
            A[r, r] -= 2 / g.dx**2
            for ii in (i - 1, i + 1):
                if 1 <= ii <= g.nx - 1:
                    A[r, idx(ii, j)] += 1 / g.dx**2
            A[r, r] -= 2 / g.dy**2
            for jj in (j - 1, j + 1):
                if 0 <= jj < n:
                    A[r, idx(i, jj)] += 1 / g.dy**2
                else:
                    A[r, r] -= 1 / g.dy**2
    return A


def v_laplacian_matrix(g: Grid):
    m, n = g.nx, g.ny - 1
    idx = lambda i, j: i * n + (j - 1)
    A = np.zeros((m * n, m * n))
    for i in range(m):
        for j in range(1, g.ny):
            r = idx(i, j)
            A[r, r] -= 2 / g.dy**2
            for jj in (j - 1, j + 1):
                if 1 <= jj <= g.ny - 1:
                    A[r, idx(i, jj)] += 1 / g.dy**2
            A[r, r] -= 2 / g.dx**2
            for ii in (i - 1, i + 1):
                if 0 <= ii < m:
                    A[r, idx(ii, j)] += 1 / g.dx**2
                else:
                    A[r, r] -= 1 / g.dx**2
    return A


def convection(g: Grid, u, v):
    """Upwind ``(w . grad) w`` at interior faces, evaluated point by point."""
    cu = np.zeros_like(u)
    cv = np.zeros_like(v)

    def uval(i, j):
        if j < 0 or j >= g.ny:  # ghost row beyond a horizontal wall
            return -u[i, min(max(j, 0), g.ny - 1)]
        return u[i, j]

    def vval(i, j):
        if i < 0 or i >= g.nx:
            return -v[min(max(i, 0), g.nx - 1), j]
        return v[i, j]

    for i in range(1, g.nx):
        for j in range(g.ny):
            a = u[i, j]
            b = 0.25 * (v[i - 1, j] + v[i, j] + v[i - 1, j + 1] + v[i, j + 1])
            dudx = (a - u[i - 1, j]) / g.dx if a > 0 else (u[i + 1, j] - a) / g.dx
            dudy = (a - uval(i, j - 1)) / g.dy if b > 0 else (uval(i, j + 1) - a) / g.dy
            cu[i, j] = a * dudx + b * dudy
    for i in range(g.nx):
        for j in range(1, g.ny):
            b = v[i, j]
            a = 0.25 * (u[i, j - 1] + u[i + 1, j - 1] + u[i, j] + u[i + 1, j])
            dvdx = (b - vval(i - 1, j)) / g.dx if a > 0 else (vval(i + 1, j) - b) / g.dx
            dvdy = (b - v[i, j - 1]) / g.dy if b > 0 else (v[i, j + 1] - b) / g.dy
            cv[i, j] = a * dvdx + b * dvdy
    return cu, cv


def grad_phi_at_faces(g: Grid, phi):
    """Analytic gradient of the potential at interior face midpoints."""
    gu = np.zeros((g.nx + 1, g.ny))
    gv = np.zeros((g.nx, g.ny + 1))
    for i in range(1, g.nx):
        for j in range(g.ny):
            gu[i, j] = phi_grad(phi, i * g.dx, (j + 0.5) * g.dy, g)[0]
    for i in range(g.nx):
        for j in range(1, g.ny):
            gv[i, j] = phi_grad(phi, (i + 0.5) * g.dx, j * g.dy, g)[1]
    return gu, gv


def phi_grad(phi, x, y, g):
    if phi.kind == "linear":
        return phi.gx, phi.gy
    ax, ay = phi.kx * math.pi / g.Lx, phi.ky * math.pi / g.Ly
    return (-phi.amplitude * ax * math.sin(ax * x) * math.cos(ay * y),
            -phi.amplitude * ay * math.cos(ax * x) * math.sin(ay * y))


def reference_step(g: Grid, n1, n2, c, u, v, p, dt):
    """One IMEX step assembled from dense matrices.

    ``p`` is a plain parameter object. Returns ``(n1, n2, c, u, v, P)``.
    """
    N = g.ncell
    L = neumann_laplacian_matrix(g)
    H = np.eye(N) - dt * L
    gcu, gcv = face_gradient(g, c)

    def transport(f, chi):
        A = donor_cell_matrix(g, u + chi * gcu, v + chi * gcv)
        return apply(A, f)

    k1 = p.mu1 * n1 * (1 - n1 - p.a1 * n2)
    k2 = p.mu2 * n2 * (1 - p.a2 * n1 - n2)
    r1 = n1 + dt * (k1 - transport(n1, p.chi1))
    r2 = n2 + dt * (k2 - transport(n2, p.chi2))
    rc = c + dt * (-(p.alpha * n1 + p.beta * n2) * c - transport(c, 0.0))
    new = [np.linalg.solve(H, r.ravel()).reshape(g.nx, g.ny) for r in (r1, r2, rc)]

    rho = p.gamma * n1 + p.delta * n2
    rho = rho - rho.mean()
    gpu, gpv = grad_phi_at_faces(g, p.phi)
    fu = np.zeros_like(u)
    fv = np.zeros_like(v)
    for i in range(1, g.nx):
        for j in range(g.ny):
            fu[i, j] = 0.5 * (rho[i - 1, j] + rho[i, j]) * gpu[i, j]
    for i in range(g.nx):
        for j in range(1, g.ny):
            fv[i, j] = 0.5 * (rho[i, j - 1] + rho[i, j]) * gpv[i, j]
    if p.convective:
        cu, cv = convection(g, u, v)
        fu, fv = fu - cu, fv - cv
    us = u + dt * fu
    vs = v + dt * fv
    Au, Av = u_laplacian_matrix(g), v_laplacian_matrix(g)
    us_new = np.zeros_like(u)
    vs_new = np.zeros_like(v)
    us_new[1:-1, :] = np.linalg.solve(np.eye(Au.shape[0]) - dt * Au,
                                      us[1:-1, :].ravel()).reshape(g.nx - 1, g.ny)
    vs_new[:, 1:-1] = np.linalg.solve(np.eye(Av.shape[0]) - dt * Av,
                                      vs[:, 1:-1].ravel()).reshape(g.nx, g.ny - 1)

    div = face_divergence(g, us_new, vs_new) / dt
    q = (np.linalg.pinv(L) @ div.ravel()).reshape(g.nx, g.ny)
    qu, qv = face_gradient(g, q)
    return new[0], new[1], new[2], us_new - dt * qu, vs_new - dt * qv, -q
