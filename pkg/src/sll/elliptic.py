"""Conservative discretisation of the stream-function equation.

The stream function of a steady mass-conserving flow satisfies

    -div( grad(psi) / rho )     = omega      (plane flow)
    -div( grad(psi) / (r rho) ) = omega      (axisymmetric, azimuthal curl)

posed on the body-fitted grid in mapped coordinates (x1, sigma).  The
transverse grid lines are vertical, so the mapping is a pure shear and
the operator carries the coefficient tensor J beta G with

    G = [[1, s], [s, s^2 + (1/t_sig)^2]],   s = -t_x1 / t_sig.

The two principal directions are discretised with conservative 5-point
fluxes and harmonic-mean face conductances (which, in the axisymmetric
case, integrate the 1/r weight exactly enough to keep the uniform-pipe
solution psi = m (r/f)^2 in the discrete kernel).  The skew part is a
symmetric cell-based cross-flux correction proportional to the wall
slope: it vanishes identically on straight sections, so all straight-
geometry solutions stay exact, and keeps the scheme consistent (second
order) where the walls curve.

Boundary conditions: psi = 0 on the lower wall or axis, psi = m on the
upper wall (half-cell face conductances where the grid is cell-centred
transversely), the inlet column pinned to the upstream profile, and a
natural zero-conormal-flux outlet.  The assembled operator is symmetric
positive definite and is solved with Jacobi-preconditioned conjugate
gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import LinearSolverError
from .geometry import Grid


def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


@dataclass
class EllipticSystem:
    """Assembled SPD system over the unknown block of the node lattice."""

    faces_x: np.ndarray      # (NI-1, NJ) streamwise face conductances
    faces_y: np.ndarray      # (NI, NJ-1) transverse face conductances
    diag: np.ndarray         # (NI, NJ)
    rhs: np.ndarray          # (NI, NJ)
    cross: np.ndarray        # (ni-1, nj-1) cell cross coefficients (lattice)
    lattice_shape: tuple
    unknown_slices: tuple    # (slice_i, slice_j) of unknowns in the lattice
    dx1: float
    dsig: float
    _full: np.ndarray = None
    _cbuf: np.ndarray = None

    def __post_init__(self):
        self._full = np.zeros(self.lattice_shape)
        self._cbuf = np.empty(self.lattice_shape)

    @property
    def has_cross(self) -> bool:
        return bool(np.any(self.cross != 0.0))

    def matvec(self, x, out=None):
        out = _kernels.matvec5(self.faces_x, self.faces_y, self.diag, x, out)
        if self.has_cross:
            si, sj = self.unknown_slices
            self._full[:] = 0.0
            self._full[si, sj] = x
            _kernels.cross_apply(self.cross, self._full, self.dx1, self.dsig,
                                 self._cbuf)
            out += self._cbuf[si, sj]
        return out


def assemble(grid: Grid, rho: np.ndarray, omega: np.ndarray, m: float,
             inlet_psi: np.ndarray) -> EllipticSystem:
    if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
        raise LinearSolverError("density field is not positive and finite; "
                                "assembly would lose positive definiteness")
    dx, ds = grid.dx1, grid.dsig
    if grid.is_axi:
        beta = 1.0 / (grid.trans * rho)
    else:
        beta = 1.0 / rho
    c_xi = grid.t_sig * beta
    c_sg = (1.0 + grid.t_x1 ** 2) * beta / grid.t_sig
    c_cross_nodal = -grid.t_x1 * beta

    # cell-averaged cross coefficient over the full node lattice
    cc = c_cross_nodal
    cross = 0.25 * (cc[:-1, :-1] + cc[1:, :-1] + cc[:-1, 1:] + cc[1:, 1:])

    if grid.is_axi:
        # unknowns: i = 1..nx (inlet pinned), all transverse nodes
        ux = slice(1, grid.ni)
        uj = slice(0, grid.nj)
        cs = c_sg[ux, :]
        NI, NJ = cs.shape
        faces_x = _harmonic(c_xi[1:-1, :], c_xi[2:, :]) * ds / dx
        faces_y = _harmonic(cs[:, :-1], cs[:, 1:]) * dx / ds
        diag = np.zeros((NI, NJ))
        rhs = (grid.t_sig * omega)[ux, :] * dx * ds

        # axis face (psi = 0): half-cell resistance of the 1/r-weighted
        # coefficient, exact for the parabolic near-axis profile
        s0 = grid.sigma[0]
        res_axis = grid.t_sig[ux, 0] ** 2 * rho[ux, 0] * s0 ** 2 \
            / (2.0 * (1.0 + grid.t_x1[ux, 0] ** 2))
        diag[:, 0] += dx / res_axis

        # wall face (psi = m)
        s_last = grid.sigma[-1]
        res_wall = grid.t_sig[ux, -1] ** 2 * rho[ux, -1] * (1.0 - s_last ** 2) \
            / (2.0 * (1.0 + grid.t_x1[ux, -1] ** 2))
        t_wall = dx / res_wall
        diag[:, -1] += t_wall
        rhs[:, -1] += t_wall * m

        t_in = _harmonic(c_xi[0, :], c_xi[1, :]) * ds / dx
        diag[0, :] += t_in
        rhs[0, :] += t_in * inlet_psi

        dirichlet = np.zeros((grid.ni, grid.nj))
        dirichlet[0, :] = inlet_psi
    else:
        # unknowns: i = 1..nx, j = 1..ns-1 (walls and inlet are nodes)
        ux = slice(1, grid.ni)
        uj = slice(1, grid.nj - 1)
        cx = c_xi[ux, uj]
        NI, NJ = cx.shape
        faces_x = _harmonic(c_xi[1:-1, uj], c_xi[2:, uj]) * ds / dx
        faces_y = _harmonic(c_sg[ux, 1:-2], c_sg[ux, 2:-1]) * dx / ds
        diag = np.zeros((NI, NJ))
        rhs = (grid.t_sig * omega)[ux, uj] * dx * ds

        t_lo = _harmonic(c_sg[ux, 0], c_sg[ux, 1]) * dx / ds
        diag[:, 0] += t_lo  # psi = 0 on the lower wall

        t_hi = _harmonic(c_sg[ux, -2], c_sg[ux, -1]) * dx / ds
        diag[:, -1] += t_hi
        rhs[:, -1] += t_hi * m

        t_in = _harmonic(c_xi[0, uj], c_xi[1, uj]) * ds / dx
        diag[0, :] += t_in
        rhs[0, :] += t_in * inlet_psi[1:-1]

        dirichlet = np.zeros((grid.ni, grid.nj))
        dirichlet[0, :] = inlet_psi
        dirichlet[:, 0] = 0.0
        dirichlet[:, -1] = m

    # interior face conductances accumulate on both sides
    diag[:-1, :] += faces_x
    diag[1:, :] += faces_x
    diag[:, :-1] += faces_y
    diag[:, 1:] += faces_y

    system = EllipticSystem(faces_x=faces_x, faces_y=faces_y, diag=diag,
                            rhs=rhs, cross=cross,
                            lattice_shape=(grid.ni, grid.nj),
                            unknown_slices=(ux, uj), dx1=dx, dsig=ds)
    if system.has_cross:
        buf = np.empty_like(dirichlet)
        _kernels.cross_apply(cross, dirichlet, dx, ds, buf)
        system.rhs = system.rhs - buf[ux, uj]
    return system


def cg_solve(system: EllipticSystem, x0: np.ndarray | None = None,
             tol: float = 1e-10, maxiter: int | None = None):
    """Jacobi-preconditioned conjugate gradients on the assembled system.

    Returns (x, iterations, relative_residual); raises LinearSolverError
    when the iteration budget is exhausted before the tolerance or the
    operator loses positive definiteness.
    """
    b = system.rhs
    x = np.zeros_like(b) if x0 is None else x0.copy()
    if maxiter is None:
        maxiter = max(3000, 60 * max(b.shape))
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    r = b - system.matvec(x)
    z = r / system.diag
    p = z.copy()
    rz = float(np.vdot(r, z).real)
    Ap = np.empty_like(b)
    for it in range(1, maxiter + 1):
        rnorm = float(np.linalg.norm(r))
        if rnorm <= tol * bnorm:
            return x, it - 1, rnorm / bnorm
        system.matvec(p, out=Ap)
        pAp = float(np.vdot(p, Ap).real)
        if pAp <= 0.0:
            raise LinearSolverError(
                "operator lost positive definiteness (wall slopes too steep "
                "for the skew correction)", residual=rnorm / bnorm,
                iterations=it)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = r / system.diag
        rz_new = float(np.vdot(r, z).real)
        p = z + (rz_new / rz) * p
        rz = rz_new
    rnorm = float(np.linalg.norm(r))
    if rnorm <= tol * bnorm:
        return x, maxiter, rnorm / bnorm
    raise LinearSolverError(
        f"conjugate gradients stalled at relative residual {rnorm / bnorm:.3e} "
        f"after {maxiter} iterations", residual=rnorm / bnorm, iterations=maxiter)


def elliptic_solve(grid: Grid, rho: np.ndarray, omega: np.ndarray, m: float,
                   inlet_psi: np.ndarray, psi0: np.ndarray | None = None,
                   tol: float = 1e-10, maxiter: int | None = None):
    """Solve for the stream function; returns (psi, iterations, residual).

    ``inlet_psi`` holds the pinned inlet column over the full transverse
    node range; ``psi0`` warm-starts the Krylov iteration.
    """
    system = assemble(grid, rho, omega, m, inlet_psi)
    si, sj = system.unknown_slices
    x0 = None
    if psi0 is not None:
        x0 = np.ascontiguousarray(psi0[si, sj])
    u, iters, res = cg_solve(system, x0=x0, tol=tol, maxiter=maxiter)

    psi = np.empty((grid.ni, grid.nj))
    psi[0, :] = inlet_psi
    if grid.is_axi:
        psi[1:, :] = u
    else:
        psi[1:, 1:-1] = u
        psi[:, 0] = 0.0
        psi[:, -1] = m
        psi[0, :] = inlet_psi
    return psi, iters, res
