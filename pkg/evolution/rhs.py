"""
Coupled right-hand side of the evolution system.

The right-hand side is split into a coefficient snapshot, holding every
non-principal quantity (wave coefficients, forcing terms, transport rates,
the curvature system), and a linear part that takes the principal
unknowns from the state:

    rhs(y) = linear_rhs(y, snapshot(y))

Picard sweeps evaluate the snapshot on the previous iterate and the
linear part on the current one.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from curvature.checked_system import CheckedGeometry, checked_geometry, checked_source, recover_riemann
from curvature.maxwell import HyperbolicSystem, MaxwellSource, assemble_hyperbolic, curvature_rhs
from evolution.boundary import boundary_step
from evolution.closures import theta_hat_with_rate
from evolution.state import ExteriorAnchors, StateLayout
from evolution.wave import wave_to_first_order
from fluid.jets import FluidJet
from fluid.operators import coordinate_derivative, wave_coefficients, wave_jet
from fluid.rhs import covariant_theta, lambda_wave_rhs, sigma_wave_rhs, theta_boundary_rhs, theta_interior_rhs
from frames.algebra import frame_derivative_from_coordinates, transport_rhs
from grid.domain import FLUID, SIGMA, DomainGrid

logger = logging.getLogger(__name__)


@dataclass
class CoefficientSnapshot:
    """
    Everything the linear part treats as given.

    :ivar e: e_I^μ the snapshot was taken with
    :ivar e_t: transport rate of e, zero on the band
    :ivar gamma_t: transport rate of Γ, zero on the band
    :ivar ginv: g^{μν} from the frame
    :ivar b: first-order coefficient b^ν of □
    :ivar jet: fluid jet of the snapshot state
    :ivar theta_force: F_Θ on interior nodes, zero elsewhere, (N, 4)
    :ivar sigma_force: F_σ² on interior nodes, (N,)
    :ivar lambda_force: F_Λ on interior nodes, (N,)
    :ivar boundary_force: f on boundary nodes, (Nb, 4)
    :ivar system: curvature system, None for a test fluid
    """
    e: np.ndarray
    theta_hat: np.ndarray
    theta_hat_t: np.ndarray
    dtheta_hat: np.ndarray
    e_t: np.ndarray
    gamma_t: np.ndarray
    ginv: np.ndarray
    b: np.ndarray
    jet: FluidJet
    theta_force: np.ndarray
    sigma_force: np.ndarray
    lambda_force: np.ndarray
    boundary_force: np.ndarray
    geo: Optional[CheckedGeometry] = None
    riemann: Optional[np.ndarray] = None
    riemann_chk: Optional[np.ndarray] = None
    source: Optional[MaxwellSource] = None
    system: Optional[HyperbolicSystem] = None


class SystemRHS:
    """
    Right-hand side of the full state vector.

    :param grid: domain grid
    :param layout: flat vector layout
    :param anchors: exterior extension data
    :param coupling: Ricci coupling per node
    :param coupled: False freezes the geometry flat (test fluid)
    :param tolerances: floors and thresholds
    """

    def __init__(
        self,
        grid: DomainGrid,
        layout: StateLayout,
        anchors: ExteriorAnchors,
        coupling: np.ndarray,
        coupled: bool,
        tolerances
    ):
        self.grid = grid
        self.layout = layout
        self.anchors = anchors
        self.coupling = coupling
        self.coupled = coupled
        self.tol = tolerances
        self.normal = grid.normal_covector()
        self.interior = np.flatnonzero(grid.interior)
        self.boundary = np.flatnonzero(grid.boundary)
        self.band = grid.band

    def _fluid_jet(self, f, e, e_t, gamma, gamma_t, riemann) -> FluidJet:
        grid = self.grid
        ds_coord = coordinate_derivative(f['sigma2'], f['lam'], grid, FLUID)
        dlam_coord = coordinate_derivative(f['lam'], f['lambda_t'], grid, FLUID)
        dsigma2 = frame_derivative_from_coordinates(e, ds_coord)
        dsigma2_t = np.einsum('njm,nm->nj', e_t, ds_coord) + np.einsum('njm,nm->nj', e, dlam_coord)
        return FluidJet(
            theta=f['theta'],
            theta_t=f['theta_t'],
            sigma2=f['sigma2'],
            lam=f['lam'],
            dtheta=frame_derivative_from_coordinates(
                e, coordinate_derivative(f['theta'], f['theta_t'], grid, FLUID)
            ),
            dsigma2=dsigma2,
            dlam=frame_derivative_from_coordinates(e, dlam_coord),
            ddsigma2=frame_derivative_from_coordinates(
                e, coordinate_derivative(dsigma2, dsigma2_t, grid, FLUID)
            ),
            gamma=gamma,
            dgamma=frame_derivative_from_coordinates(e, coordinate_derivative(gamma, gamma_t, grid, SIGMA)),
            riemann=riemann,
            coupling=self.coupling,
        )

    def snapshot(self, y: np.ndarray) -> CoefficientSnapshot:
        grid, tol = self.grid, self.tol
        f = self.layout.unpack(y)
        e, gamma = f['e'], f['gamma']

        theta_hat, theta_hat_t = theta_hat_with_rate(f, tol.sigma_floor)
        dtheta_hat = frame_derivative_from_coordinates(
            e, coordinate_derivative(theta_hat, theta_hat_t, grid, SIGMA)
        )
        e_t, _ = transport_rhs(e, gamma, theta_hat, dtheta_hat, None)

        geo = riemann = riemann_chk = None
        if self.coupled:
            geo = checked_geometry(e, e_t, theta_hat, theta_hat_t, self.normal, tol.sigma_floor, tol.gram_floor)
            riemann_chk, riemann = recover_riemann(f['w'], geo, f['theta'], self.coupling)
        e_t, gamma_t = transport_rhs(e, gamma, theta_hat, dtheta_hat, riemann)
        e_t[self.band] = 0.0
        gamma_t[self.band] = 0.0

        de_coord = coordinate_derivative(e, e_t, grid, SIGMA)
        ginv, b = wave_coefficients(e, de_coord, gamma)
        jet = self._fluid_jet(f, e, e_t, gamma, gamma_t, riemann)

        count = grid.n_nodes
        inner = jet.take(self.interior)
        theta_force = np.zeros((count, 4))
        sigma_force = np.zeros(count)
        lambda_force = np.zeros(count)
        theta_force[self.interior] = theta_interior_rhs(inner)
        sigma_force[self.interior] = sigma_wave_rhs(inner)
        lambda_force[self.interior] = lambda_wave_rhs(inner, sigma_force[self.interior])
        boundary_force = theta_boundary_rhs(jet.take(self.boundary), tol.c0)

        source = system = None
        if self.coupled:
            source, _ = checked_source(
                geo, riemann_chk, gamma, e, f['theta'], covariant_theta(jet), self.coupling, grid
            )
            system = assemble_hyperbolic(geo.che, source.k, tol.kappa_min)

        return CoefficientSnapshot(
            e=e.copy(), theta_hat=theta_hat, theta_hat_t=theta_hat_t, dtheta_hat=dtheta_hat,
            e_t=e_t, gamma_t=gamma_t, ginv=ginv, b=b, jet=jet,
            theta_force=theta_force, sigma_force=sigma_force, lambda_force=lambda_force,
            boundary_force=boundary_force, geo=geo, riemann=riemann, riemann_chk=riemann_chk,
            source=source, system=system,
        )

    def linear_rhs(self, y: np.ndarray, snap: CoefficientSnapshot) -> np.ndarray:
        """Rates with principal parts from ``y`` and coefficients from ``snap``."""
        grid, tol = self.grid, self.tol
        f = self.layout.unpack(y)
        ydot = np.zeros(self.layout.size)
        out = self.layout.unpack(ydot)
        inner, bnd = self.interior, self.boundary

        out['e'][:] = snap.e_t
        out['gamma'][:] = snap.gamma_t

        theta, theta_t = f['theta'], f['theta_t']
        theta_acc = wave_to_first_order(
            wave_jet(theta, theta_t, grid, FLUID), snap.ginv, snap.b, snap.theta_force,
            tol.time_coefficient_floor,
        )
        out['theta'][inner] = theta_t[inner]
        out['theta_t'][inner] = theta_acc[inner]

        dtheta_b = frame_derivative_from_coordinates(
            snap.e, coordinate_derivative(theta, theta_t, grid, FLUID)
        )[bnd]
        rate, accel = boundary_step(
            theta_t[bnd], dtheta_b, snap.jet.dsigma2[bnd], snap.jet.sigma2[bnd], snap.boundary_force
        )
        out['theta'][bnd] = rate
        out['theta_t'][bnd] = accel

        lam, lam_t = f['lam'], f['lambda_t']
        lam_acc = wave_to_first_order(
            wave_jet(lam, lam_t, grid, FLUID), snap.ginv, snap.b, snap.lambda_force,
            tol.time_coefficient_floor,
        )
        out['sigma2'][inner] = lam[inner]
        out['lam'][inner] = lam_t[inner]
        out['lambda_t'][inner] = lam_acc[inner]

        if snap.system is not None:
            dw = curvature_rhs(snap.system, f['w'], grid)
            dw[self.band] = 0.0
            out['w'][:] = dw
        return ydot

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return self.linear_rhs(y, self.snapshot(y))
