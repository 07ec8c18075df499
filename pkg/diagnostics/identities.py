"""
Audit of the commutator identities on manufactured fields.

The residuals of :mod:`fluid.commutators` need a frame that is transported
exactly, ∂t e_I = −c_I^J e_J. With Θ̂ = (1, 0, 0, 0) the coefficient is
c_I^J = Γ_{I0}^J, so choosing

    Γ_{I0}^J = A_I^J(x),   A = d(x) P + a(x) K,

with P the projector on the spatial legs and K the rotation generator of
legs 1 and 2 (P and K commute), the frame e(t) = exp(−tA) e(0) solves the
transport equation in closed form. The remaining connection components,
the scalar u and the σ² data are arbitrary smooth functions of (t, x).

On such fields the transport, boundary and decomposition residuals vanish
to round-off at every resolution; the box residual carries the stencil
truncation error and converges at the stencil order.
"""
import logging
from typing import Dict

import numpy as np

from fluid.commutators import CommutatorFields, commutator_residuals
from grid.domain import FLUID, DomainGrid

logger = logging.getLogger(__name__)

AUDIT_TIME = 0.3
AUDIT_AMPLITUDE = 0.2

# rotation generator of legs 1 and 2
_ROTATION = np.zeros((4, 4))
_ROTATION[1, 2] = 1.0
_ROTATION[2, 1] = -1.0
_SPATIAL = np.diag([0.0, 1.0, 1.0, 1.0])


def _transport_generator(x: np.ndarray, amplitude: float):
    """Scale rate d(x) and rotation rate a(x) of A = dP + aK."""
    d = amplitude * (1.0 + 0.5 * np.sin(x[:, 0] + 0.3 * x[:, 1]))
    a = amplitude * np.cos(x[:, 0] - 0.5 * x[:, 2])
    return d, a


def _flow(d: np.ndarray, a: np.ndarray, t: float) -> np.ndarray:
    """exp(−t(dP + aK)) per node, (N, 4, 4)."""
    count = d.shape[0]
    angle = -t * a
    rotation = (
        np.eye(4)[None]
        + np.sin(angle)[:, None, None] * _ROTATION[None]
        + (1.0 - np.cos(angle))[:, None, None] * (_ROTATION @ _ROTATION)[None]
    )
    scale = np.tile(np.eye(4), (count, 1, 1)) + (np.exp(-t * d) - 1.0)[:, None, None] * _SPATIAL[None]
    return np.einsum('nij,njk->nik', scale, rotation)


def manufactured_commutator_fields(
    grid: DomainGrid,
    t: float = AUDIT_TIME,
    amplitude: float = AUDIT_AMPLITUDE
) -> CommutatorFields:
    """
    Closed-form fields at time ``t`` with an exactly transported frame.

    :param grid: grid supplying the node coordinates
    :param t: sampling time
    :param amplitude: size of the frame rotation and of the connection
    """
    x = grid.coords
    count = grid.n_nodes
    d, a = _transport_generator(x, amplitude)
    gen = d[:, None, None] * _SPATIAL[None] + a[:, None, None] * _ROTATION[None]

    base = np.tile(np.eye(4), (count, 1, 1))
    base[:, 1, 1] += 0.1 * amplitude * np.cos(x[:, 1])
    base[:, 0, 1] = 0.1 * amplitude * np.sin(x[:, 0])
    e = np.einsum('nij,njm->nim', _flow(d, a, t), base)
    e_t = -np.einsum('nij,njm->nim', gen, e)
    e_tt = np.einsum('nij,njk,nkm->nim', gen, gen, e)

    # the free components of Γ oscillate in time; Γ_{I0}^J is the generator
    phase = t + 2.0 * x[:, 0] - x[:, 1] + 0.5 * x[:, 2]
    pattern = np.sin(np.arange(64, dtype=float).reshape(4, 4, 4) + 1.0)
    gamma = amplitude * np.cos(phase)[:, None, None, None] * pattern[None]
    gamma_t = -amplitude * np.sin(phase)[:, None, None, None] * pattern[None]
    gamma[:, :, 0, :] = gen
    gamma_t[:, :, 0, :] = 0.0

    wave = t + x[:, 0] - 0.5 * x[:, 1]
    envelope = np.exp(-0.5 * np.sum(x ** 2, axis=1))
    u = envelope * np.cos(wave)
    u_t = -envelope * np.sin(wave)
    u_tt = -u

    swing = np.cos(0.7 * t + x[:, 0] + x[:, 2])
    sigma2 = 2.0 + 0.5 * swing
    lam = -0.35 * np.sin(0.7 * t + x[:, 0] + x[:, 2])
    lam_t = -0.245 * swing

    theta_hat = np.zeros((count, 4))
    theta_hat[:, 0] = 1.0
    return CommutatorFields(
        u=u, u_t=u_t, u_tt=u_tt,
        e=e, e_t=e_t, e_tt=e_tt,
        gamma=gamma, gamma_t=gamma_t,
        theta_hat=theta_hat, theta_hat_t=np.zeros_like(theta_hat), theta_hat_tt=np.zeros_like(theta_hat),
        sigma2=sigma2, lam=lam, lam_t=lam_t,
    )


def identity_audit(grid: DomainGrid, t: float = AUDIT_TIME, amplitude: float = AUDIT_AMPLITUDE) -> Dict[str, float]:
    """Sup norm of each commutator residual on the manufactured fields of ``grid``."""
    residuals = commutator_residuals(manufactured_commutator_fields(grid, t, amplitude), grid, FLUID)
    audit = {
        name: float(np.max(np.abs(values))) if values.size else 0.0
        for name, values in residuals.items()
    }
    logger.info("Identity audit: " + ", ".join(f"{name}={value:.3e}" for name, value in audit.items()))
    return audit
