"""
Div-curl residuals of the evolved curvature two-forms.

Each adapted pair (X_A, X_B) carries the two-form F = R(·, ·, X_A, X_B);
its coordinate components obey the Maxwell-type system whose four
residuals are evaluated in :mod:`curvature.coordinate_em`.
"""
import logging
from typing import Dict

import numpy as np

from curvature.checked_system import CheckedGeometry, checked_geometry, recover_riemann
from curvature.coordinate_em import coframe, divcurl_residuals, frame_to_coordinate, residual_norms
from diagnostics.context import MonitorContext
from diagnostics.flow import flow_derivative
from evolution.closures import theta_hat_with_rate
from frames.algebra import metric_from_frame
from frames.curvature import two_forms
from frames.signature import EPS, PAIRS
from grid.domain import FLUID, VACUUM

logger = logging.getLogger(__name__)


def checked_coframe(geo: CheckedGeometry, e: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Dual basis of ě_I = C_I^J e_J: θ̌^I = (C⁻¹)_J^I θ^J."""
    return np.einsum('nji,njm->nim', geo.c_inv, coframe(e, metric))


def coordinate_forms(ctx: MonitorContext, y: np.ndarray) -> np.ndarray:
    """Coordinate components F_{μν} of the three adapted two-forms, (N, 3, 4, 4)."""
    f = ctx.layout.unpack(y)
    tol = ctx.tol
    theta_hat, rate = theta_hat_with_rate(f, tol.sigma_floor)
    geo = checked_geometry(
        f['e'], np.zeros_like(f['e']), theta_hat, rate, ctx.grid.normal_covector(),
        tol.sigma_floor, tol.gram_floor,
    )
    riemann_chk, _ = recover_riemann(f['w'], geo, f['theta'], ctx.coupling)
    cof = checked_coframe(geo, f['e'], metric_from_frame(f['e'], tol.det_floor))
    return frame_to_coordinate(two_forms(riemann_chk, geo.xa), cof, 2)


def divcurl_norms(ctx: MonitorContext) -> Dict[str, Dict[str, float]]:
    """
    Sup norms of div Ē, div H̄, curl H̄ and curl Ē per side of the fluid
    surface, the largest over the three pairs. Empty for a test fluid.
    """
    snap = ctx.snap
    if snap.source is None:
        return {}
    grid = ctx.grid
    geo = ctx.geo
    e, e_t = snap.e, snap.e_t
    ginv = snap.ginv
    ginv_t = np.einsum('nim,i,niv->nmv', e_t, EPS, e) + np.einsum('nim,i,niv->nmv', e, EPS, e_t)
    root = ctx.sqrt_det
    root_t = -0.5 * root * np.einsum('nmv,nmv->n', ctx.metric, ginv_t)

    forms = coordinate_forms(ctx, ctx.y)
    forms_t = flow_derivative(lambda y: coordinate_forms(ctx, y), ctx.y, ctx.rhs, 1)
    cof = checked_coframe(geo, e, ctx.metric)
    cyclic = frame_to_coordinate(snap.source.cyclic, cof, 3)
    current = np.einsum('nvm,npk,nkm->npv', ginv, snap.source.covariant_current, cof)

    inside = grid.fluid.copy()
    report: Dict[str, Dict[str, float]] = {}
    for p in range(len(PAIRS)):
        sides = {}
        for region in (FLUID, VACUUM):
            sides[region] = divcurl_residuals(
                grid, forms[:, p], forms_t[:, p], ginv, ginv_t, root, root_t,
                current[:, p], cyclic[:, p], region,
            )
        merged = {
            name: np.where(inside.reshape((-1,) + (1,) * (values.ndim - 1)), values, sides[VACUUM][name])
            for name, values in sides[FLUID].items()
        }
        for name, by_side in residual_norms(grid, merged).items():
            slot = report.setdefault(name, {})
            for side, value in by_side.items():
                slot[side] = max(slot.get(side, 0.0), value)
    return report
