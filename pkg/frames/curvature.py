"""
Electric/magnetic split of the curvature two-forms and its inverse.

For each pair A < B of adapted legs, F^{AB}_{IJ} = R_{IJKL} X_A^K X_B^L is
stored as W^{AB} = (E₁, E₂, E₃, H¹, H², H³) with E_Ĩ = F_{Ĩ0} and
H¹ = −F₂₃, H² = −F₃₁, H³ = −F₁₂.
"""
from typing import Optional

import numpy as np

from frames.signature import EPS, LEVI3, PAIRS

# position of the ordered tangential pair (A, B) in W, with sign
_PAIR_INDEX = {}
for _p, (_a, _b) in enumerate(PAIRS):
    _PAIR_INDEX[(_a, _b)] = (_p, 1.0)
    _PAIR_INDEX[(_b, _a)] = (_p, -1.0)

_ETA = np.array([-1.0, 1.0, 1.0, 1.0])


def two_form_from_w(w: np.ndarray) -> np.ndarray:
    """
    Antisymmetric F_IJ from (E, H) on the last axis of ``w``.

    :param w: (..., 6)
    :return: (..., 4, 4)
    """
    e, h = w[..., :3], w[..., 3:]
    f = np.zeros(w.shape[:-1] + (4, 4), dtype=w.dtype)
    f[..., 1:, 0] = e
    f[..., 0, 1:] = -e
    # F_{jk} = −ε_{jkm} H^m
    f[..., 1:, 1:] = -np.einsum('jkm,...m->...jk', LEVI3, h)
    return f


def w_from_two_form(f: np.ndarray) -> np.ndarray:
    """Inverse of :func:`two_form_from_w` (antisymmetric input assumed)."""
    e = f[..., 1:, 0]
    h = -0.5 * np.einsum('jkm,...jk->...m', LEVI3, f[..., 1:, 1:])
    return np.concatenate([e, h], axis=-1)


def decompose_curvature(riemann: np.ndarray, xa: np.ndarray) -> np.ndarray:
    """
    W^{AB} of F^{AB}_{IJ} = R_{IJKL} X_A^K X_B^L for the three stored pairs.

    :param riemann: R_{IJKL}, (N, 4, 4, 4, 4)
    :param xa: X_A^I, (N, 3, 4)
    :return: (N, 3, 6)
    """
    forms = two_forms(riemann, xa)
    return w_from_two_form(forms)


def two_forms(riemann: np.ndarray, xa: np.ndarray) -> np.ndarray:
    """F^{AB}_{IJ} for the stored pairs, (N, 3, 4, 4)."""
    out = []
    for a, b in PAIRS:
        out.append(np.einsum('nijkl,nk,nl->nij', riemann, xa[:, a], xa[:, b]))
    return np.stack(out, axis=1)


def recover_curvature(
    w: np.ndarray,
    xa: np.ndarray,
    n: np.ndarray,
    ricci: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Full R_{IJKL} from the three W^{AB} and the Ricci tensor.

    Works in the basis b = (X₀, X₁, X₂, n): components whose last pair is
    tangential come from W; R(·,·,X_A,n) follows by pair symmetry when the
    first pair is tangential and from the Ricci trace when it holds n; the
    result is transformed back to the e-frame.

    :param w: (N, 3, 6)
    :param xa: X_A^I, (N, 3, 4)
    :param n: unit normal n^I, (N, 4)
    :param ricci: R_IJ in the e-frame, (N, 4, 4); zero (vacuum) if None
    :return: R_{IJKL}, (N, 4, 4, 4, 4)
    """
    count = w.shape[0]
    basis = np.concatenate([xa, n[:, None, :]], axis=1)
    forms = two_form_from_w(w)
    # first pair into the adapted basis: Fb[p, a, b] = F^{p}(b_a, b_b)
    fb = np.einsum('nai,nbj,npij->npab', basis, basis, forms)

    def tangential(p_ab, first, second):
        p, sign = _PAIR_INDEX[p_ab]
        return sign * fb[:, p, first, second]

    rhat = np.zeros((count, 4, 4, 4, 4), dtype=w.dtype)
    for (a, b) in PAIRS:
        p = PAIRS.index((a, b))
        rhat[:, :, :, a, b] = fb[:, p]
        rhat[:, :, :, b, a] = -fb[:, p]

    if ricci is None:
        ric_t = np.zeros((count, 3, 3), dtype=w.dtype)
    else:
        ric_t = np.einsum('nai,nij,nbj->nab', xa, ricci, xa)

    for a in range(3):
        # tangential first pair: R(X_C, X_D, X_A, n) = R(X_A, n, X_C, X_D)
        for c in range(3):
            for d in range(3):
                if c == d:
                    continue
                rhat[:, c, d, a, 3] = tangential((c, d), a, 3)
        # normal in the first pair, from the trace over the adapted basis
        for b in range(3):
            trace = np.zeros(count, dtype=w.dtype)
            for c in range(3):
                if c == a:
                    continue
                trace = trace + _ETA[c] * tangential((c, a), c, b)
            value = ric_t[:, b, a] - trace
            rhat[:, b, 3, a, 3] = value
            rhat[:, 3, b, a, 3] = -value
        rhat[:, :, :, 3, a] = -rhat[:, :, :, a, 3]

    inv = np.linalg.inv(basis)
    return np.einsum('nia,njb,nkc,nld,nabcd->nijkl', inv, inv, inv, inv, rhat)


def kulkarni_nomizu(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """(h ⊙ k)_{abcd} = h_ac k_bd + h_bd k_ac − h_ad k_bc − h_bc k_ad."""
    return (
        np.einsum('...ac,...bd->...abcd', h, k)
        + np.einsum('...bd,...ac->...abcd', h, k)
        - np.einsum('...ad,...bc->...abcd', h, k)
        - np.einsum('...bc,...ad->...abcd', h, k)
    )


def random_algebraic_curvature(rng: np.random.Generator, count: int, terms: int = 3, scale: float = 1.0) -> np.ndarray:
    """
    Random tensors with every algebraic curvature symmetry (pair symmetry
    and first Bianchi included), built from Kulkarni–Nomizu products.
    """
    out = np.zeros((count, 4, 4, 4, 4))
    for _ in range(terms):
        h = rng.normal(scale=scale, size=(count, 4, 4))
        k = rng.normal(scale=scale, size=(count, 4, 4))
        h = 0.5 * (h + np.swapaxes(h, -1, -2))
        k = 0.5 * (k + np.swapaxes(k, -1, -2))
        out += kulkarni_nomizu(h, k)
    return out


def raise_first(riemann: np.ndarray) -> np.ndarray:
    """R^K_{MIJ} = ε_K R_{KMIJ}."""
    return np.einsum('k,...kmij->...kmij', EPS, riemann)
