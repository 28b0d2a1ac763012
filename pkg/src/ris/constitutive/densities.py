"""Pointwise constitutive functions, vectorized over stacks of nodes."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..kinematics import OrientationError, cofactor, determinant
from .params import ModelParams


def _fro(A: np.ndarray, ndim: int) -> np.ndarray:
    axes = tuple(range(A.ndim - ndim, A.ndim))
    return np.sqrt(np.sum(A * A, axis=axes))


def _safe_pow(norm: np.ndarray, e: float) -> np.ndarray:
    # norm**e with 0**e := 0; only used where the product with a zero tensor follows
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(norm > 0, norm ** e, 0.0)


# -- damage function ------------------------------------------------------
def gamma(z, P: ModelParams):
    z = np.asarray(z, dtype=float)
    zp = np.maximum(z, 0.0)
    return zp * zp + P.eps_gamma


def gamma_prime(z, P: ModelParams):
    return 2.0 * np.maximum(np.asarray(z, dtype=float), 0.0)


# -- elastic part -----------------------------------------------------------
def _cof_norm_grad(F: np.ndarray) -> np.ndarray:
    """``d/dF (|cof F|^2 / 2)``."""
    d = F.shape[-1]
    if d == 1:
        return np.zeros_like(F)
    if d == 2:
        return F.copy()
    FF = np.sum(F * F, axis=(-2, -1))[..., None, None]
    return FF * F - F @ np.swapaxes(F, -1, -2) @ F


def psi_ogden(F: np.ndarray, P: ModelParams, grad: bool = False):
    det = determinant(F)
    cof = cofactor(F)
    nF = _fro(F, 2)
    nK = _fro(cof, 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (
            P.a * nF ** P.p
            + P.b * nK ** P.q
            + P.c * det ** P.r
            - 2.0 * P.d_log * np.log(det)
            + P.e_s * det ** (-P.s)
        )
    if not grad:
        return val
    scal = P.c * P.r * det ** (P.r - 1) - 2.0 * P.d_log / det - P.e_s * P.s * det ** (-P.s - 1)
    dval = (
        (P.a * P.p * _safe_pow(nF, P.p - 2))[..., None, None] * F
        + (P.b * P.q * _safe_pow(nK, P.q - 2))[..., None, None] * _cof_norm_grad(F)
        + scal[..., None, None] * cof
    )
    return val, dval


def psi_svk(F: np.ndarray, P: ModelParams, grad: bool = False):
    d = F.shape[-1]
    E = 0.5 * (np.swapaxes(F, -1, -2) @ F - np.eye(d))
    trE = np.trace(E, axis1=-2, axis2=-1)
    val = 0.5 * P.lame_lambda * trE**2 + P.lame_mu * np.sum(E * E, axis=(-2, -1))
    if not grad:
        return val
    S = P.lame_lambda * trE[..., None, None] * np.eye(d) + 2.0 * P.lame_mu * E
    return val, F @ S


def psi(F: np.ndarray, P: ModelParams, grad: bool = False):
    return psi_svk(F, P, grad) if P.psi == "svk" else psi_ogden(F, P, grad)


@lru_cache(maxsize=64)
def calibration_constant(P: ModelParams) -> float:
    """``psi(I)``; subtracting it puts the undeformed flawless state at zero energy."""
    return float(psi(np.eye(P.dim)[None], P)[0])


def stored_density(F, G, P: ModelParams, grad: bool = False, calibrated: bool = True):
    """Undamaged stored energy ``W(F, G)`` per node.

    In ``nonsimple`` mode ``W = psi(F) + (eps_reg/p)|G|^p``; in
    ``polyconvex_simple`` mode the second-gradient term is absent.  Returns
    ``W`` or ``(W, dW/dF, dW/dG)``.  Nonpositive determinants raise
    ``OrientationError`` (the energy is infinite there).
    """
    F = np.asarray(F, dtype=float)
    if np.any(determinant(F) <= 0) and P.psi == "ogden":
        raise OrientationError("det F must be positive")
    out = psi(F, P, grad)
    val, dF = out if grad else (out, None)
    if calibrated:
        val = val - calibration_constant(P)
    if P.material_mode == "nonsimple" and G is not None:
        G = np.asarray(G, dtype=float)
        nG = _fro(G, 3)
        val = val + (P.eps_reg / P.p) * nG ** P.p
        dG = (P.eps_reg * _safe_pow(nG, P.p - 2))[..., None, None, None] * G if grad else None
    else:
        dG = np.zeros(F.shape + (F.shape[-1],)) if grad else None
    return (val, dF, dG) if grad else val


def growth_constants(P: ModelParams) -> tuple[float, float, float]:
    """Constants ``(c, C_lo, C_hi)`` of the two-sided growth bound

    ``c (|F|^p + det^-s + |G|^p) - C_lo <= W(F, G) <= C_hi (|F|^p + det^-s + |G|^p + 1)``

    for the calibrated Ogden-type density in ``nonsimple`` mode.  The upper
    bound uses ``|cof F| <= |F|^(d-1)`` and ``det F <= |F|^d``, so it needs
    ``q (d-1) <= p`` and ``d r <= p``; the lower bound needs ``c > 0`` to
    absorb the logarithm.
    """
    d = P.dim
    if P.psi != "ogden" or P.material_mode != "nonsimple":
        raise ValueError("growth constants are derived for the nonsimple Ogden-type density")
    if not (P.c > 0 and P.e_s > 0 and P.q * (d - 1) <= P.p and d * P.r <= P.p):
        raise ValueError("need c, e_s > 0, q (d-1) <= p and d r <= p")
    K = calibration_constant(P)
    # min over x > 0 of c x^r - 2 d_log ln x
    x = (2 * P.d_log / (P.c * P.r)) ** (1 / P.r) if P.d_log > 0 else 0.0
    m = P.c * x ** P.r - 2 * P.d_log * np.log(x) if x > 0 else 0.0
    c_lo = min(P.a, P.e_s, P.eps_reg / P.p)
    C_lo = max(0.0, K - m)
    # |F|^e <= 1 + |F|^p for e <= p;  -ln x <= x^-s / (s e) for x < 1
    C_hi = max(P.a + P.b + P.c, P.e_s + 2 * P.d_log / (P.s * np.e), P.eps_reg / P.p,
               P.b + P.c + max(0.0, -K))
    return float(c_lo), float(C_lo), float(C_hi)


def stored_density_nonsimple(F, G, P: ModelParams, calibrated: bool = False):
    """Ogden-type (or St. Venant-Kirchhoff) density plus the Hessian term."""
    if P.material_mode != "nonsimple":
        P = P.replace(material_mode="nonsimple")
    return stored_density(F, G, P, calibrated=calibrated)


# -- gradient-of-damage term -------------------------------------------------
def phi(u, P: ModelParams):
    u = np.asarray(u, dtype=float)
    return (P.rho0 / P.alpha) * np.linalg.norm(u, axis=-1) ** P.alpha


def phi_terms(F: np.ndarray, gz: np.ndarray, P: ModelParams, grad: bool = False):
    """``phi`` of the transported damage gradient with derivatives.

    ``nonsimple``: argument ``F^{-T} gz = cof(F) gz / det F``.
    ``polyconvex_simple``: argument ``cof(F) gz``.
    Returns ``phi`` or ``(phi, dphi/dF, dphi/dgz)``.
    """
    d = F.shape[-1]
    cof = cofactor(F)
    det = determinant(F)
    u = np.einsum("...ij,...j->...i", cof, gz)
    if P.material_mode == "nonsimple":
        u = u / det[..., None]
    nu = np.linalg.norm(u, axis=-1)
    val = (P.rho0 / P.alpha) * nu ** P.alpha
    if not grad:
        return val
    v = (P.rho0 * _safe_pow(nu, P.alpha - 2))[..., None] * u
    # F^{-1} v = cof(F)^T v / det
    Finv_v = np.einsum("...ji,...j->...i", cof, v) / det[..., None]
    if P.material_mode == "nonsimple":
        dgz = Finv_v
        dF = -u[..., :, None] * Finv_v[..., None, :]
    else:
        dgz = np.einsum("...ji,...j->...i", cof, v)
        if d == 1:
            dF = np.zeros_like(F)
        else:
            vu = np.sum(v * u, axis=-1)
            dF = (vu / det)[..., None, None] * cof - u[..., :, None] * Finv_v[..., None, :]
    return val, dF, dgz
