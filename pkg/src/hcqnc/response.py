"""Complex susceptibilities of the cavity, mechanical and atomic modes."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SusceptibilityBundle:
    omega: np.ndarray
    chi_a: np.ndarray
    chi_m: np.ndarray
    chi_d: np.ndarray
    chi_a_prime: np.ndarray
    Z: np.ndarray
    R: np.ndarray
    A: np.ndarray


def chi_a(omega, kappa, approx=False):
    omega = np.asarray(omega, dtype=float)
    if approx:
        return np.full(omega.shape, 2.0 / kappa, dtype=complex)
    return 1.0 / (kappa / 2 + 1j * omega)


def chi_m(omega, omega_m, gamma_m):
    omega = np.asarray(omega, dtype=float)
    return omega_m / (omega_m**2 - omega**2 + 1j * omega * gamma_m)


def chi_d(omega, omega_m, Gamma):
    omega = np.asarray(omega, dtype=float)
    return -omega_m / (omega_m**2 - omega**2 + Gamma**2 / 4 + 1j * omega * Gamma)


def _core(omega, p, approx, perfect):
    ca = chi_a(omega, p.kappa, approx)
    cm = chi_m(omega, p.omega_m, p.gamma_m)
    if perfect:
        cd = -cm
        G = p.g
    else:
        cd = chi_d(omega, p.omega_m, p.Gamma)
        G = p.G
    D = p.Delta_c
    inv = 1.0 / ca - ca * D * (p.g**2 * cm + G**2 * cd - D)
    return ca, cm, cd, 1.0 / inv


def bundle(omega, params, approx_chi_a=False, perfect=False) -> SusceptibilityBundle:
    """Evaluate every response function at omega (scalar or array).

    With perfect=True the atomic response is pinned to chi_d = -chi_m with
    G = g and Gamma = gamma_m, which is the ideal cancellation limit.
    """
    omega = np.asarray(omega, dtype=float)
    ca, cm, cd, cap = _core(omega, params, approx_chi_a, perfect)
    cap_neg = _core(-omega, params, approx_chi_a, perfect)[3]
    Z = ca * (1.0 - 1.0 / (params.kappa * cap_neg))
    R = cd / cm
    if perfect:
        A = R
    else:
        A = params.coupling_ratio * np.sqrt(params.decay_ratio) * R
    return SusceptibilityBundle(omega, ca, cm, cd, cap, Z, R, A)


def approximation_error(omega, kappa, metric="modulus"):
    """Relative error made by replacing chi_a with 2/kappa.

    metric="modulus" compares |chi_a| (the quantity the error budget quotes),
    metric="complex" compares the complex values.
    """
    ca = chi_a(omega, kappa)
    if metric == "modulus":
        return np.abs(2.0 / kappa - np.abs(ca)) / np.abs(ca)
    if metric == "complex":
        return np.abs(2.0 / kappa - ca) / np.abs(ca)
    raise ValueError(f"unknown metric {metric!r}")
