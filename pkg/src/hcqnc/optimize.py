"""Homodyne-angle optimisation, minimised spectra and the squeezing threshold.

Every spectrum is quadratic in B = tan(theta)/(1 - 2y tan(theta)):
S(theta) = S_0 + K' B + L' B^2, so the optimum is B* = -K'/(2L') whenever
L' > 0, which maps back to tan(theta_opt) = -(K'/2L')/(1 - y K'/L').
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .params import N_MAX, squeezing_pure
from .response import bundle
from .spectra import breakdown, homodyne_coefficients, perfect_cqnc_spectrum, perfect_kl, thermal_term


@dataclass(frozen=True)
class OptimizationResult:
    theta_opt: np.ndarray
    s_min: np.ndarray
    s_theta0: np.ndarray
    advantage_db: np.ndarray
    valid: np.ndarray


def advantage_db(s_min, s_theta0):
    """Noise reduction of the optimised readout in dB (positive = better)."""
    return -10.0 * np.log10(np.asarray(s_min) / np.asarray(s_theta0)) + 0.0


def theta_from_kl(K, L, y):
    """Optimal angle in (-pi/2, pi/2] for S = S_0 + K B + L B^2."""
    K = np.asarray(K, dtype=float)
    L = np.asarray(L, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        b_star = -K / (2 * L)
        den = 1 + 2 * y * b_star
        theta = np.where(np.abs(den) < 1e-300, np.pi / 2, np.arctan(b_star / den))
    theta = np.where(theta <= -np.pi / 2, theta + np.pi, theta)
    return theta + 0.0  # no signed zeros


def _finish(theta, s_min, s0, valid):
    valid = np.asarray(valid, dtype=bool)
    if not np.all(valid):
        warnings.warn("closed-form minimum does not exist (L <= 0); falling back to theta = 0", stacklevel=3)
    theta = np.where(valid, theta, 0.0)
    s_min = np.where(valid, s_min, s0)
    return OptimizationResult(theta, s_min, s0, advantage_db(s_min, s0), valid)


def theta_opt_perfect(y, squeezing):
    """(theta_opt, valid) under ideal cancellation; depends on y and (N, M) only."""
    K, L = perfect_kl(y, squeezing)
    valid = L > 0
    theta = float(theta_from_kl(K, L, y)) if valid else 0.0
    if not valid:
        warnings.warn("L <= 0: no interior optimum, using theta = 0", stacklevel=2)
    return theta, bool(valid)


def s_min_perfect(omega, params, squeezing, thermal="exact"):
    """Minimised perfect-cancellation spectrum, S(theta=0) - kappa K^2/(4 g^2 gamma_m |chi_m|^2 L)."""
    y = params.y
    K, L = perfect_kl(y, squeezing)
    if not L > 0:
        raise ValueError("L <= 0: minimum does not exist")
    w = np.asarray(omega, dtype=float)
    s0 = perfect_cqnc_spectrum(w, params, squeezing, 0.0, thermal)
    cm2 = np.abs(params.omega_m / (params.omega_m**2 - w**2 + 1j * w * params.gamma_m)) ** 2
    return s0 - params.kappa / (4 * params.g**2 * params.gamma_m * cm2) * K**2 / L


def optimize_perfect(omega, params, squeezing, thermal="exact"):
    theta, valid = theta_opt_perfect(params.y, squeezing)
    s0 = perfect_cqnc_spectrum(omega, params, squeezing, 0.0, thermal)
    s1 = s_min_perfect(omega, params, squeezing, thermal) if valid else s0
    shape = np.shape(s0)
    return _finish(np.full(shape, theta), s1, s0, np.full(shape, valid))


def kprime_lprime(omega, params, squeezing, mode="general", approx_chi_a=True, form="consistent"):
    """Coefficients (K', L') of the linear and quadratic B terms.

    form="consistent" derives them from the consistent spectrum;
    form="literal" keeps Z(w) and R(w) where the solution needs -w.
    """
    perfect = mode == "perfect"
    b = bundle(omega, params, approx_chi_a, perfect)
    bm = bundle(-np.asarray(omega, dtype=float), params, approx_chi_a, perfect)
    c_h, c_fh, c_bh = homodyne_coefficients(params, squeezing, b, bm, perfect)
    if form == "consistent":
        return c_fh + c_bh, c_h
    if form != "literal":
        raise ValueError("form must be 'consistent' or 'literal'")
    p = params
    ka, D, y, g, gm = p.kappa, p.Delta_c, p.y, p.g, p.gamma_m
    N, rM, iM = squeezing.N, squeezing.M.real, squeezing.M.imag
    m2 = np.abs(b.chi_m) ** 2
    ap2 = np.abs(b.chi_a_prime) ** 2
    X = 0.0 if perfect else 1 + (p.G / g) ** 2 * b.R
    W = X / (b.chi_m * b.chi_a_prime)
    K = 1 / (g**2 * gm * m2) * (
        4 * D * np.real(b.Z / bm.chi_a_prime) * rM
        + np.imag((2j * iM + 1) * (4 * y**2 / b.chi_a_prime - 1 / (ka * ap2) + (1 - ka * bm.Z) / bm.chi_a_prime))
    ) - 2 / (ka * gm) * (2 * np.real(W) * (N + 0.5 + rM) + 2 * y * np.imag((2j * iM + 1) * W))
    return K, c_h


def theta_opt_general(omega, params, squeezing, mode="general", approx_chi_a=True, thermal="exact"):
    """Closed-form optimum at any detuning and mismatch."""
    K, L = kprime_lprime(omega, params, squeezing, mode, approx_chi_a)
    s0 = breakdown(omega, params, squeezing, 0.0, mode, approx_chi_a, thermal).total
    valid = L > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        s_min = s0 - K**2 / (4 * L)
    theta = theta_from_kl(K, L, params.y)
    return _finish(theta, s_min, s0, valid)


def _resonant_pieces(omega, params, squeezing):
    p = params
    w = np.asarray(omega, dtype=float)
    b = bundle(w, p, True)
    bm = bundle(-w, p, True)
    X = 1 + (p.G / p.g) ** 2 * b.R
    return w, b, bm, X


def theta_opt_resonant_imperfect(omega, params, squeezing, form="consistent", thermal="exact"):
    """Optimum for a resonantly driven cavity with imperfect cancellation.

    form="consistent": tan(theta) = (4 g^2/kappa)|chi_m|^2 Re[X(w)/chi_m(-w)],
    the exact stationary point of the spectrum.  form="literal": the
    closed-form angle with chi_m(w) and its minimised spectrum, which divides the
    subtraction by (N + 1/2 + |M|) and omits the shot-noise factor 1/4; the
    squeezing-threshold search is built on this form.
    """
    p = params
    if p.y != 0:
        raise ValueError("resonant formulas require Delta_c = 0")
    if form == "consistent":
        return theta_opt_general(omega, p, squeezing, "general", True, thermal)
    if form != "literal":
        raise ValueError("form must be 'consistent' or 'literal'")
    if not (squeezing.is_pure and abs(squeezing.M.imag) < 1e-12 * max(1.0, abs(squeezing.M))
            and squeezing.M.real >= 0):
        raise ValueError("literal resonant form assumes pure squeezing with phi = 0")
    w, b, bm, X = _resonant_pieces(omega, p, squeezing)
    N = squeezing.N
    m2 = np.abs(b.chi_m) ** 2
    re = np.real(X / b.chi_m)
    theta = np.arctan(4 * p.g**2 / p.kappa * m2 * re)
    s_min = s_min_resonant_literal(w, p, N, thermal)
    s0 = s_min + 4 * p.g**2 / (p.kappa * p.gamma_m) * re**2 * m2 / (N + 0.5 + math.sqrt(N * (N + 1)))
    valid = s_min >= 0
    with np.errstate(invalid="ignore", divide="ignore"):
        adv = np.where(valid, advantage_db(np.where(valid, s_min, 1.0), s0), np.nan)
    return OptimizationResult(theta, s_min, s0, adv, valid)


def s_min_resonant_literal(omega, params, N, thermal="exact"):
    """Literal resonant minimised spectrum for Delta_c = 0 and pure phi = 0 squeezing."""
    p = params
    w, b, bm, X = _resonant_pieces(omega, p, None)
    ka, g, gm, wm = p.kappa, p.g, p.gamma_m, p.omega_m
    m2 = np.abs(b.chi_m) ** 2
    root = math.sqrt(N * (N + 1))
    atom = p.decay_ratio / 2 * p.coupling_ratio**2 * np.real(b.R) * (1 + (w**2 + p.Gamma**2 / 4) / wm**2)
    shot = ka / (g**2 * gm * m2) * (N + 0.5 - root)
    back = 4 * g**2 / (ka * gm) * np.abs(X) ** 2 * (N + 0.5 + root)
    sub = 4 * g**2 / (ka * gm) * np.real(X / b.chi_m) ** 2 * m2 / (N + 0.5 + root)
    return thermal_term(p, thermal) + atom + shot + back - sub


@dataclass(frozen=True)
class ThresholdResult:
    n_min: float
    has_threshold: bool


def n_min(omega, params, n_cap=N_MAX, xtol=1e-6, mode="general", thermal="exact"):
    """Smallest N keeping the literal resonant minimised spectrum non-negative."""
    if mode == "perfect":
        return ThresholdResult(0.0, False)
    if params.y != 0:
        raise ValueError("threshold search requires Delta_c = 0")

    def f(N):
        return float(s_min_resonant_literal(omega, params, N, thermal))

    lo, hi = f(0.0), f(n_cap)
    if lo > 0 or lo * hi > 0:
        return ThresholdResult(0.0, False)
    return ThresholdResult(bisect(f, 0.0, n_cap, xtol=xtol), True)


def theta_opt_numeric(omega, params, squeezing, mode="general", approx_chi_a=True,
                      thermal="exact", points=2000, xtol=1e-10):
    """Grid plus golden-section minimisation of the full spectrum over theta."""
    omega = float(omega)

    def total(th):
        return float(breakdown(omega, params, squeezing, th, mode, approx_chi_a, thermal).total)

    grid = np.linspace(-np.pi / 2, np.pi / 2, points + 1)[1:]
    # drop the angle where u_theta vanishes
    u = np.cos(grid) - 2 * params.y * np.sin(grid)
    vals = np.where(np.abs(u) < 1e-12, np.inf,
                    breakdown(omega, params, squeezing, np.where(np.abs(u) < 1e-12, 0.0, grid),
                              mode, approx_chi_a, thermal).total)
    i = int(np.argmin(vals))
    step = grid[1] - grid[0]
    a, c = grid[i] - step, grid[i] + step
    if not (np.isfinite(total(a)) and np.isfinite(total(c))):
        return float(grid[i])
    try:
        res = minimize_scalar(total, bracket=(a, grid[i], c), method="golden", options={"xtol": xtol})
        th = float(res.x) if res.fun <= vals[i] else float(grid[i])
    except ValueError:
        th = float(grid[i])
    th = (th + np.pi / 2) % np.pi - np.pi / 2
    if th <= -np.pi / 2:
        th += np.pi
    return th


def optimize(omega, params, squeezing, mode="general", approx_chi_a=True, thermal="exact"):
    """Closed-form optimum appropriate to the mode."""
    if mode == "perfect":
        return optimize_perfect(omega, params, squeezing, thermal)
    return theta_opt_general(omega, params, squeezing, mode, approx_chi_a, thermal)


def pure_at_opt_phase(N, y):
    from .params import phi_opt

    return squeezing_pure(N, phi_opt(y))
