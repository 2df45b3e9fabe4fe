"""Sensor figures of merit: SNR, sensitivity, signal response and bandwidths."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .optimize import optimize
from .response import bundle
from .spectra import breakdown, to_si, u_theta


@dataclass(frozen=True)
class BandReport:
    center: float
    lower: float
    upper: float
    bandwidth_gamma_m: float
    criterion: str


def snr(f_ext, s):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("PSD must be positive")
    return np.abs(f_ext) / np.sqrt(s)


def _theta(omega, params, squeezing, theta, mode, approx_chi_a):
    if isinstance(theta, str):
        if theta == "opt":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return optimize(omega, params, squeezing, mode, approx_chi_a).theta_opt
        if theta == "zero":
            return np.zeros(np.shape(omega))
        raise ValueError(f"unknown theta policy {theta!r}")
    return np.broadcast_to(np.asarray(theta, dtype=float), np.shape(omega))


def sensitivity(omega, params, squeezing, theta=0.0, mode="general", approx_chi_a=True):
    """Force sensitivity sqrt(S_F) in N/sqrt(Hz); theta may be 'opt'."""
    th = _theta(omega, params, squeezing, theta, mode, approx_chi_a)
    s = breakdown(omega, params, squeezing, th, mode, approx_chi_a).total
    return np.sqrt(to_si(s, params))


def improvement_percent(s_opt, s_zero):
    """Amplitude-sensitivity improvement 100 (1 - sqrt(S_opt/S_0))."""
    return 100.0 * (1.0 - np.sqrt(np.asarray(s_opt) / np.asarray(s_zero)))


def signal_response(omega, params, theta=0.0, mode="general", approx_chi_a=True):
    """R_c = g^2 kappa gamma_m |chi_a'|^2 |chi_m|^2 u_theta^2."""
    b = bundle(omega, params, approx_chi_a, mode == "perfect")
    u = u_theta(np.asarray(theta, dtype=float), params.y)
    return params.g**2 * params.kappa * params.gamma_m * np.abs(b.chi_a_prime) ** 2 * np.abs(b.chi_m) ** 2 * u**2


def signal_improvement(theta, y):
    """Signal improvement u_theta^2 relative to phase readout."""
    return u_theta(np.asarray(theta, dtype=float), y) ** 2


CRITERIA = ("Rc>1", "R<1")


def _indicator(omega, params, squeezing, theta_policy, criterion, mode, approx_chi_a):
    th = _theta(omega, params, squeezing, theta_policy, mode, approx_chi_a)
    if criterion == "Rc>1":
        return signal_response(omega, params, th, mode, approx_chi_a) - 1.0
    if criterion == "R<1":
        return 1.0 - signal_improvement(th, params.y)
    raise ValueError(f"criterion must be one of {CRITERIA}")


def amplification_band(params, squeezing, theta_policy="zero", criterion="Rc>1", mode="general",
                       approx_chi_a=True, span_gamma=5e4, step_gamma=0.1, edge_tol_gamma=0.01,
                       chunk=200_000):
    """Frequency intervals around omega_m where the criterion holds.

    The scan covers omega_m +- span_gamma gamma_m at step_gamma gamma_m;
    each edge is then refined by root finding to edge_tol_gamma gamma_m.
    """
    gm, wm = params.gamma_m, params.omega_m
    x = np.arange(-span_gamma, span_gamma + step_gamma / 2, step_gamma)
    ind = np.empty(x.shape)
    for s in range(0, x.size, chunk):
        ind[s:s + chunk] = _indicator(wm + gm * x[s:s + chunk], params, squeezing, theta_policy,
                                      criterion, mode, approx_chi_a)
    inside = ind > 0

    def f(xx):
        return float(_indicator(np.array([wm + gm * xx]), params, squeezing, theta_policy,
                                criterion, mode, approx_chi_a)[0])

    def edge(i):
        return brentq(f, x[i], x[i + 1], xtol=edge_tol_gamma)

    flips = np.flatnonzero(inside[1:] != inside[:-1])
    edges = [edge(i) for i in flips]
    bounds = []
    start = x[0] if inside[0] else None
    for i, e in zip(flips, edges):
        if inside[i + 1]:
            start = e
        else:
            bounds.append((start, e))
            start = None
    if start is not None:
        bounds.append((start, x[-1]))
    out = []
    for lo, hi in bounds:
        out.append(BandReport(center=wm + gm * (lo + hi) / 2, lower=wm + gm * lo, upper=wm + gm * hi,
                              bandwidth_gamma_m=hi - lo, criterion=criterion))
    return out
