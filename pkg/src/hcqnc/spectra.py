"""Added-force noise spectral density, component by component.

All spectra are dimensionless; multiply by hbar m omega_m gamma_m (see
``to_si``) for N^2/Hz.
"""

from dataclasses import dataclass, fields

import numpy as np
from scipy.constants import hbar as HBAR, k as K_B

from .params import SqueezingState
from .response import bundle

COMPONENTS = ("s_th", "s_f", "s_at", "s_b", "s_h", "s_fb", "s_fh", "s_bh")
MODES = ("general", "perfect")


class SingularQuadrature(ValueError):
    """The homodyne angle makes u_theta vanish (no signal in the quadrature)."""

    def __init__(self, theta):
        super().__init__(f"u_theta = 0 at theta = {theta!r}: quadrature carries no force signal")
        self.theta = theta


@dataclass(frozen=True)
class SpectrumBreakdown:
    s_th: np.ndarray
    s_f: np.ndarray
    s_at: np.ndarray
    s_b: np.ndarray
    s_h: np.ndarray
    s_fb: np.ndarray
    s_fh: np.ndarray
    s_bh: np.ndarray
    total: np.ndarray
    omega: np.ndarray
    theta: np.ndarray
    mode: str

    def as_rows(self):
        """One dict per frequency, columns in field order."""
        cols = [f.name for f in fields(self)]
        arrs = {c: np.broadcast_to(np.asarray(getattr(self, c)), np.shape(self.total)) for c in cols if c != "mode"}
        n = np.size(self.total)
        rows = []
        for i in range(n):
            row = {c: float(np.ravel(arrs[c])[i]) for c in cols if c != "mode"}
            row["mode"] = self.mode
            rows.append(row)
        return rows


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode == "perfect"


def u_theta(theta, y):
    return np.cos(theta) - 2 * y * np.sin(theta)


def homodyne_b(theta, y):
    """B = sin(theta)/u_theta, the homodyne weight of the X_a^in channel."""
    theta = np.asarray(theta, dtype=float)
    u = u_theta(theta, y)
    if np.any(np.abs(u) < 1e-14):
        bad = theta[np.abs(u) < 1e-14] if theta.ndim else theta
        raise SingularQuadrature(float(np.ravel(bad)[0]))
    return np.sin(theta) / u


def thermal_term(params, thermal="exact"):
    if thermal == "exact":
        return params.n_bar_m + 0.5
    if thermal == "high_T":
        return K_B * params.temperature / (HBAR * params.omega_m)
    raise ValueError("thermal must be 'exact' or 'high_T'")


def _inputs(sq):
    N = sq.N
    rM, iM = sq.M.real, sq.M.imag
    return N, rM, iM


def base_terms(omega, params, squeezing, mode="general", approx_chi_a=True, thermal="exact"):
    """theta-independent components (s_th, s_f, s_at, s_b, s_fb)."""
    perfect = _check_mode(mode)
    p = params
    b = bundle(omega, p, approx_chi_a, perfect)
    bm = bundle(-np.asarray(omega, dtype=float), p, approx_chi_a, perfect)
    ka, D, y, g, gm = p.kappa, p.Delta_c, p.y, p.g, p.gamma_m
    N, rM, iM = _inputs(squeezing)
    m2 = np.abs(b.chi_m) ** 2
    ap2 = np.abs(b.chi_a_prime) ** 2
    Gam = p.gamma_m if perfect else p.Gamma
    w = b.omega

    s_th = np.full(w.shape, thermal_term(p, thermal))
    s_f = ka / (g**2 * gm * m2) * (
        D * np.imag(b.Z * (1 - 2j * iM))
        + (1 + 1 / (ka**2 * ap2) - 2 * b.chi_a_prime.real / (ka * ap2)) * (N + 0.5 - rM)
        + 4 * y**2 * (N + 0.5 + rM)
    )
    s_at = np.abs(b.A) ** 2 / 2 * (1 + (w**2 + Gam**2 / 4) / p.omega_m**2)
    if perfect:
        zero = np.zeros(w.shape)
        return dict(s_th=s_th, s_f=s_f, s_at=s_at, s_b=zero, s_fb=zero.copy()), b, bm
    X = 1 + (p.G / g) ** 2 * b.R
    s_b = 4 * g**2 / (ka * gm) * np.abs(X) ** 2 * (N + 0.5 + rM)
    s_fb = ka / gm * np.imag((2j * iM - 1) * b.Z / bm.chi_m * X) - 8 * y / gm * np.real(X / bm.chi_m) * (N + 0.5 + rM)
    return dict(s_th=s_th, s_f=s_f, s_at=s_at, s_b=s_b, s_fb=s_fb), b, bm


def homodyne_coefficients(params, squeezing, b, bm, perfect, form="consistent"):
    """Coefficients with s_h = c_h B^2, s_fh = c_fh B, s_bh = c_bh B."""
    p = params
    ka, D, y, g, gm = p.kappa, p.Delta_c, p.y, p.g, p.gamma_m
    N, rM, iM = _inputs(squeezing)
    mp, mm = 0.5 + 2 * y * y, 0.5 - 2 * y * y
    m2 = np.abs(b.chi_m) ** 2
    ap2 = np.abs(b.chi_a_prime) ** 2
    c_h = 2 / (g**2 * ka * gm * ap2 * m2) * (mp * (N + 0.5) + mm * rM + 2 * y * iM)

    # the literal interference terms use Z(w) and X(w) where the solution needs Z(-w), X(-w)
    Zfh = b.Z if form == "literal" else bm.Z
    c_fh = -1 / (g**2 * gm * m2) * (
        2 * D * np.real(Zfh / bm.chi_a_prime) * (N + 0.5 - rM)
        - 2 * D * np.real(b.chi_a / bm.chi_a_prime) * (N + 0.5 + rM)
        - np.imag((2j * iM + 1) * (4 * y**2 / b.chi_a_prime + (1 - ka * bm.Z) / bm.chi_a_prime - 1 / (ka * ap2)))
    )
    if perfect:
        c_bh = np.zeros(np.shape(c_h))
    else:
        R = b.R if form == "literal" else bm.R
        W = (1 + (p.G / g) ** 2 * R) / (b.chi_m * b.chi_a_prime)
        c_bh = -2 / (ka * gm) * (2 * y * np.imag((2j * iM + 1) * W) + 2 * np.real(W) * (N + 0.5 + rM))
    return c_h, c_fh, c_bh


def breakdown(omega, params, squeezing: SqueezingState, theta=0.0, mode="general",
              approx_chi_a=True, thermal="exact", form="consistent") -> SpectrumBreakdown:
    """Eight-component force-noise PSD at frequencies omega and angle theta.

    B and u_theta use chi_a Delta_c -> 2y.  form="literal" builds s_fh and
    s_bh from Z(w), R(w) in place of Z(-w), R(-w); that disagrees with the
    linear-response solution, so "consistent" is the default.
    """
    perfect = _check_mode(mode)
    if form not in ("consistent", "literal"):
        raise ValueError("form must be 'consistent' or 'literal'")
    theta = np.asarray(theta, dtype=float)
    B = homodyne_b(theta, params.y)
    base, b, bm = base_terms(omega, params, squeezing, mode, approx_chi_a, thermal)
    c_h, c_fh, c_bh = homodyne_coefficients(params, squeezing, b, bm, perfect, form)
    s_h = c_h * B**2
    s_fh = c_fh * B
    s_bh = c_bh * B
    parts = dict(base, s_h=s_h, s_fh=s_fh, s_bh=s_bh)
    shape = np.broadcast(b.omega, theta).shape
    parts = {k: np.broadcast_to(np.asarray(v, dtype=float), shape).copy() for k, v in parts.items()}
    total = sum(parts[k] for k in COMPONENTS)
    return SpectrumBreakdown(total=total, omega=np.broadcast_to(b.omega, shape).copy(),
                             theta=np.broadcast_to(theta, shape).copy(),
                             mode=mode, **{k: parts[k] for k in COMPONENTS})


def perfect_cqnc_spectrum(omega, params, squeezing, theta=0.0, thermal="exact"):
    """Closed-form PSD under ideal cancellation, in terms of Sigma and Theta."""
    p = params
    y = p.y
    mp, mm = 0.5 + 2 * y * y, 0.5 - 2 * y * y
    N, rM, iM = _inputs(squeezing)
    w = np.asarray(omega, dtype=float)
    theta = np.asarray(theta, dtype=float)
    B = homodyne_b(theta, y)
    cm2 = np.abs(p.omega_m / (p.omega_m**2 - w**2 + 1j * w * p.gamma_m)) ** 2
    sigma = mp**2 * N + (8 * y * y - mp**2) * rM - 4 * y * mm * iM
    K, L = perfect_kl(y, squeezing)
    big_theta = B**2 * L + B * K
    return (thermal_term(p, thermal) + 0.5 * (1 + (w**2 + p.gamma_m**2 / 4) / p.omega_m**2)
            + p.kappa / (p.g**2 * p.gamma_m * cm2) * (0.5 * mp**2 + sigma + big_theta))


def perfect_kl(y, squeezing):
    """K and L of the perfect-cancellation Theta term (Theta = L B^2 + K B)."""
    mp, mm = 0.5 + 2 * y * y, 0.5 - 2 * y * y
    N, rM, iM = _inputs(squeezing)
    K = 4 * y * mp**2 * (N + 0.5) + 4 * y * mp * (mm + 1) * rM - 2 * mp * (mm - 4 * y * y) * iM
    L = 2 * mp**3 * (N + 0.5) + 2 * mm * mp**2 * rM + 4 * y * mp**2 * iM
    return K, L


def sql(omega, params):
    """Standard quantum limit 1/(gamma_m |chi_m|)."""
    w = np.asarray(omega, dtype=float)
    cm = params.omega_m / (params.omega_m**2 - w**2 + 1j * w * params.gamma_m)
    return 1.0 / (params.gamma_m * np.abs(cm))


def to_si(s, params):
    """Dimensionless PSD to N^2/Hz."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("PSD must be non-negative")
    return s * params.force_scale**2
