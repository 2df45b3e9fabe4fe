"""Direct linear-response solution of the quadrature Langevin equations.

Independent of the closed-form spectra: the six fluctuation equations are
solved numerically at each frequency and the force-referred noise is formed
from the solved output weights.
"""

from dataclasses import dataclass

import mpmath
import numpy as np

from .params import SqueezingState

STATE = ("Xa", "Pa", "Xb", "Pb", "Xd", "Pd")
INPUTS = ("Xa_in", "Pa_in", "f", "F_ext", "Xd_in", "Pd_in")
F_EXT = 3
# above this condition number the solve switches to extended precision
COND_DOUBLE = 1e6
MP_DIGITS = 40


class SingularSystem(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class LinearSystem:
    drift: np.ndarray
    input_map: np.ndarray


def linear_system(params) -> LinearSystem:
    """Drift matrix and input map of the linearised quadrature equations."""
    p = params
    ka, D, g, G = p.kappa, p.Delta_c, p.g, p.G
    wm, gm, Gam = p.omega_m, p.gamma_m, p.Gamma
    A = np.zeros((6, 6))
    A[0, 0] = -ka / 2
    A[0, 1] = D
    A[1, 0] = -D
    A[1, 1] = -ka / 2
    A[1, 2] = -g
    A[1, 4] = -G
    A[2, 3] = wm
    A[3, 2] = -wm
    A[3, 3] = -gm
    A[3, 0] = -g
    A[4, 5] = -wm
    A[4, 4] = -Gam / 2
    A[5, 4] = wm
    A[5, 5] = -Gam / 2
    A[5, 0] = -G
    Bm = np.zeros((6, 6))
    Bm[0, 0] = Bm[1, 1] = np.sqrt(ka)
    Bm[3, 2] = Bm[3, 3] = np.sqrt(gm)
    Bm[4, 4] = Bm[5, 5] = np.sqrt(Gam)
    return LinearSystem(A, Bm)


def correlation_matrix(squeezing: SqueezingState, n_bar=0.0, atomic_cross="none"):
    """Input correlation table over INPUTS (F_ext row/column left at zero).

    atomic_cross="commutator" adds the +-i/2 X_d/P_d commutator entries;
    "none" drops them, which is what the closed-form atomic term assumes.
    """
    N, M = squeezing.N, squeezing.M
    C = np.zeros((6, 6), dtype=complex)
    C[0, 0] = N + 0.5 + M.real
    C[1, 1] = N + 0.5 - M.real
    C[0, 1] = 0.5j * (1 - 2j * M.imag)
    C[1, 0] = -0.5j * (1 + 2j * M.imag)
    C[2, 2] = n_bar + 0.5
    C[4, 4] = C[5, 5] = 0.5
    if atomic_cross == "commutator":
        C[5, 4] = 0.5j
        C[4, 5] = -0.5j
    elif atomic_cross != "none":
        raise ValueError("atomic_cross must be 'none' or 'commutator'")
    return C


def _solve_mp(Mx, rhs, omega, cond):
    """High-precision solve; near omega_m the mechanical and atomic blocks are nearly singular."""
    with mpmath.workdps(MP_DIGITS):
        try:
            T = mpmath.inverse(mpmath.matrix(Mx.tolist())) * mpmath.matrix(rhs.tolist())
        except ZeroDivisionError:
            raise SingularSystem(f"singular response at omega={omega!r} (cond={cond:.3g})") from None
        return np.array([[complex(T[i, j]) for j in range(T.cols)] for i in range(T.rows)])


def solve_output(omega, params, theta=0.0, approx_chi_a=False):
    """Weights of the measured quadrature over INPUTS at a single frequency."""
    sysm = linear_system(params)
    ka = params.kappa
    Mx = 1j * omega * np.eye(6) - sysm.drift
    if approx_chi_a:
        # cavity response pinned to 2/kappa
        Mx[0, 0] = Mx[1, 1] = ka / 2
    # row equilibration: raw entries span kappa down to gamma_m
    scale = np.max(np.abs(Mx), axis=1, keepdims=True)
    cond = np.linalg.cond(Mx / scale)
    if not np.isfinite(cond):
        raise SingularSystem(f"singular response at omega={omega!r} (cond={cond:.3g})")
    rhs = sysm.input_map.astype(complex)
    if cond <= COND_DOUBLE:
        T = np.linalg.solve(Mx, rhs)
    else:
        T = _solve_mp(Mx, rhs, omega, cond)
    x_out = np.sqrt(ka) * T[0]
    x_out[0] -= 1
    p_out = np.sqrt(ka) * T[1]
    p_out[1] -= 1
    return np.cos(theta) * p_out - np.sin(theta) * x_out


def force_noise_weights(omega, params, theta=0.0, approx_chi_a=False):
    """Output weights normalised to the F_ext channel (estimated-force units)."""
    w = solve_output(omega, params, theta, approx_chi_a)
    return w / w[F_EXT], w[F_EXT]


def psd_numeric(omega, params, squeezing, theta=0.0, approx_chi_a=False,
                atomic_cross="none", drop_inputs=()):
    """Force-noise PSD from the numerical solution (vectorised over omega)."""
    C = correlation_matrix(squeezing, params.n_bar_m, atomic_cross)
    keep = [i for i in range(6) if i != F_EXT and INPUTS[i] not in drop_inputs]
    C = C[np.ix_(keep, keep)]
    ws = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.empty(ws.shape)
    for i, w in enumerate(ws):
        wF = force_noise_weights(w, params, theta, approx_chi_a)[0][keep]
        s = wF @ C @ wF.conj()
        out[i] = 0.5 * (s + np.conj(s)).real
    return out if np.ndim(omega) else float(out[0])


def output_psd(omega, params, squeezing, theta=0.0, approx_chi_a=False, atomic_cross="none"):
    """PSD of the measured quadrature itself (noise only)."""
    C = correlation_matrix(squeezing, params.n_bar_m, atomic_cross)
    keep = [i for i in range(6) if i != F_EXT]
    C = C[np.ix_(keep, keep)]
    ws = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.empty(ws.shape)
    for i, w in enumerate(ws):
        wo = solve_output(w, params, theta, approx_chi_a)[keep]
        out[i] = (wo @ C @ wo.conj()).real
    return out if np.ndim(omega) else float(out[0])


def check(omega, params, squeezing, theta=0.0, approx_chi_a=True, mode="general"):
    """Relative error of the closed-form total against the oracle."""
    from .spectra import breakdown  # local import keeps the oracle itself independent

    ref = np.atleast_1d(psd_numeric(omega, params, squeezing, theta, approx_chi_a))
    ana = np.atleast_1d(breakdown(omega, params, squeezing, theta, mode, approx_chi_a).total)
    return np.abs(ana - ref) / np.abs(ref), ana, ref
