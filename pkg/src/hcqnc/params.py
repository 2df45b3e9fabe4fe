"""Physical parameters, derived couplings and squeezed-input states."""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c as C_LIGHT, hbar as HBAR, k as K_B

TWO_PI = 2.0 * math.pi
N_MAX = 25.0
Q_MIN = 1e3

CONSTANTS = {"hbar": HBAR, "k_B": K_B, "c": C_LIGHT}


class ConfigError(ValueError):
    """Invalid configuration or out-of-domain parameter."""


@dataclass(frozen=True)
class RawConfig:
    """Sensor parameters in ordinary Hz and SI units."""

    omega_m: float = 300e3
    gamma_m: float = 0.03
    kappa: float = 10e6
    g0: float = 300.0
    lambda_L: float = 780e-9
    P_L: float = 24e-6
    mass: float = 1e-12
    temperature: float = 0.0
    y: float = 0.0
    coupling_ratio: float = 1.0
    decay_ratio: float = 1.0

    def __post_init__(self):
        for name in ("omega_m", "gamma_m", "kappa", "g0", "mass", "P_L"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        if not self.lambda_L > 0:
            raise ConfigError("lambda_L must be positive")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.coupling_ratio < 0 or self.decay_ratio <= 0:
            raise ConfigError("coupling_ratio must be >= 0 and decay_ratio > 0")


@dataclass(frozen=True)
class SystemParams:
    """Angular-frequency parameter set used by every computation.

    G and Gamma follow g and gamma_m through the fixed ratios, so changing
    the drive power keeps the atomic mismatch constant.
    """

    omega_m: float
    gamma_m: float
    kappa: float
    g0: float
    g: float
    y: float = 0.0
    coupling_ratio: float = 1.0
    decay_ratio: float = 1.0
    mass: float = 1e-12
    temperature: float = 0.0
    lambda_L: float = 780e-9
    P_L: float = 24e-6
    omega_L: float = field(default=float("nan"))
    E_L: float = field(default=float("nan"))
    alpha_s: float = field(default=float("nan"))

    @property
    def G(self):
        return self.coupling_ratio * self.g

    @property
    def Gamma(self):
        return self.decay_ratio * self.gamma_m

    @property
    def Delta_c(self):
        return self.y * self.kappa

    @property
    def Q_m(self):
        return self.omega_m / self.gamma_m

    @property
    def n_bar_m(self):
        return thermal_occupation(self.omega_m, self.temperature)

    @property
    def force_scale(self):
        """sqrt(hbar m omega_m gamma_m), N/sqrt(Hz)."""
        return math.sqrt(HBAR * self.mass * self.omega_m * self.gamma_m)

    @property
    def power_ratio(self):
        """(g/g0)^2, the drive-power axis of the figures."""
        return (self.g / self.g0) ** 2

    def replace(self, **changes):
        return replace(self, **changes)

    def with_power_ratio(self, ratio):
        """Same system driven so that (g/g0)^2 = ratio."""
        if ratio <= 0:
            raise ConfigError("power ratio must be positive")
        scale = ratio / self.power_ratio
        return replace(
            self,
            g=self.g0 * math.sqrt(ratio),
            P_L=self.P_L * scale,
            E_L=self.E_L * math.sqrt(scale),
            alpha_s=self.alpha_s * math.sqrt(scale),
        )

    def with_mismatch(self, coupling=None, decay=None):
        """Set (G-g)/g and (Gamma-gamma_m)/gamma_m."""
        kw = {}
        if coupling is not None:
            kw["coupling_ratio"] = 1.0 + coupling
        if decay is not None:
            kw["decay_ratio"] = 1.0 + decay
        return replace(self, **kw)

    def as_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        for k in ("G", "Gamma", "Delta_c", "Q_m", "n_bar_m", "force_scale", "power_ratio"):
            d[k] = getattr(self, k)
        return d


def thermal_occupation(omega, temperature):
    if temperature <= 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega / (K_B * temperature))


def derive(config: RawConfig) -> SystemParams:
    """Convert a RawConfig to angular units and compute g from the drive power."""
    w_m = TWO_PI * config.omega_m
    g_m = TWO_PI * config.gamma_m
    if w_m / g_m <= Q_MIN:
        raise ConfigError(f"Q_m = {w_m / g_m:.3g} violates the high-Q assumption (> {Q_MIN:g})")
    kappa = TWO_PI * config.kappa
    g0 = TWO_PI * config.g0
    omega_L = TWO_PI * C_LIGHT / config.lambda_L
    E_L = math.sqrt(config.P_L * kappa / (HBAR * omega_L))
    alpha_s = 2.0 * E_L / kappa
    return SystemParams(
        omega_m=w_m,
        gamma_m=g_m,
        kappa=kappa,
        g0=g0,
        g=2.0 * g0 * alpha_s,
        y=config.y,
        coupling_ratio=config.coupling_ratio,
        decay_ratio=config.decay_ratio,
        mass=config.mass,
        temperature=config.temperature,
        lambda_L=config.lambda_L,
        P_L=config.P_L,
        omega_L=omega_L,
        E_L=E_L,
        alpha_s=alpha_s,
    )


def default_params(**overrides) -> SystemParams:
    """Default parameter set: 300 kHz oscillator, 10 MHz cavity, 24 uW drive."""
    return derive(RawConfig(**overrides))


@dataclass(frozen=True)
class SqueezingState:
    """Broadband squeezed vacuum: <a a^dag> - 1/2 -> N, <a a> -> M."""

    N: float = 0.0
    M: complex = 0j
    allow_large: bool = False

    def __post_init__(self):
        object.__setattr__(self, "M", complex(self.M))
        if not self.N >= 0:
            raise ConfigError("N must be >= 0")
        if self.N > N_MAX and not self.allow_large:
            raise ConfigError(f"N = {self.N} exceeds N_max = {N_MAX:g}; pass allow_large=True to override")
        bound = self.N * (self.N + 1.0)
        if abs(self.M) ** 2 > bound * (1 + 1e-12) + 1e-300:
            raise ConfigError("|M|^2 exceeds N(N+1)")

    @property
    def phase(self):
        return math.atan2(self.M.imag, self.M.real)

    @property
    def is_pure(self):
        return math.isclose(abs(self.M) ** 2, self.N * (self.N + 1.0), rel_tol=1e-9, abs_tol=1e-300)


VACUUM = SqueezingState()


def squeezing_pure(N, phi=0.0, allow_large=False) -> SqueezingState:
    if N < 0:
        raise ConfigError("N must be >= 0")
    m = math.sqrt(N * (N + 1.0))
    return SqueezingState(N, m * complex(math.cos(phi), math.sin(phi)), allow_large)


def squeezing_from_opo(epsilon, gamma_opo, allow_large=False) -> SqueezingState:
    """Squeezing delivered by a sub-threshold degenerate OPO."""
    eps = complex(epsilon)
    a = abs(eps)
    if not gamma_opo > 0:
        raise ConfigError("gamma_opo must be positive")
    if a >= gamma_opo / 2:
        raise ConfigError("OPO at or above threshold (|epsilon| >= gamma/2)")
    bx = gamma_opo / 2 - a
    by = gamma_opo / 2 + a
    M = eps * gamma_opo / 2 * (1 / bx**2 + 1 / by**2)
    N = a * gamma_opo / 2 * (1 / bx**2 - 1 / by**2)
    # clip roundoff so the pure OPO output passes the bound check
    lim = math.sqrt(N * (N + 1.0))
    if abs(M) > lim:
        M = M / abs(M) * lim
    return SqueezingState(N, M, allow_large)


def squeezing_from_level(level_db, phi=0.0, allow_large=False) -> SqueezingState:
    """Pure squeezing from a squeezing level V_- quoted in (negative) dB."""
    if level_db > 0:
        raise ConfigError("squeezing level must be <= 0 dB")
    v = 10.0 ** (level_db / 10.0)
    N = 0.25 * (v**-0.5 - v**0.5) ** 2
    return squeezing_pure(N, phi, allow_large)


def _mu(y):
    return 0.5 + 2 * y * y, 0.5 - 2 * y * y


def sigma_term(y, N, M):
    """Squeezing contribution to the shot noise under perfect cancellation."""
    mp, mm = _mu(y)
    M = np.asarray(M)
    return mp**2 * N + (8 * y * y - mp**2) * M.real - 4 * y * mm * M.imag


def phi_opt(y):
    """Squeezing phase minimising sigma_term at fixed |M|, in (-pi, pi]."""
    mp, mm = _mu(y)
    # minimise a cos(phi) + b sin(phi): phi = atan2(-b, -a)
    phi = math.atan2(4 * y * mm, mp**2 - 8 * y * y)
    if phi <= -math.pi:
        phi += TWO_PI
    return phi


CONFIG_KEYS = {
    "omega_m_hz": ("omega_m", 1.0),
    "gamma_m_hz": ("gamma_m", 1.0),
    "kappa_hz": ("kappa", 1.0),
    "g0_hz": ("g0", 1.0),
    "lambda_nm": ("lambda_L", 1e-9),
    "power_uw": ("P_L", 1e-6),
    "mass_kg": ("mass", 1.0),
    "temperature_k": ("temperature", 1.0),
    "y": ("y", 1.0),
    "coupling_ratio": ("coupling_ratio", 1.0),
    "decay_ratio": ("decay_ratio", 1.0),
}
SQUEEZING_KEYS = {"n", "phase_rad", "pure"}


@dataclass(frozen=True)
class Config:
    raw: RawConfig
    params: SystemParams
    squeezing: SqueezingState
    phase_spec: object


def parse_config(data: dict, allow_large=False) -> Config:
    """Validate a config mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - set(CONFIG_KEYS) - {"squeezing"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = {}
    for key, (name, scale) in CONFIG_KEYS.items():
        if key in data:
            try:
                kw[name] = float(data[key]) * scale
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be a number") from None
    raw = RawConfig(**kw)
    params = derive(raw)
    sq = data.get("squeezing", {}) or {}
    if not isinstance(sq, dict):
        raise ConfigError("squeezing must be an object")
    bad = set(sq) - SQUEEZING_KEYS
    if bad:
        raise ConfigError(f"unknown squeezing keys: {sorted(bad)}")
    n = float(sq.get("n", 0.0))
    phase = sq.get("phase_rad", "opt")
    pure = bool(sq.get("pure", True))
    if phase == "opt":
        phi = phi_opt(params.y)
    else:
        try:
            phi = float(phase)
        except (TypeError, ValueError):
            raise ConfigError('phase_rad must be a number or "opt"') from None
    if pure:
        state = squeezing_pure(n, phi, allow_large)
    else:
        state = SqueezingState(n, 0j, allow_large)
    return Config(raw, params, state, phase)


def load_config(path, allow_large=False) -> Config:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, allow_large)


def config_to_dict(raw: RawConfig, squeezing: SqueezingState, phase_spec="opt"):
    """Inverse of parse_config for round-tripping resolved parameters."""
    out = {}
    for key, (name, scale) in CONFIG_KEYS.items():
        out[key] = getattr(raw, name) / scale
    phase = phase_spec if phase_spec == "opt" else float(phase_spec)
    out["squeezing"] = {"n": squeezing.N, "phase_rad": phase, "pure": squeezing.is_pure or squeezing.N == 0}
    return out
