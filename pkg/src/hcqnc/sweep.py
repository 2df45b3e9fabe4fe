"""Grid evaluation and figure-reproduction presets."""

import csv
import io
import itertools
import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .metrics import signal_improvement, signal_response
from .optimize import optimize
from .params import CONSTANTS, SystemParams, default_params, phi_opt, squeezing_pure
from .spectra import breakdown, sql, to_si, u_theta

AXES = {
    "omega": "omega / omega_m",
    "omega_offset": "(omega - omega_m) / gamma_m",
    "power": "(g/g0)^2",
    "N": "squeezing occupation",
    "y": "Delta_c / kappa",
    "coupling_ratio": "G/g",
    "decay_ratio": "Gamma/gamma_m",
    "coupling_mismatch": "(G-g)/g",
    "decay_mismatch": "(Gamma-gamma_m)/gamma_m",
}
QUANTITIES = ("spectrum", "advantage_db", "sensitivity", "R_c", "improvement")
THREAD_ENV = "HCQNC_THREADS"


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in AXES:
            raise SweepError(f"unknown axis {self.name!r}; valid: {sorted(AXES)}")
        if self.points < 2:
            raise SweepError("axis needs at least 2 points")
        if not self.min < self.max:
            raise SweepError("axis min must be < max")
        if self.scale not in ("linear", "log"):
            raise SweepError("scale must be linear or log")
        if self.scale == "log" and self.min <= 0:
            raise SweepError("log axis needs positive bounds")

    def values(self):
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class SweepSpec:
    """One curve or surface: axes, fixed parameters and the quantity to tabulate.

    fixed holds overrides applied to the base SystemParams (any field or an
    axis name), plus N, phase ("opt" or radians) and omega / omega_offset when
    frequency is not swept.
    """

    axis1: Axis
    quantity: str
    fixed: dict = field(default_factory=dict)
    axis2: Axis = None
    theta_policy: object = "opt"
    mode: str = "general"
    approx_chi_a: bool = True
    label: str = ""

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise SweepError(f"unknown quantity {self.quantity!r}; valid: {QUANTITIES}")
        if self.mode not in ("general", "perfect"):
            raise SweepError("mode must be general or perfect")
        tp = self.theta_policy
        if not (tp in ("zero", "opt") or isinstance(tp, (int, float))):
            raise SweepError("theta_policy must be 'zero', 'opt' or a number")

    def to_dict(self):
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        allowed = {"axis1", "axis2", "quantity", "fixed", "theta_policy", "mode", "approx_chi_a", "label"}
        bad = set(d) - allowed
        if bad:
            raise SweepError(f"unknown sweep keys: {sorted(bad)}")
        if "axis1" not in d or "quantity" not in d:
            raise SweepError("sweep spec needs axis1 and quantity")
        d["axis1"] = Axis(**d["axis1"])
        if d.get("axis2"):
            d["axis2"] = Axis(**d["axis2"])
        return cls(**d)


def _apply(base: SystemParams, values: dict):
    p = base
    kw = {}
    extra = {}
    for k, v in values.items():
        if k == "power":
            p = p.with_power_ratio(v)
        elif k == "coupling_mismatch":
            kw["coupling_ratio"] = 1.0 + v
        elif k == "decay_mismatch":
            kw["decay_ratio"] = 1.0 + v
        elif k in ("y", "coupling_ratio", "decay_ratio", "temperature", "mass"):
            kw[k] = float(v)
        else:
            extra[k] = v
    if kw:
        p = p.replace(**kw)
    return p, extra


def _omega(p, extra):
    if "omega" in extra:
        return p.omega_m * np.asarray(extra["omega"], dtype=float)
    if "omega_offset" in extra:
        return p.omega_m + p.gamma_m * np.asarray(extra["omega_offset"], dtype=float)
    raise SweepError("no frequency given: sweep omega/omega_offset or fix one")


def evaluate(p, N, phase, omega, quantity, theta_policy="opt", mode="general", approx_chi_a=True):
    """Quantity columns over an omega array for one parameter point."""
    phi = phi_opt(p.y) if phase == "opt" else float(phase)
    sq = squeezing_pure(N, phi, allow_large=True)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        opt = optimize(omega, p, sq, mode, approx_chi_a)
    if theta_policy == "opt":
        theta = opt.theta_opt
    elif theta_policy == "zero":
        theta = np.zeros(omega.shape)
    else:
        theta = np.full(omega.shape, float(theta_policy))
    valid = np.broadcast_to(opt.valid, omega.shape)
    fallback = (theta_policy == "opt") & ~valid
    cols = {"theta": theta, "theta_opt": opt.theta_opt, "valid": valid, "fallback": fallback}
    if quantity in ("spectrum", "sensitivity", "advantage_db"):
        s0 = breakdown(omega, p, sq, 0.0, mode, approx_chi_a).total
        st = breakdown(omega, p, sq, theta, mode, approx_chi_a).total
        if quantity == "spectrum":
            cols.update(s_theta0=s0, s_theta=st, s_sql=sql(omega, p))
        elif quantity == "sensitivity":
            cols.update(sens_theta0=np.sqrt(to_si(s0, p)), sens_theta=np.sqrt(to_si(np.maximum(st, 0), p)))
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                cols.update(advantage_db=-10 * np.log10(st / s0))
    elif quantity == "R_c":
        cols.update(rc_theta0=signal_response(omega, p, 0.0, mode, approx_chi_a),
                    rc_theta=signal_response(omega, p, theta, mode, approx_chi_a))
    elif quantity == "improvement":
        cols.update(improvement=signal_improvement(theta, p.y), u_theta=u_theta(theta, p.y))
    return cols


def _threads():
    try:
        return max(1, int(os.environ.get(THREAD_ENV, "1")))
    except ValueError:
        return 1


def run(spec: SweepSpec, base: SystemParams = None):
    """Evaluate a sweep; rows are axis1-major and deterministic."""
    base = base or default_params()
    axes = [spec.axis1] + ([spec.axis2] if spec.axis2 else [])
    freq_axes = [a for a in axes if a.name in ("omega", "omega_offset")]
    if len(freq_axes) > 1:
        raise SweepError("at most one frequency axis")
    fixed = dict(spec.fixed)
    N = float(fixed.pop("N", 0.0))
    phase = fixed.pop("phase", "opt")
    grids = [a.values() for a in axes]
    cells = list(itertools.product(*[range(len(g)) for g in grids]))

    # group cells so the frequency axis is vectorised
    fa = next((i for i, a in enumerate(axes) if a.name in ("omega", "omega_offset")), None)
    groups = {}
    for cell in cells:
        key = tuple(c for i, c in enumerate(cell) if i != fa)
        groups.setdefault(key, []).append(cell)

    def work(key):
        members = groups[key]
        vals = dict(fixed)
        for cell in members[:1]:
            for i, c in enumerate(cell):
                if i != fa:
                    vals[axes[i].name] = grids[i][c]
        n_here = vals.pop("N", N)
        p, extra = _apply(base, vals)
        if fa is not None:
            extra = dict(extra)
            extra[axes[fa].name] = np.array([grids[fa][cell[fa]] for cell in members])
        omega = _omega(p, extra)
        cols = evaluate(p, n_here, phase, omega, spec.quantity, spec.theta_policy, spec.mode, spec.approx_chi_a)
        return members, omega, cols

    with ThreadPoolExecutor(_threads()) as ex:
        results = list(ex.map(work, list(groups)))
    rows = {}
    for members, omega, cols in results:
        for j, cell in enumerate(members):
            row = {"label": spec.label}
            for i, c in enumerate(cell):
                row[axes[i].name] = float(grids[i][c])
            row["omega_over_omega_m"] = float(np.ravel(omega)[j if np.size(omega) > 1 else 0] / base.omega_m)
            for k, v in cols.items():
                x = np.ravel(np.broadcast_to(v, np.shape(np.atleast_1d(omega))))[j]
                row[k] = bool(x) if isinstance(x, (np.bool_, bool)) else float(x)
            rows[cell] = row
    return [rows[c] for c in cells]


def _pw(lo=1e2, hi=1e12, n=201):
    return Axis("power", lo, hi, n, "log")


def _w(lo=0.9, hi=1.1, n=2001):
    return Axis("omega", lo, hi, n)


def _mm(c, d):
    return {"coupling_mismatch": c, "decay_mismatch": d}


def figure_preset(fig_id):
    """Expand a figure id into its curve specs."""
    S = SweepSpec
    presets = {
        "fig2": [S(_w(), "spectrum", {"y": y, "N": 10.0}, theta_policy=t, mode="perfect", label=f"y={y} theta={t}")
                 for y in (0.5, 1.0) for t in ("zero", "opt")],
        "fig2_1": [S(_w(), "advantage_db", {"y": y, "N": 10.0}, mode="perfect", label=f"y={y}") for y in (0.0, 0.5, 1.0)],
        "fig3": [S(_w(), "advantage_db", {"y": 0.5, "N": n}, mode="perfect", label=f"N={n:g}") for n in (0.0, 5.0, 15.0, 25.0)],
        "fig4": [S(_pw(), "spectrum", {"y": 0.5, "N": n, "omega_offset": 4.0}, theta_policy=t, mode="perfect",
                   label=f"N={n:g} theta={t}") for n in (0.0, 5.0, 15.0, 25.0) for t in ("opt", "zero")],
        "fig5": [S(_pw(), "advantage_db", {"y": 0.5, "N": n, "omega_offset": 4.0}, mode="perfect", label=f"N={n:g}")
                 for n in (0.0, 5.0, 15.0, 25.0)],
        "fig6": [S(_w(), "spectrum", dict(_mm(1e-3, -0.2), y=0.0, N=0.2, phase=0.0), theta_policy=t,
                   label=f"imperfect theta={t}") for t in ("zero", "opt")]
                + [S(_w(), "spectrum", {"y": 0.0, "N": 0.2, "phase": 0.0}, theta_policy="zero", mode="perfect",
                     label="perfect")],
        "fig7": [S(Axis("coupling_ratio", 0.98, 1.02, 81), "advantage_db",
                   {"y": 0.0, "N": 0.126, "phase": 0.0, "omega_offset": -4.0},
                   axis2=Axis("decay_ratio", 0.98, 1.02, 81), label="N=0.126")],
        "fig8": [S(Axis("N", 0.1, 0.5, 81), "advantage_db",
                   {"y": 0.0, "coupling_mismatch": 0.02, "phase": 0.0, "omega_offset": -4.0},
                   axis2=Axis("decay_mismatch", -0.1, 0.1, 81), label="(G-g)/g=0.02")],
        "fig9": [S(_pw(), "spectrum", dict(_mm(c, d), y=0.0, N=0.1245, phase=0.0, omega_offset=4.0), theta_policy=t,
                   label=f"dG={c:g} dGamma={d:g} theta={t}")
                 for c, d in ((0.0, 0.1), (0.01, 0.1), (0.1, -0.1), (0.2, -0.1)) for t in ("opt", "zero")],
        "fig10": [S(_pw(), "advantage_db", dict(_mm(c, d), y=0.0, N=0.1245, phase=0.0, omega_offset=4.0),
                    label=f"dG={c:g} dGamma={d:g}")
                  for c, d in ((0.0, 0.1), (0.01, 0.1), (0.05, 0.0), (0.1, 0.0), (0.1, 0.1), (0.2, -0.1))],
        "fig11": [S(_w(), "spectrum", dict(_mm(1e-5, 0.0), y=1.0, N=1.0), theta_policy=t, label=f"theta={t}")
                  for t in ("zero", "opt")],
        "fig13": [S(Axis("coupling_mismatch", 0.0, 0.03, 61), "advantage_db",
                    {"y": 1.0, "decay_mismatch": 0.2, "omega_offset": -4.0},
                    axis2=Axis("N", 1.0, 25.0, 49), label="dGamma=0.2")],
        "fig14": [S(_pw(), "spectrum", dict(_mm(c, d), y=1.0, N=20.0, omega_offset=-4.0), theta_policy=t,
                    label=f"dG={c:g} dGamma={d:g} theta={t}")
                  for c, d in ((0.05, 0.1), (0.1, 0.15), (0.15, 0.2)) for t in ("opt", "zero")],
        "fig15": [S(_pw(), "advantage_db", dict(_mm(c, d), y=1.0, N=20.0, omega_offset=-4.0),
                    label=f"dG={c:g} dGamma={d:g}")
                  for c, d in ((0.05, 0.1), (-0.05, -0.1), (0.1, 0.2), (-0.1, -0.2), (0.2, 0.3))],
        "fig16a": [S(_w(0.997, 1.003, 6001), "R_c", {"y": y, "N": 10.0}, theta_policy=t, mode="perfect",
                     label=f"y={y} theta={t}") for y in (1.0, 0.0) for t in ("opt", "zero")],
        "fig16b": [S(_w(0.997, 1.003, 6001), "R_c", dict(_mm(1e-4, 0.01), y=y, N=10.0), theta_policy=t,
                     label=f"y={y} theta={t}") for y in (0.0, 1.0) for t in ("opt", "zero")],
        "fig17": [S(_w(0.997, 1.003, 6001), "improvement", dict(_mm(1e-4, 0.1), y=y, N=10.0), label=f"y={y}")
                  for y in (0.0, 1.0)],
    }
    if fig_id not in presets:
        raise SweepError(f"unknown figure {fig_id!r}; available: {', '.join(FIGURES)}")
    return presets[fig_id]


FIGURES = ("fig2", "fig2_1", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11",
           "fig13", "fig14", "fig15", "fig16a", "fig16b", "fig17")


def run_figure(fig_id, base=None):
    rows = []
    for spec in figure_preset(fig_id):
        rows.extend(run(spec, base))
    return rows


def write_table(rows, fh, fmt="csv"):
    if fmt == "json":
        for r in rows:
            fh.write(json.dumps(r, sort_keys=False) + "\n")
        return
    if fmt != "csv":
        raise SweepError("format must be csv or json")
    if not rows:
        return
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def table_text(rows, fmt="csv"):
    buf = io.StringIO()
    write_table(rows, buf, fmt)
    return buf.getvalue()


def metadata(specs, base: SystemParams, config=None):
    return {
        "artifact_version": __version__,
        "constants": CONSTANTS,
        "params": base.as_dict(),
        "specs": [s.to_dict() for s in specs],
        "config": config,
    }
