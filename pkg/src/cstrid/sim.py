"""Scenario runner: the stacked plant + filters + Gram + LS+DREM + I&I system.

Stacked state (49 entries)::

    C_A, T | 5 filter states | Gram (15, packed) | mu_hat (5) | F (15, packed)
    | eta_hat (4) | z | rho_I | rho_I of the ideal estimator

Step boundaries are aligned with the discontinuities of piecewise-constant
signals, and the first step is split geometrically (``run.startup_levels``)
so the fast initial transient of the I&I loop is resolved without an
adaptive integrator.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .config import ScenarioConfig, set_key
from .excitation import GramAccumulator, gram_rhs
from .filters import filter_rhs, initial_filter_state, regressor
from .ii import excitation_m, ii_rhs_certainty_equivalent, ii_rhs_ideal, theta5_estimate
from .integrate import NonFiniteStateError, first_nonfinite
from .lsdrem import eta_hat_rhs, lsdrem_rhs, matrix_norm, mixing, sticky_th1
from .linalg import pack_sym, unpack_sym
from .plant import plant_rhs, theta_from_physical, tw_signal

# stacked state layout
I_CA, I_T = 0, 1
I_XF = 2
I_G = 7
I_MU = 22
I_F = 27
I_ETA = 42
I_Z = 46
I_RHO = 47
I_RHO_IDEAL = 48
N_STATE = 49

# parameter vector layout
P_THETA = 0
P_K0 = 5
P_K0_EST = 6
P_LAM = 7
P_ALPHA = 8
P_F0 = 9
P_BETA0 = 10
P_M = 11
P_GAMMA_A = 12
P_GAMMA_B = 13
P_MU0 = 14
P_SPECTRAL = 19
P_IDEAL = 20
N_PARAM = 21

# observation vector layout
O_Y = 0
O_PHI = 1
O_DELTA = 6
O_NORMF = 7
O_TH5 = 8
O_M = 9
O_TH5_IDEAL = 10
O_M_IDEAL = 11
N_OBS = 12

C_A_TOL = 1e-9
SCHEMA_VERSION = "cstrid-run-csv v1"


def _state_names():
    names = ["C_A", "T"]
    names += [f"filter[{s}]" for s in ("-T", "T-T_in", "-C_A bandpass", "-u", "-C_A lowpass")]
    tri = [(i, j) for i in range(5) for j in range(i, 5)]
    names += [f"G[{i + 1},{j + 1}]" for i, j in tri]
    names += [f"mu_hat[{i + 1}]" for i in range(5)]
    names += [f"F[{i + 1},{j + 1}]" for i, j in tri]
    names += [f"eta_hat[{i + 1}]" for i in range(4)]
    names += ["z", "rho_I", "rho_I_ideal"]
    return tuple(names)


STATE_NAMES = _state_names()

CSV_COLUMNS = (
    ["t", "C_A", "T", "T_in", "T_w", "u", "y"]
    + [f"phi{i}" for i in range(1, 6)]
    + ["lam_min_gram"]
    + [f"mu{i}" for i in range(1, 6)]
    + ["z", "Delta", "normF"]
    + [f"eta{i}" for i in range(1, 5)]
    + [f"th{i}_hat" for i in range(1, 6)]
    + [f"th{i}_err" for i in range(1, 6)]
    + ["rhoI", "m", "clamps"]
)
EXTRA_COLUMNS = ("rhoI_ideal", "th5_hat_ideal", "th5_err_ideal", "m_ideal")


@njit(cache=True)
def system_rhs(t, x, T_in, tw_mode, tw_const, p, counters):
    """Right-hand side of the stacked system.

    ``tw_mode`` 0 evaluates the closed-form heat-exchanger temperature, 1 uses
    ``tw_const``. ``counters[0]``/``counters[1]`` count exponent clamps of the
    certainty-equivalent/ideal I&I laws.
    """
    out = np.zeros(N_STATE)
    theta = p[P_THETA:P_THETA + 5]
    C_A = x[I_CA]
    T = x[I_T]
    T_w = tw_signal(t) if tw_mode == 0 else tw_const
    u = T_w - T

    dC, dT = plant_rhs(C_A, T, T_in, T_w, theta, p[P_K0])
    out[I_CA] = dC
    out[I_T] = dT

    xf = x[I_XF:I_XF + 5]
    filter_rhs(xf, C_A, T, T_in, u, p[P_LAM], out[I_XF:I_XF + 5])
    phi = np.empty(5)
    y = regressor(t, xf, C_A, T, T_in, u, p[P_LAM], phi)
    gram_rhs(phi, out[I_G:I_G + 15])

    mu = x[I_MU:I_MU + 5].copy()
    F = unpack_sym(x[I_F:I_F + 15], 5)
    z = x[I_Z]
    spectral = p[P_SPECTRAL] != 0.0
    dmu, dF, dz = lsdrem_rhs(mu, F, z, phi, y, p[P_ALPHA], p[P_BETA0], p[P_M], spectral)
    out[I_MU:I_MU + 5] = dmu
    pack_sym(dF, out[I_F:I_F + 15])
    out[I_Z] = dz

    Delta, Y = mixing(mu, F, z, p[P_F0], p[P_MU0:P_MU0 + 5].copy())
    eta = x[I_ETA:I_ETA + 4].copy()
    out[I_ETA:I_ETA + 4] = eta_hat_rhs(eta, Delta, Y, p[P_GAMMA_A])

    gb = p[P_GAMMA_B]
    drho, clamped = ii_rhs_certainty_equivalent(x[I_RHO], C_A, T, T_in, u, eta[1], eta[2], eta[3],
                                                p[P_K0_EST], gb)
    out[I_RHO] = drho
    if clamped:
        counters[0] += 1
    if p[P_IDEAL] != 0.0:
        drho_s, clamped_s = ii_rhs_ideal(x[I_RHO_IDEAL], C_A, T, T_in, u, theta, p[P_K0], gb)
        out[I_RHO_IDEAL] = drho_s
        if clamped_s:
            counters[1] += 1
    return out


@njit(cache=True)
def observe(t, x, T_in, T_w, p, out):
    """Derived signals at a sample (see the O_* layout)."""
    C_A = x[I_CA]
    T = x[I_T]
    u = T_w - T
    phi = np.empty(5)
    out[O_Y] = regressor(t, x[I_XF:I_XF + 5], C_A, T, T_in, u, p[P_LAM], phi)
    out[O_PHI:O_PHI + 5] = phi
    F = unpack_sym(x[I_F:I_F + 15], 5)
    Delta, _ = mixing(x[I_MU:I_MU + 5].copy(), F, x[I_Z], p[P_F0], p[P_MU0:P_MU0 + 5].copy())
    out[O_DELTA] = Delta
    out[O_NORMF] = matrix_norm(F, p[P_SPECTRAL] != 0.0)
    gb = p[P_GAMMA_B]
    out[O_TH5] = theta5_estimate(x[I_RHO], T, gb)
    out[O_M] = excitation_m(x[I_RHO], C_A, T, x[I_ETA + 2], p[P_K0_EST], gb)
    out[O_TH5_IDEAL] = theta5_estimate(x[I_RHO_IDEAL], T, gb)
    out[O_M_IDEAL] = excitation_m(x[I_RHO_IDEAL], C_A, T, p[P_THETA + 2], p[P_K0], gb)


# status codes reported by ``advance``
ST_OK = 0
ST_STAGE = 1
ST_T = 2
ST_CA = 3
ST_M = 4


@njit(cache=True)
def _state_status(x, p):
    if not x[I_T] > 0.0:
        return ST_T
    if x[I_CA] < -C_A_TOL:
        return ST_CA
    if p[P_IDEAL] != 0.0 and x[I_CA] > 0.0:
        m = excitation_m(x[I_RHO_IDEAL], x[I_CA], x[I_T], p[P_THETA + 2], p[P_K0], p[P_GAMMA_B])
        if not m > 0.0:
            return ST_M
    return ST_OK


@njit(cache=True)
def _rk4_system(t, x, h, T_in, tw_mode, tw_const, p, counters):
    # same tableau as integrate.rk4_step_jit, with a direct call so numba can cache it
    k1 = system_rhs(t, x, T_in, tw_mode, tw_const, p, counters)
    i = first_nonfinite(k1)
    if i >= 0:
        return x, 1, i
    k2 = system_rhs(t + 0.5 * h, x + (0.5 * h) * k1, T_in, tw_mode, tw_const, p, counters)
    i = first_nonfinite(k2)
    if i >= 0:
        return x, 2, i
    k3 = system_rhs(t + 0.5 * h, x + (0.5 * h) * k2, T_in, tw_mode, tw_const, p, counters)
    i = first_nonfinite(k3)
    if i >= 0:
        return x, 3, i
    k4 = system_rhs(t + h, x + h * k3, T_in, tw_mode, tw_const, p, counters)
    i = first_nonfinite(k4)
    if i >= 0:
        return x, 4, i
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0, -1


@njit(cache=True)
def advance(times, i0, i1, x, seg_tin, seg_mode, seg_const, p, counters, guard, status):
    """Step from ``times[i0]`` to ``times[i1]``; returns the new state.

    ``guard`` holds (eps_div, held th1, guard count) and is updated after
    every step. On failure ``status`` receives (code, step index, RK stage,
    state index) and the last good state is returned.
    """
    for i in range(i0, i1):
        a = times[i]
        xn, stage, idx = _rk4_system(a, x, times[i + 1] - a, seg_tin[i], seg_mode[i],
                                     seg_const[i], p, counters)
        if stage != 0:
            status[0] = ST_STAGE
            status[1] = i
            status[2] = stage
            status[3] = idx
            return x
        code = _state_status(xn, p)
        if code != ST_OK:
            status[0] = code
            status[1] = i + 1
            return xn
        x = xn
        th1, guarded = sticky_th1(x[I_ETA], x[I_ETA + 2], guard[0], guard[1])
        guard[1] = th1
        if guarded:
            guard[2] += 1.0
    return x


class SimulationError(RuntimeError):
    def __init__(self, t: float, component: str, message: str):
        self.t = t
        self.component = component
        super().__init__(f"t={t:.6g}: {component}: {message}")


def _raise_status(status, times, x, p):
    code, i, stage, idx = (int(v) for v in status)
    t = float(times[i])
    if code == ST_STAGE:
        raise NonFiniteStateError(t, STATE_NAMES[idx], f"stage {stage}")
    if code == ST_T:
        raise SimulationError(t, "T", f"temperature must stay positive, got {x[I_T]}")
    if code == ST_CA:
        raise SimulationError(t, "C_A", f"concentration went negative ({x[I_CA]})")
    m = excitation_m(x[I_RHO_IDEAL], x[I_CA], x[I_T], p[P_THETA + 2], p[P_K0], p[P_GAMMA_B])
    raise SimulationError(t, "rho_I_ideal", f"I&I excitation signal m={m} is not positive")


@dataclass
class RunRecord:
    columns: list
    data: np.ndarray
    summary: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        if name in self.extra:
            return self.extra[name]
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self["t"]

    def __len__(self) -> int:
        return self.data.shape[0]


class System:
    """Numerical parameters and initial state of one scenario."""

    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.theta = theta_from_physical(cfg.plant)
        self.k0 = cfg.plant.k0
        self.k0_est = cfg.plant.k0 * (1.0 + cfg.estimator.k0_error)
        self.tin = cfg.tin_signal()
        self.tw = cfg.tw_signal()
        g = cfg.gains
        p = np.zeros(N_PARAM)
        p[P_THETA:P_THETA + 5] = self.theta.as_array()
        p[P_K0] = self.k0
        p[P_K0_EST] = self.k0_est
        p[P_LAM] = g.lam
        p[P_ALPHA] = g.alpha
        p[P_F0] = g.f0
        p[P_BETA0] = g.beta0
        p[P_M] = g.M
        p[P_GAMMA_A] = g.gamma_a
        p[P_GAMMA_B] = g.gamma_b
        p[P_MU0:P_MU0 + 5] = cfg.init.mu0
        p[P_SPECTRAL] = 1.0 if cfg.estimator.norm == "spectral" else 0.0
        p[P_IDEAL] = 1.0 if cfg.estimator.ideal else 0.0
        self.p = p

    def initial_state(self) -> np.ndarray:
        ic = self.cfg.init
        x = np.zeros(N_STATE)
        x[I_CA] = ic.C_A
        x[I_T] = ic.T
        u0 = self.tw(0.0) - ic.T
        x[I_XF:I_XF + 5] = initial_filter_state(ic.C_A, ic.T, self.tin(0.0), u0, self.cfg.filters.init)
        x[I_MU:I_MU + 5] = ic.mu0
        F0 = np.eye(5) / self.cfg.gains.f0
        pack_sym(F0, x[I_F:I_F + 15])
        x[I_ETA:I_ETA + 4] = ic.eta0
        x[I_Z] = 1.0
        x[I_RHO] = ic.rhoI
        x[I_RHO_IDEAL] = ic.rhoI
        return x

    def breakpoints(self, horizon: float):
        bps = set(self.tin.breakpoints) | set(self.tw.breakpoints)
        return sorted(b for b in bps if 0.0 < b < horizon)

    def segment_inputs(self, a: float, b: float):
        T_in = self.tin.segment_value(a, b)
        if self.tw.smooth:
            return T_in, 0, 0.0
        return T_in, 1, self.tw.segment_value(a, b)


def time_grid(horizon: float, h: float, output_interval: float, breakpoints=(), startup_levels: int = 0):
    """Step endpoints and the mask of sampled endpoints.

    Uniform points k*h, with the breakpoints merged in (snapped when within
    1e-6*h of a grid point), the horizon appended, and ``startup_levels``
    geometric points h*2**-j inside the first step. Sampled: t=0, every
    ``output_interval``, each breakpoint and the final time.
    """
    if horizon == 0:
        return np.zeros(1), np.ones(1, dtype=bool)
    dec = int(round(output_interval / h))
    n = int(math.floor(horizon / h + 1e-9))
    pts = {}
    for k in range(n + 1):
        pts[k] = (k * h, k % dec == 0)
    times = [v for v in pts.values()]
    snap = 1e-6 * h
    for b in breakpoints:
        k = int(round(b / h))
        if k in pts and abs(k * h - b) <= snap:
            times[k] = (b, True)
        else:
            times.append((b, True))
    if abs(n * h - horizon) <= snap:
        times[n] = (horizon, True)
    else:
        times.append((horizon, True))
    first = min(h, horizon)
    for j in range(startup_levels, 0, -1):
        times.append((first * 2.0 ** -j, False))
    times.sort(key=lambda item: item[0])
    t = np.array([a for a, _ in times])
    mask = np.array([m for _, m in times])
    keep = np.concatenate([[True], np.diff(t) > 0])
    return t[keep], mask[keep]


def run_scenario(cfg: ScenarioConfig, record_every_step: bool = False) -> RunRecord:
    """Integrate one scenario and return its decimated time series.

    ``record_every_step`` samples every endpoint of the step grid instead of
    every ``run.output_interval``.
    """
    wall0 = time.perf_counter()
    sysm = System(cfg)
    p = sysm.p
    x = sysm.initial_state()
    ro = cfg.run
    times, mask = time_grid(ro.horizon, ro.step, ro.output_interval,
                            sysm.breakpoints(ro.horizon), ro.startup_levels)
    if record_every_step:
        mask = np.ones_like(mask)
    counters = np.zeros(2, dtype=np.int64)
    eps = cfg.estimator.eps_div
    guard = np.array([eps, math.nan, 0.0])
    gram = GramAccumulator(cfg.estimator.ie_threshold)
    theta = sysm.theta.as_array()
    obs = np.empty(N_OBS)
    rows, extra_rows = [], []
    ideal = cfg.estimator.ideal

    n_steps = len(times) - 1
    seg_tin = np.empty(n_steps)
    seg_mode = np.empty(n_steps, dtype=np.int64)
    seg_const = np.empty(n_steps)
    for i in range(n_steps):
        seg_tin[i], seg_mode[i], seg_const[i] = sysm.segment_inputs(times[i], times[i + 1])

    def sample(t):
        T_in = sysm.tin(t)
        T_w = sysm.tw(t)
        observe(t, x, T_in, T_w, p, obs)
        th_hat = np.array([guard[1], x[I_ETA + 1], x[I_ETA + 2], x[I_ETA + 3], obs[O_TH5]])
        G = unpack_sym(x[I_G:I_G + 15], 5)
        gram.observe(t, G)
        row = [t, x[I_CA], x[I_T], T_in, T_w, T_w - x[I_T], obs[O_Y], *obs[O_PHI:O_PHI + 5],
               gram.lam_min, *x[I_MU:I_MU + 5], x[I_Z], obs[O_DELTA], obs[O_NORMF],
               *x[I_ETA:I_ETA + 4], *th_hat, *(th_hat - theta), x[I_RHO], obs[O_M],
               float(counters.sum())]
        rows.append(row)
        if ideal:
            extra_rows.append([x[I_RHO_IDEAL], obs[O_TH5_IDEAL], obs[O_TH5_IDEAL] - theta[4],
                               obs[O_M_IDEAL]])

    guard[1], guarded = sticky_th1(x[I_ETA], x[I_ETA + 2], eps, guard[1])
    guard[2] += guarded
    sample(times[0])
    status = np.zeros(4, dtype=np.int64)
    sample_idx = np.flatnonzero(mask)
    i0 = 0
    for i1 in sample_idx[1:]:
        x = advance(times, i0, i1, x, seg_tin, seg_mode, seg_const, p, counters, guard, status)
        if status[0] != ST_OK:
            _raise_status(status, times, x, p)
        sample(times[i1])
        i0 = i1

    data = np.array(rows, dtype=float)
    rec = RunRecord(columns=list(CSV_COLUMNS), data=data)
    if ideal:
        ex = np.array(extra_rows, dtype=float)
        for j, name in enumerate(EXTRA_COLUMNS):
            rec.extra[name] = ex[:, j]
    rec.summary = _summary(rec, sysm, counters, int(guard[2]), gram, n_steps,
                           time.perf_counter() - wall0)
    return rec


def _summary(rec, sysm, counters, guard_count, gram, n_steps, wall):
    theta = sysm.theta.as_array()
    last = rec.data[-1]
    th_hat = np.array([last[rec.columns.index(f"th{i}_hat")] for i in range(1, 6)])
    out = {
        "final_time": float(last[0]),
        "steps": int(n_steps),
        "samples": len(rec),
        "theta_true": theta.tolist(),
        "theta_hat_final": th_hat.tolist(),
        "rel_err_final": (np.abs(th_hat - theta) / np.abs(theta)).tolist(),
        "ie_crossing_time": gram.crossing_time,
        "lam_min_gram_final": gram.lam_min,
        "clamps_ce": int(counters[0]),
        "clamps_ideal": int(counters[1]),
        "guard_count": guard_count,
        "wall_time_s": wall,
    }
    if "th5_err_ideal" in rec.extra:
        out["th5_rel_err_ideal_final"] = float(abs(rec.extra["th5_err_ideal"][-1]) / theta[4])
    return out


SWEEP_PARAMETERS = {
    "gamma_a": "gains.gamma_a",
    "gamma_b": "gains.gamma_b",
    "k0_error": "estimator.k0_error",
}


@dataclass
class SweepResult:
    parameter: str
    value: float
    record: RunRecord | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.record is not None


def _sweep_one(args):
    cfg, parameter, value = args
    try:
        rec = run_scenario(set_key(cfg, SWEEP_PARAMETERS[parameter], float(value)))
        return SweepResult(parameter, value, rec)
    except Exception as exc:  # isolate per-run failures
        return SweepResult(parameter, value, None, f"{type(exc).__name__}: {exc}")


def sweep(cfg: ScenarioConfig, parameter: str, values, jobs: int = 1) -> list:
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"sweep parameter must be one of {sorted(SWEEP_PARAMETERS)}")
    tasks = [(cfg, parameter, v) for v in values]
    if jobs <= 1 or len(tasks) <= 1:
        return [_sweep_one(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_one, tasks))


def sweep_table(results) -> list:
    rows = []
    for r in results:
        row = {"parameter": r.parameter, "value": r.value, "status": "ok" if r.ok else "failed"}
        if r.ok:
            s = r.record.summary
            for i, e in enumerate(s["rel_err_final"], 1):
                row[f"th{i}_rel_err"] = e
            row["ie_crossing_time"] = s["ie_crossing_time"]
            row["clamps"] = s["clamps_ce"] + s["clamps_ideal"]
            row["guard_count"] = s["guard_count"]
        else:
            row["error"] = r.error
        rows.append(row)
    return rows


def write_csv(rec: RunRecord, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {SCHEMA_VERSION}\n")
            fh.write(",".join(rec.columns) + "\n")
            for row in rec.data:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write run CSV to {path}: {exc}") from exc


def read_csv(path) -> RunRecord:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    columns = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln],
                    dtype=float).reshape(-1, len(columns))
    return RunRecord(columns=columns, data=data)
