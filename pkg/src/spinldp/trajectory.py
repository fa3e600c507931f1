"""Discretized action functionals and optimal-trajectory solvers.

The action of a path gamma on [0, T] sampled at n+1 uniform nodes is

    A = dt * sum_i L(gamma_i, (gamma_{i+1} - gamma_i)/dt),   i = 0..n-1,

forward-difference velocities with the state at the left node.  This makes
the discrete action exactly additive over sub-intervals, which the segment
additivity checks rely on.

Minimization is multi-start Polak-Ribiere conjugate gradient with Armijo
backtracking; candidate steps with infinite integrands are rejected, never
averaged, so domain boundaries act as hard feasibility walls.  Plain
gradient descent (the first cut) stalls on fine grids because the discrete
Hessian conditioning grows like steps^2; CG keeps the same first-order,
line-searched structure and converges in O(steps) iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .seeding import rng_from
from .errors import DomainExit, NoFeasiblePath

__all__ = [
    "TrajectoryGrid",
    "LagrangianModel",
    "FixedStart",
    "OpenStart",
    "ActionProblem",
    "action_integral",
    "minimize_action_fixed",
    "minimize_action_open_start",
    "euler_lagrange_residual",
    "hamilton_flow_integrate",
]


@dataclass(frozen=True)
class TrajectoryGrid:
    """Uniformly time-sampled path on [0, T] with steps+1 values."""

    T: float
    steps: int
    values: np.ndarray

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if self.steps < 1 or len(self.values) != self.steps + 1:
            raise ValueError("values must have steps+1 entries")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps + 1)


@dataclass(frozen=True)
class LagrangianModel:
    """Scalar-state model: vectorized Lagrangian, optional analytic partials.

    lagrangian(x, v) may return +inf for infeasible velocities.  flow(x, dt)
    is the deterministic zero-cost evolution (negative dt runs it backward),
    used only to seed multi-start profiles.
    """

    lagrangian: Callable
    dl_dx: Optional[Callable] = None
    dl_dv: Optional[Callable] = None
    value_and_partials: Optional[Callable] = None
    domain: tuple[float, float] = (-math.inf, math.inf)
    flow: Optional[Callable] = None
    drift: Optional[Callable] = None
    extremal: Optional[Callable] = None


@dataclass(frozen=True)
class FixedStart:
    m0: float


@dataclass(frozen=True)
class OpenStart:
    """Free initial point weighted by a static rate function.

    rate_function must expose evaluator(x), derivative(x) and a tuple
    minimizers of global minima (used to seed starts).
    """

    rate_function: object


@dataclass(frozen=True)
class ActionProblem:
    model: LagrangianModel
    start: FixedStart | OpenStart
    end: float
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.model.drift is not None:
            lo, hi = self.model.domain
            probe_lo = max(lo, -1.0) if math.isfinite(lo) else -1.0
            probe_hi = min(hi, 1.0) if math.isfinite(hi) else 1.0
            xs = np.linspace(probe_lo + 1e-6, probe_hi - 1e-6, 7)
            cost = np.asarray(self.model.lagrangian(xs, self.model.drift(xs)))
            if np.any(cost < -1e-9):
                raise ValueError("Lagrangian negative along the drift")


def action_integral(lagrangian, traj: TrajectoryGrid) -> float:
    """Composite quadrature of L along the grid; +inf if any integrand is."""
    lag = lagrangian.lagrangian if isinstance(lagrangian, LagrangianModel) else lagrangian
    x = traj.values[:-1]
    v = np.diff(traj.values) / traj.dt
    integrand = np.asarray(lag(x, v), dtype=float)
    if np.any(np.isinf(integrand)) or np.any(np.isnan(integrand)):
        return math.inf
    return float(traj.dt * np.sum(integrand))


def _partials(model: LagrangianModel):
    """Analytic partials when available, vectorized central differences otherwise."""
    lag = model.lagrangian
    if model.dl_dx is not None and model.dl_dv is not None:
        return model.dl_dx, model.dl_dv

    def fd_dx(x, v):
        h = 1e-6 * (1.0 + np.abs(x))
        return (lag(x + h, v) - lag(x - h, v)) / (2.0 * h)

    def fd_dv(x, v):
        h = 1e-6 * (1.0 + np.abs(v))
        return (lag(x, v + h) - lag(x, v - h)) / (2.0 * h)

    return fd_dx, fd_dv


def _fused_evaluator(model: LagrangianModel):
    """(x, v) -> (L, dL/dx, dL/dv) in one call."""
    if model.value_and_partials is not None:
        return model.value_and_partials
    lag = model.lagrangian
    dl_dx, dl_dv = _partials(model)

    def fused(x, v):
        return (
            np.asarray(lag(x, v), dtype=float),
            np.asarray(dl_dx(x, v), dtype=float),
            np.asarray(dl_dv(x, v), dtype=float),
        )

    return fused


def _line_search(fun_grad, x, f, g, d, gTd, a_init):
    """Armijo backtracking with quadratic interpolation and one vertex polish.

    Infinite trial values shrink the step (feasible-region handling).
    Returns (a, x_new, f_new, g_new) or None.
    """
    a = a_init
    f_try, g_try = fun_grad(x + a * d)
    tries = 0
    while tries < 70 and (math.isinf(f_try) or f_try > f + 1e-4 * a * gTd):
        if math.isinf(f_try):
            a *= 0.5
        else:
            # vertex of the parabola through f(0), f'(0), f(a)
            denom = 2.0 * (f_try - f - gTd * a)
            a_q = -gTd * a * a / denom if denom > 0 else 0.5 * a
            a = min(max(a_q, 0.1 * a), 0.5 * a)
        f_try, g_try = fun_grad(x + a * d)
        tries += 1
    if math.isinf(f_try) or f_try > f + 1e-4 * a * gTd:
        return None
    # one interpolation polish toward the 1-d minimum (near-exact on quadratics)
    denom = 2.0 * (f_try - f - gTd * a)
    if denom > 0:
        a_q = -gTd * a * a / denom
        if 0.0 < a_q:
            f_q, g_q = fun_grad(x + a_q * d)
            if not math.isinf(f_q) and f_q < f_try:
                a, f_try, g_try = a_q, f_q, g_q
    return a, x + a * d, f_try, g_try


def _cg_minimize(fun_grad, x0, max_iter=3000, gtol=1e-9, ftol=1e-14):
    """Polak-Ribiere CG with interpolating line search; +inf is a hard wall.

    Returns (x, f) or None when x0 itself is infeasible.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    if math.isinf(f):
        return None
    d = -g
    n = len(x)
    f_prev = None
    alpha = None
    stall = 0
    restarted = False
    for it in range(max_iter):
        gTd = float(g @ d)
        if gTd >= 0.0:
            d = -g
            gTd = float(g @ d)
            if gTd >= 0.0:
                break
        if f_prev is not None and gTd < 0:
            a0 = min(1.0, 2.02 * (f_prev - f) / (-gTd)) if f_prev > f else (alpha or 1.0)
            a0 = a0 if a0 > 0 else 1.0
        else:
            a0 = 1.0 / (1.0 + float(np.max(np.abs(g))))
        ls = _line_search(fun_grad, x, f, g, d, gTd, a0)
        if ls is None:
            if restarted:
                break
            d = -g
            restarted = True
            continue
        alpha, x_new, f_new, g_new = ls
        beta = max(0.0, float(g_new @ (g_new - g)) / max(float(g @ g), 1e-300))
        if (it + 1) % max(n, 10) == 0:
            beta = 0.0
        d = -g_new + beta * d
        progress = f - f_new
        f_prev = f
        x, f, g = x_new, f_new, g_new
        if float(np.max(np.abs(g))) <= gtol:
            break
        if progress <= ftol * (1.0 + abs(f)):
            stall += 1
            if stall >= 3:
                if restarted:
                    break
                d = -g
                restarted = True
                stall = 0
        else:
            stall = 0
            restarted = False
    return x, f


def _clip_domain(vals, domain, margin=1e-9):
    lo, hi = domain
    lo = lo + margin if math.isfinite(lo) else lo
    hi = hi - margin if math.isfinite(hi) else hi
    return np.clip(vals, lo, hi)


def _smooth_jitter(n, scale, rng):
    noise = np.cumsum(rng.standard_normal(n + 1))
    noise -= np.linspace(noise[0], noise[-1], n + 1)
    peak = np.max(np.abs(noise))
    return noise * (scale / peak) if peak > 0 else noise


def _start_profiles(model, m0, mT, T, steps, rng, n_jitter=3):
    """Multi-start seeds: linear, drift-then-steer, steer-then-drift, jitters."""
    t = np.linspace(0.0, T, steps + 1)
    profiles = [np.linspace(m0, mT, steps + 1)]
    if model.flow is not None:
        switch = 0.7 * T
        drift_part = np.asarray(model.flow(m0, np.minimum(t, switch)))
        anchor = float(model.flow(m0, switch))
        ramp = np.where(t > switch, (t - switch) / (T - switch), 0.0)
        profiles.append(drift_part * (1 - ramp) + mT * ramp)

        z = float(np.clip(model.flow(mT, -(0.7 * T)), *model.domain))
        arrive = np.asarray(model.flow(z, np.maximum(t - 0.3 * T, 0.0)))
        ramp0 = np.where(t < 0.3 * T, 1.0 - t / (0.3 * T), 0.0)
        profiles.append(m0 * ramp0 + arrive * (1 - ramp0))
    span = 1.0
    if math.isfinite(model.domain[0]) and math.isfinite(model.domain[1]):
        span = model.domain[1] - model.domain[0]
    base = profiles[0]
    for _ in range(n_jitter):
        profiles.append(base + _smooth_jitter(steps, 0.05 * span, rng))
    out = []
    for p in profiles:
        p = _clip_domain(np.asarray(p, float), model.domain)
        p[0], p[-1] = m0, mT
        out.append(p)
    return out


def minimize_action_fixed(
    problem: ActionProblem,
    steps: int = 400,
    seed: int = 0,
    max_iter: int = 2000,
    gtol: float = 1e-9,
):
    """Local minimization over interior grid values with fixed endpoints.

    Returns (TrajectoryGrid, value); value is the best over all restarts and
    the model's closed-form extremal when one exists.
    """
    if not isinstance(problem.start, FixedStart):
        raise ValueError("minimize_action_fixed needs a FixedStart problem")
    model = problem.model
    m0, mT, T = problem.start.m0, problem.end, problem.horizon
    dt = T / steps
    fused = _fused_evaluator(model)

    def fun_grad(interior):
        full = np.concatenate([[m0], interior, [mT]])
        v = np.diff(full) / dt
        x = full[:-1]
        integ, gx, gv = fused(x, v)
        if np.any(np.isinf(integ)) or np.any(np.isnan(integ)):
            return math.inf, np.zeros_like(interior)
        grad = dt * gx[1:] + gv[:-1] - gv[1:]
        return float(dt * np.sum(integ)), grad

    rng = rng_from(seed)
    candidates = _start_profiles(model, m0, mT, T, steps, rng)
    if model.extremal is not None:
        try:
            _, _, path = model.extremal(m0, mT, T)
            candidates.append(_clip_domain(path(np.linspace(0, T, steps + 1)), model.domain))
        except Exception:
            pass

    best = None
    for cand in candidates:
        res = _cg_minimize(fun_grad, cand[1:-1], max_iter=max_iter, gtol=gtol)
        if res is None:
            continue
        x, f = res
        if best is None or f < best[1]:
            best = (x, f)
    if best is None:
        raise NoFeasiblePath("every start profile has infinite action")
    full = np.concatenate([[m0], best[0], [mT]])
    return TrajectoryGrid(T=T, steps=steps, values=full), best[1]


@dataclass(frozen=True)
class OpenMinimizer:
    gamma0: float
    value: float
    traj: TrajectoryGrid
    p0: float
    transversality_residual: float


def _initial_momentum(model, traj):
    """Discrete initial momentum dL/dv at the first node.

    This is the quantity the free-start stationarity pins to I'(gamma_0);
    the match is exact up to dt*L_x (zero along drift segments) plus the
    solver's gradient tolerance.
    """
    _, dl_dv = _partials(model)
    g = traj.values
    return float(dl_dv(g[0], (g[1] - g[0]) / traj.dt))


def minimize_action_open_start(
    problem: ActionProblem,
    steps: int | None = None,
    seed: int = 0,
    max_iter: int = 2000,
    gtol: float = 1e-9,
    cluster_gamma0: float = 1e-3,
    cluster_value: float = 1e-5,
):
    """Minimize I(gamma_0) + action over the start point and interior values.

    Returns (best trajectory, best value, minimizers) where minimizers is
    the cluster set of distinct local minimizers within cluster_value of the
    global minimum.  Each reported minimizer carries its extrapolated
    initial momentum and the transversality residual |p(0) - I'(gamma_0)|,
    the stationarity condition of the free-start variation.
    """
    if not isinstance(problem.start, OpenStart):
        raise ValueError("minimize_action_open_start needs an OpenStart problem")
    model = problem.model
    rate = problem.start.rate_function
    mT, T = problem.end, problem.horizon
    if steps is None:
        steps = max(240, int(math.ceil(T / 0.005)))
    dt = T / steps
    fused = _fused_evaluator(model)

    def fun_grad(z):
        full = np.concatenate([z, [mT]])
        v = np.diff(full) / dt
        x = full[:-1]
        integ, gx, gv = fused(x, v)
        i0 = float(rate.evaluator(full[0]))
        if np.any(np.isinf(integ)) or np.any(np.isnan(integ)) or math.isinf(i0):
            return math.inf, np.zeros_like(z)
        grad = np.empty_like(z)
        grad[0] = float(rate.derivative(full[0])) + dt * gx[0] - gv[0]
        grad[1:] = dt * gx[1:] + gv[:-1] - gv[1:]
        return i0 + float(dt * np.sum(integ)), grad

    rng = rng_from(seed)
    g0_candidates = list(getattr(rate, "minimizers", ()) or ())
    if model.flow is not None:
        g0_candidates.append(float(np.clip(model.flow(mT, -T), *model.domain)))
    g0_candidates.append(mT)
    g0_candidates = [float(_clip_domain(np.asarray(g), model.domain)) for g in g0_candidates]
    deduped = []
    for g in g0_candidates:
        if all(abs(g - h) > 1e-9 for h in deduped):
            deduped.append(g)
    g0_candidates = deduped

    # one drift-then-steer profile per start candidate, a linear profile for
    # the first two, and one jittered variant: the badness scans need the
    # coexisting basins found, not an exhaustive profile sweep per basin
    candidates = []
    t_nodes = np.linspace(0.0, T, steps + 1)
    for i, g0 in enumerate(g0_candidates):
        if model.flow is not None:
            switch = 0.7 * T
            drift_part = np.asarray(model.flow(g0, np.minimum(t_nodes, switch)))
            ramp = np.where(t_nodes > switch, (t_nodes - switch) / (T - switch), 0.0)
            prof = drift_part * (1 - ramp) + mT * ramp
        else:
            prof = np.linspace(g0, mT, steps + 1)
        prof = _clip_domain(prof, model.domain)
        prof[0], prof[-1] = g0, mT
        candidates.append(prof)
        if i < 2:
            lin = _clip_domain(np.linspace(g0, mT, steps + 1), model.domain)
            lin[0], lin[-1] = g0, mT
            candidates.append(lin)
    span = 1.0
    if math.isfinite(model.domain[0]) and math.isfinite(model.domain[1]):
        span = model.domain[1] - model.domain[0]
    jit = candidates[0] + _smooth_jitter(steps, 0.05 * span, rng)
    jit = _clip_domain(jit, model.domain)
    jit[-1] = mT
    candidates.append(jit)

    found = []
    for cand in candidates:
        res = _cg_minimize(fun_grad, cand[:-1], max_iter=max_iter, gtol=gtol)
        if res is None:
            continue
        z, f = res
        traj = TrajectoryGrid(T=T, steps=steps, values=np.concatenate([z, [mT]]))
        p0 = _initial_momentum(model, traj)
        resid = abs(p0 - float(rate.derivative(z[0])))
        found.append(OpenMinimizer(float(z[0]), f, traj, p0, resid))
    if not found:
        raise NoFeasiblePath("every start profile has infinite action")

    found.sort(key=lambda r: r.value)
    best = found[0]
    cluster: list[OpenMinimizer] = []
    for r in found:
        if r.value > best.value + cluster_value:
            break
        if all(abs(r.gamma0 - c.gamma0) > cluster_gamma0 for c in cluster):
            cluster.append(r)
    return best.traj, best.value, cluster


def euler_lagrange_residual(lagrangian, traj: TrajectoryGrid) -> float:
    """max_i |d/dt dL/dv - dL/dx| at interior nodes, all numerically.

    Velocities are centered differences; the L-derivatives are central
    finite differences of the supplied Lagrangian (independent of any
    analytic partials a model might carry); d/dt is a centered difference of
    the nodewise dL/dv values.
    """
    lag = lagrangian.lagrangian if isinstance(lagrangian, LagrangianModel) else lagrangian
    g = traj.values
    dt = traj.dt
    x = g[1:-1]
    v = (g[2:] - g[:-2]) / (2.0 * dt)
    hx = 1e-6 * (1.0 + np.abs(x))
    hv = 1e-6 * (1.0 + np.abs(v))
    lv = (np.asarray(lag(x, v + hv)) - np.asarray(lag(x, v - hv))) / (2.0 * hv)
    lx = (np.asarray(lag(x + hx, v)) - np.asarray(lag(x - hx, v))) / (2.0 * hx)
    dlv_dt = (lv[2:] - lv[:-2]) / (2.0 * dt)
    resid = np.abs(dlv_dt - lx[1:-1])
    resid = resid[np.isfinite(resid)]
    return float(np.max(resid)) if len(resid) else math.inf


@dataclass(frozen=True)
class FlowResult:
    times: np.ndarray
    m: np.ndarray
    p: np.ndarray
    energy_drift: float


def hamilton_flow_integrate(
    hamilton_rhs: Callable,
    m0: float,
    p0: float,
    T: float,
    dt: float,
    hamiltonian: Optional[Callable] = None,
    domain: tuple[float, float] = (-1.0, 1.0),
) -> FlowResult:
    """Classic fourth-order explicit integration of the Hamilton equations.

    Raises DomainExit when the state leaves the admissible interval.  When a
    hamiltonian is supplied the result carries the max |H(t) - H(0)| drift.
    """
    if dt > T / 100.0:
        raise ValueError("dt must be <= T/100")
    n = int(round(T / dt))
    times = np.linspace(0.0, n * dt, n + 1)
    ms = np.empty(n + 1)
    ps = np.empty(n + 1)
    ms[0], ps[0] = m0, p0
    m, p = float(m0), float(p0)
    h0 = hamiltonian(m, p) if hamiltonian is not None else 0.0
    drift = 0.0
    for i in range(1, n + 1):
        k1m, k1p = hamilton_rhs(m, p)
        k2m, k2p = hamilton_rhs(m + 0.5 * dt * k1m, p + 0.5 * dt * k1p)
        k3m, k3p = hamilton_rhs(m + 0.5 * dt * k2m, p + 0.5 * dt * k2p)
        k4m, k4p = hamilton_rhs(m + dt * k3m, p + dt * k3p)
        m += dt * (k1m + 2 * k2m + 2 * k3m + k4m) / 6.0
        p += dt * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0
        if not (domain[0] - 1e-12 <= m <= domain[1] + 1e-12):
            raise DomainExit(f"state {m:.6g} left {domain} at t={times[i]:.6g}")
        ms[i], ps[i] = m, p
        if hamiltonian is not None:
            drift = max(drift, abs(hamiltonian(m, p) - h0))
    return FlowResult(times=times, m=ms, p=ps, energy_drift=drift)
