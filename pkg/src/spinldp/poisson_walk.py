"""Rate-calibration model: a random walk with small increments.

X jumps +1/N at rate b*N and -1/N at rate d*N.  Everything here has either
a closed form or an exact combinatorial oracle (two-Poisson convolution),
which makes this the calibration ground for the trajectory machinery: the
cumulant generator, its conjugate, exact path probabilities, and the rate
convergence table all cross-check each other.

Sign convention: the cumulant generator is b(e^l - 1) + d(e^-l - 1), the
form consistent with the jump generator and with Cramer's theorem (the "+"
form; both signs appear in the literature for the backward term).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .io_utils import write_csv
from .seeding import rng_from

__all__ = [
    "PoissonWalkParams",
    "pw_hamiltonian",
    "pw_lagrangian",
    "pw_simulate",
    "pw_simulate_many",
    "pw_exact_log_prob",
    "pw_rate_convergence",
    "pw_model",
]


@dataclass(frozen=True)
class PoissonWalkParams:
    b: float
    d: float
    N: int

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("forward rate b must be > 0")
        if self.d < 0:
            raise ValueError("backward rate d must be >= 0")
        if self.N < 1:
            raise ValueError("scale N must be >= 1")


def pw_hamiltonian(lam: float, params: PoissonWalkParams) -> float:
    """b(e^lam - 1) + d(e^-lam - 1); overflow saturates to +inf."""
    try:
        return params.b * math.expm1(lam) + params.d * math.expm1(-lam)
    except OverflowError:
        return math.inf


def pw_lagrangian(a: float, params: PoissonWalkParams) -> float:
    """sup_lam [a lam - H(lam)], closed form; +inf when d=0 and a<0."""
    b, d = params.b, params.d
    if d == 0.0:
        if a < 0.0:
            return math.inf
        if a == 0.0:
            return b
        return a * math.log(a / b) - a + b
    r = math.sqrt(a * a + 4.0 * b * d)
    if a >= 0.0:
        log_u = math.log((a + r) / (2.0 * b))
    else:
        # (a+r) cancels for a << 0; use (a+r)(r-a) = 4bd.
        log_u = math.log(2.0 * d / (r - a))
    return a * log_u - r + b + d


@dataclass(frozen=True)
class PiecewisePath:
    """Piecewise-constant cadlag path: value[i] holds on [times[i], times[i+1])."""

    times: np.ndarray  # jump times, starting with 0.0
    values: np.ndarray  # path values, values[0] is the initial state
    horizon: float

    def __call__(self, t):
        idx = np.searchsorted(self.times, t, side="right") - 1
        return self.values[idx]

    @property
    def final(self) -> float:
        return float(self.values[-1])


def pw_simulate(params: PoissonWalkParams, T: float, seed, x0: float = 0.0) -> PiecewisePath:
    """Exact continuous-time path on [0, T].

    Forward and backward jumps are independent Poisson streams; the jump
    times are the order statistics of uniforms given the Poisson counts,
    which reproduces the process law exactly.
    """
    if not T > 0:
        raise ValueError("horizon T must be > 0")
    rng = rng_from(seed)
    n_fwd = rng.poisson(params.N * params.b * T)
    n_bwd = rng.poisson(params.N * params.d * T)
    t_fwd = np.sort(rng.uniform(0.0, T, size=n_fwd))
    t_bwd = np.sort(rng.uniform(0.0, T, size=n_bwd))
    times = np.concatenate([t_fwd, t_bwd])
    steps = np.concatenate([np.full(n_fwd, 1.0), np.full(n_bwd, -1.0)]) / params.N
    order = np.argsort(times, kind="stable")
    times = times[order]
    steps = steps[order]
    values = x0 + np.concatenate([[0.0], np.cumsum(steps)])
    return PiecewisePath(
        times=np.concatenate([[0.0], times]), values=values, horizon=float(T)
    )


def _pw_replica(args):
    b, d, N, T, master_seed, r = args
    return r, pw_simulate(PoissonWalkParams(b, d, N), T,
                          np.random.SeedSequence([int(master_seed), int(r)]))


def pw_simulate_many(
    params: PoissonWalkParams, T: float, replicas: int, master_seed, workers: int = 1
) -> list[PiecewisePath]:
    """Independent replicas; stream r is seeded by (master_seed, r), so the
    result is identical at any worker count."""
    jobs = [(params.b, params.d, params.N, T, master_seed, r) for r in range(replicas)]
    if workers > 1 and replicas > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers) as pool:
            results = pool.map(_pw_replica, jobs)
    else:
        results = [_pw_replica(j) for j in jobs]
    results.sort(key=lambda x: x[0])
    return [p for _, p in results]


def pw_exact_log_prob(params: PoissonWalkParams, t: float, k: int) -> float:
    """log P(X_N(t) = k/N) by exact two-Poisson convolution in log space.

    Sums e^-lp lp^j / j! * e^-lm lm^(j-k) / (j-k)! over j >= max(0, k),
    truncated once the bounded tail is below 1e-14 of the partial sum.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    lp = params.N * params.b * t
    lm = params.N * params.d * t
    if lm == 0.0:
        if k < 0:
            return -math.inf
        return -lp + k * math.log(lp) - math.lgamma(k + 1)
    j0 = max(0, k)
    log_terms = []
    j = j0
    log_sum = -math.inf
    llp, llm = math.log(lp), math.log(lm)
    while True:
        lt = -lp - lm + j * llp - math.lgamma(j + 1) + (j - k) * llm - math.lgamma(j - k + 1)
        log_terms.append(lt)
        log_sum = max(log_sum, lt) + math.log1p(math.exp(min(log_sum, lt) - max(log_sum, lt)))
        # term ratio: lp*lm / ((j+1)(j+1-k)); once < 1/2 the tail is < 2*next term
        ratio = lp * lm / ((j + 1.0) * (j + 1.0 - k))
        if ratio < 0.5:
            log_next = lt + math.log(ratio)
            if log_next + math.log(2.0) < log_sum + math.log(1e-14):
                break
        j += 1
        if j - j0 > 10_000_000:
            raise RuntimeError("two-Poisson summation failed to converge")
    return log_sum


def pw_rate_convergence(
    params_template: PoissonWalkParams,
    N_list: Sequence[int],
    t: float,
    a: float,
    csv_path=None,
) -> list[dict]:
    """Table of empirical vs analytic decay rates.

    The empirical rate is -(1/N) log P(X_N(t) = k/N) with k the nearest
    integer to a*t*N; the analytic rate is t*L(a).
    """
    analytic = t * pw_lagrangian(a, params_template)
    rows = []
    for N in N_list:
        p = PoissonWalkParams(b=params_template.b, d=params_template.d, N=int(N))
        k = round(a * t * N)
        emp = -pw_exact_log_prob(p, t, k) / N
        rows.append(
            {
                "N": int(N),
                "t": t,
                "a": a,
                "empirical_rate": emp,
                "analytic_rate": analytic,
                "gap": emp - analytic,
            }
        )
    if csv_path is not None:
        write_csv(
            csv_path,
            ["N", "t", "a", "empirical_rate", "analytic_rate", "gap"],
            [[r[c] for c in ("N", "t", "a", "empirical_rate", "analytic_rate", "gap")] for r in rows],
        )
    return rows


def pw_lagrangian_vec(v, params: PoissonWalkParams):
    """Vectorized pw_lagrangian over a velocity array."""
    b, d = params.b, params.d
    v = np.asarray(v, dtype=float)
    if d == 0.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            pos = v * np.log(np.where(v > 0, v / b, 1.0)) - v + b
        return np.where(v < 0, np.inf, np.where(v == 0, b, pos))
    r = np.sqrt(v * v + 4.0 * b * d)
    log_u = np.where(v >= 0, np.log((np.abs(v) + r) / (2.0 * b)), -np.log((np.abs(v) + r) / (2.0 * d)))
    return v * log_u - r + b + d


def pw_model(params: PoissonWalkParams):
    """LagrangianModel view for the trajectory machinery (velocity-only cost)."""
    from .trajectory import LagrangianModel

    b, d = params.b, params.d

    def lag(x, v):
        x, v = np.broadcast_arrays(np.asarray(x, float), np.asarray(v, float))
        return pw_lagrangian_vec(v, params)

    def dl_dv(x, v):
        v = np.asarray(v, float)
        r = np.sqrt(v * v + 4.0 * b * d)
        if d == 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(v > 0, np.log(np.where(v > 0, v / b, 1.0)), -np.inf)
        return np.where(v >= 0, np.log((np.abs(v) + r) / (2.0 * b)), -np.log((np.abs(v) + r) / (2.0 * d)))

    def dl_dx(x, v):
        return np.zeros_like(np.broadcast_arrays(np.asarray(x, float), np.asarray(v, float))[0])

    return LagrangianModel(
        lagrangian=lag,
        dl_dx=dl_dx,
        dl_dv=dl_dv,
        domain=(-math.inf, math.inf),
        flow=lambda x, dt: x + (b - d) * dt,
        drift=lambda x: np.full_like(np.asarray(x, float), b - d),
        extremal=None,
    )
