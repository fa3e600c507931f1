"""Exact finite-torus spin-flip dynamics and its empirical-measure algebra.

Sites live on a d-dimensional torus of odd side 2N+1 (d = 1 or 2), spins
are +-1, and flip rates are window tables: the rate of flipping site i is
table[code of the (2r+1)^d pattern around i], which makes positivity and
translation invariance structural.  Simulation is exact event-driven
scheduling (exponential waiting time from the total rate, then a site drawn
proportionally), with per-event rate updates confined to the affected
window.  The inner loop runs in the compiled kernel when available and in
the NumPy fallback otherwise; both produce bit-identical paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coefficients import (
    CoefficientMap,
    apply_D,
    empirical_average,
    evaluate_translations,
)
from .seeding import rng_from
from .errors import EmptyCell
from .kernels import get_impl

__all__ = [
    "SpinConfiguration",
    "LocalRateSpec",
    "EventLog",
    "glauber_simulate",
    "glauber_trajectory",
    "EmpiricalStats",
    "relative_entropy_density_estimate",
    "bootstrap_entropy_se",
    "nonlinear_generator_exact",
    "nonlinear_generator_general",
    "moment_series",
]

_BLOCK = 4096


@dataclass(frozen=True)
class SpinConfiguration:
    dim: int
    side: int
    values: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.side < 3 or self.side % 2 == 0:
            raise ValueError("side must be odd and >= 3 (torus 2N+1)")
        v = np.ascontiguousarray(self.values, dtype=np.int8)
        if v.shape != (self.side,) * self.dim:
            raise ValueError("values shape does not match (side,)*dim")
        if not np.all(np.abs(v) == 1):
            raise ValueError("spins must be +-1")
        object.__setattr__(self, "values", v)

    @property
    def torus_radius(self) -> int:
        return (self.side - 1) // 2

    @property
    def n_sites(self) -> int:
        return self.side**self.dim

    def magnetization(self) -> float:
        return float(np.mean(self.values))

    @staticmethod
    def all_plus(dim: int, side: int) -> "SpinConfiguration":
        return SpinConfiguration(dim, side, np.ones((side,) * dim, dtype=np.int8))

    @staticmethod
    def random(dim: int, side: int, seed, bias: float = 0.0) -> "SpinConfiguration":
        rng = rng_from(seed)
        p_up = 0.5 * (1.0 + bias)
        vals = np.where(rng.random((side,) * dim) < p_up, 1, -1).astype(np.int8)
        return SpinConfiguration(dim, side, vals)

    def to_text(self) -> str:
        rows = self.values.reshape(-1, self.side)
        return "\n".join("".join("+" if s > 0 else "-" for s in row) for row in rows) + "\n"

    @staticmethod
    def from_text(text: str, dim: int) -> "SpinConfiguration":
        rows = [r for r in text.strip().split("\n") if r]
        vals = np.array([[1 if ch == "+" else -1 for ch in row] for row in rows], dtype=np.int8)
        if dim == 1:
            vals = vals.reshape(-1)
        return SpinConfiguration(dim, vals.shape[-1], vals)


def _window_offsets(dim: int, radius: int):
    rng = range(-radius, radius + 1)
    if dim == 1:
        return [(o,) for o in rng]
    return [(a, b) for a in rng for b in rng]


@dataclass(frozen=True)
class LocalRateSpec:
    """Strictly positive flip rates read off a (2r+1)^d window pattern.

    table[code] with code = sum_k bit_k 2^k, bit_k = 1 iff the spin at
    offset k (offsets in lexicographic order) is +1.
    """

    dim: int
    radius: int
    table: np.ndarray

    def __post_init__(self):
        w = len(self.offsets)
        t = np.ascontiguousarray(self.table, dtype=np.float64)
        if t.shape != (2**w,):
            raise ValueError(f"table must have 2^{w} entries")
        if not np.all(t > 0):
            raise ValueError("all rates must be strictly positive")
        object.__setattr__(self, "table", t)

    @property
    def offsets(self):
        return _window_offsets(self.dim, self.radius)

    @staticmethod
    def constant(value: float, dim: int, radius: int = 0) -> "LocalRateSpec":
        w = len(_window_offsets(dim, radius))
        return LocalRateSpec(dim, radius, np.full(2**w, float(value)))

    @staticmethod
    def from_function(fn, dim: int, radius: int) -> "LocalRateSpec":
        offs = _window_offsets(dim, radius)
        table = np.empty(2 ** len(offs))
        for code in range(len(table)):
            pattern = tuple(1 if (code >> k) & 1 else -1 for k in range(len(offs)))
            table[code] = fn(pattern)
        return LocalRateSpec(dim, radius, table)

    @staticmethod
    def random_table(dim: int, radius: int, seed, lo: float = 0.2, hi: float = 5.0):
        rng = rng_from(seed)
        w = len(_window_offsets(dim, radius))
        return LocalRateSpec(dim, radius, rng.uniform(lo, hi, size=2**w))

    def to_dict(self) -> dict:
        offs = self.offsets
        out = {}
        for code, rate in enumerate(self.table):
            pat = "".join("+" if (code >> k) & 1 else "-" for k in range(len(offs)))
            out[pat] = float(rate)
        return {"dim": self.dim, "radius": self.radius, "rates": out}

    @staticmethod
    def from_dict(d: dict) -> "LocalRateSpec":
        dim, radius = int(d["dim"]), int(d["radius"])
        offs = _window_offsets(dim, radius)
        table = np.empty(2 ** len(offs))
        for pat, rate in d["rates"].items():
            code = sum(1 << k for k, ch in enumerate(pat) if ch == "+")
            table[code] = float(rate)
        return LocalRateSpec(dim, radius, table)

    def rates_for(self, config: SpinConfiguration) -> np.ndarray:
        """Rate at every site: c(tau_i s), flattened."""
        return self.table[self._codes(config)]

    def _codes(self, config: SpinConfiguration) -> np.ndarray:
        spins = config.values
        axes = tuple(range(spins.ndim))
        codes = np.zeros(spins.shape, dtype=np.int64)
        for k, o in enumerate(self.offsets):
            bit = (np.roll(spins, shift=tuple(-x for x in o), axis=axes) + 1) // 2
            codes |= bit.astype(np.int64) << k
        return codes.ravel()


@dataclass(frozen=True)
class EventLog:
    times: np.ndarray
    sites: np.ndarray


def _site_index_arrays(config: SpinConfiguration, rates: LocalRateSpec):
    """affect_idx[i, k] = flat index of site i - o_k (whose code bit k flips
    when site i flips)."""
    side, dim = config.side, config.dim
    offs = rates.offsets
    n = config.n_sites
    idx = np.arange(n)
    if dim == 1:
        cols = [np.mod(idx - o[0], side) for o in offs]
    else:
        r, c = divmod(idx, side)
        cols = [np.mod(r - o[0], side) * side + np.mod(c - o[1], side) for o in offs]
    return np.ascontiguousarray(np.stack(cols, axis=1).astype(np.int32))


def glauber_simulate(
    config: SpinConfiguration,
    rates: LocalRateSpec,
    T: float,
    seed,
    record: bool = True,
    force_pure: bool = False,
    _rng=None,
):
    """Exact event-driven run over [0, T]; returns (final config, EventLog)."""
    if rates.dim != config.dim:
        raise ValueError("rate spec dimension mismatch")
    if T < 0:
        raise ValueError("T must be >= 0")
    impl = get_impl(force_pure=force_pure)
    spins = config.values.copy().ravel()
    codes = rates._codes(config).copy()
    rate_arr = rates.table[codes].astype(np.float64)
    affect = _site_index_arrays(config, rates)
    rng = _rng if _rng is not None else rng_from(seed)
    t = 0.0
    all_times, all_sites = [], []
    times_buf = np.empty(_BLOCK if record else 1, dtype=np.float64)
    sites_buf = np.empty(_BLOCK if record else 1, dtype=np.int64)
    if T > 0:
        while True:
            u = rng.random(2 * _BLOCK)
            t, used, nev, done = impl.run_block(
                spins, codes, rate_arr, rates.table, affect, t, T, u,
                times_buf, sites_buf, record,
            )
            if record and nev:
                all_times.append(times_buf[:nev].copy())
                all_sites.append(sites_buf[:nev].copy())
            if done:
                break
    final = SpinConfiguration(config.dim, config.side, spins.reshape(config.values.shape))
    log = EventLog(
        times=np.concatenate(all_times) if all_times else np.empty(0),
        sites=np.concatenate(all_sites) if all_sites else np.empty(0, dtype=np.int64),
    )
    return final, log


def glauber_trajectory(
    config: SpinConfiguration,
    rates: LocalRateSpec,
    times: Sequence[float],
    seed,
    force_pure: bool = False,
):
    """Configurations at the given increasing checkpoint times (one stream).

    Restarting the exponential clock at each checkpoint is statistically
    exact by memorylessness.
    """
    rng = rng_from(seed)
    out = []
    current = config
    t_prev = 0.0
    for t in times:
        if t < t_prev:
            raise ValueError("times must be nondecreasing")
        current, _ = glauber_simulate(
            current, rates, t - t_prev, seed=None, record=False,
            force_pure=force_pure, _rng=rng,
        )
        out.append(current)
        t_prev = t
    return out


@dataclass(frozen=True)
class EmpiricalStats:
    """Depth-k cylinder marginal of the empirical measure.

    counts[code] over all translations of the k-window (k sites in d=1, a
    k x k block in d=2); counts sum to the number of sites exactly.
    """

    dim: int
    depth: int
    counts: np.ndarray
    total: int

    @property
    def window_size(self) -> int:
        return self.depth ** self.dim

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.total

    @staticmethod
    def window_codes(config: SpinConfiguration, depth: int) -> np.ndarray:
        spins = config.values
        axes = tuple(range(spins.ndim))
        if config.dim == 1:
            offs = [(o,) for o in range(depth)]
        else:
            offs = [(a, b) for a in range(depth) for b in range(depth)]
        codes = np.zeros(spins.shape, dtype=np.int64)
        for k, o in enumerate(offs):
            bit = (np.roll(spins, shift=tuple(-x for x in o), axis=axes) + 1) // 2
            codes |= bit.astype(np.int64) << k
        return codes.ravel()

    @staticmethod
    def from_configuration(config: SpinConfiguration, depth: int | None = None) -> "EmpiricalStats":
        if depth is None:
            depth = 3 if config.dim == 1 else 2
        codes = EmpiricalStats.window_codes(config, depth)
        w = depth ** config.dim
        counts = np.bincount(codes, minlength=2**w)
        return EmpiricalStats(config.dim, depth, counts, config.n_sites)


def _product_log_probs(dim: int, depth: int, y: float) -> np.ndarray:
    """log mu_y(pattern) for every code of the depth window."""
    w = depth**dim
    codes = np.arange(2**w)
    ones = np.zeros(2**w, dtype=np.int64)
    for k in range(w):
        ones += (codes >> k) & 1
    return ones * math.log(0.5 * (1.0 + y)) + (w - ones) * math.log(0.5 * (1.0 - y))


def relative_entropy_density_estimate(sample: EmpiricalStats, y: float, depth: int | None = None) -> float:
    """Per-site relative entropy of the sampled window marginal against the
    product measure with mean y:  |W|^-1 sum_w nu(w) log(nu(w)/mu_y(w)),
    with 0 log 0 = 0."""
    if depth is not None and depth != sample.depth:
        raise ValueError("depth does not match the sample")
    if abs(y) >= 1.0:
        raise EmptyCell("reference assigns zero probability to some pattern")
    freq = sample.frequencies
    log_mu = _product_log_probs(sample.dim, sample.depth, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(freq > 0, freq * (np.log(np.where(freq > 0, freq, 1.0)) - log_mu), 0.0)
    return float(np.sum(terms)) / sample.window_size


def bootstrap_entropy_se(config: SpinConfiguration, y: float, depth: int, B: int = 100, seed=0) -> float:
    """Bootstrap (over window positions) standard error of the estimate."""
    codes = EmpiricalStats.window_codes(config, depth)
    n = len(codes)
    w = depth ** config.dim
    log_mu = _product_log_probs(config.dim, depth, y)
    rng = rng_from(seed)
    vals = np.empty(B)
    for b in range(B):
        resampled = codes[rng.integers(0, n, size=n)]
        freq = np.bincount(resampled, minlength=2**w) / n
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(freq > 0, freq * (np.log(np.where(freq > 0, freq, 1.0)) - log_mu), 0.0)
        vals[b] = np.sum(terms) / (depth**config.dim)
    return float(np.std(vals, ddof=1))


def _flip_deltas(config: SpinConfiguration, f: CoefficientMap) -> np.ndarray:
    """Delta_k = sum_j [f(tau_j s^k) - f(tau_j s)] for every site k, by
    explicit enumeration of all single-site flips."""
    spins = config.values
    n = config.n_sites
    base = float(np.sum(evaluate_translations(f, spins)))
    deltas = np.empty(n)
    flat = spins.ravel()
    for k in range(n):
        flipped = flat.copy()
        flipped[k] = -flipped[k]
        deltas[k] = float(np.sum(evaluate_translations(f, flipped.reshape(spins.shape)))) - base
    return deltas


def nonlinear_generator_exact(config: SpinConfiguration, f: CoefficientMap, rates: LocalRateSpec):
    """Both sides of the exact tilted-generator identity.

    lhs enumerates every single-site flip directly; rhs applies the response
    operator D and reads the local exponential against the empirical
    measure.  The two agree to machine precision for every configuration,
    rate table, and local f.
    """
    n = config.n_sites
    c = rates.rates_for(config)
    deltas = _flip_deltas(config, f)
    lhs = float(np.sum(c * np.expm1(deltas))) / n
    g = apply_D(f, side=config.side)
    g_vals = evaluate_translations(g, config.values).ravel()
    rhs = float(np.sum(c * np.expm1(g_vals))) / n
    return lhs, rhs


def nonlinear_generator_general(
    config: SpinConfiguration,
    psi,
    psi_grad,
    f_list: Sequence[CoefficientMap],
    rates: LocalRateSpec,
):
    """Finite-size tilted generator for F = Psi(<f_1>, ..., <f_n>) and its
    infinite-volume limit formula; the difference is the finite-size error,
    expected O(1/sites)."""
    n = config.n_sites
    c = rates.rates_for(config)
    x = np.array([empirical_average(f, config.values) for f in f_list])
    deltas = np.stack([_flip_deltas(config, f) for f in f_list], axis=1) / n

    psi_x = float(psi(x))
    expo_finite = np.array([n * (float(psi(x + deltas[k])) - psi_x) for k in range(n)])
    finite = float(np.sum(c * np.expm1(expo_finite))) / n

    grad = np.asarray(psi_grad(x), dtype=float)
    g_vals = np.stack(
        [evaluate_translations(apply_D(f, side=config.side), config.values).ravel() for f in f_list],
        axis=1,
    )
    limit = float(np.sum(c * np.expm1(g_vals @ grad))) / n
    return finite, limit


def _moment_worker(args):
    (dim, side, rates_dict, times, obs_offsets, master_seed, replica) = args
    rates = LocalRateSpec.from_dict(rates_dict)
    config = SpinConfiguration.all_plus(dim, side)
    seed = np.random.SeedSequence([int(master_seed), int(replica)])
    snaps = glauber_trajectory(config, rates, times, seed)
    row = np.empty((len(times), len(obs_offsets)))
    for ti, snap in enumerate(snaps):
        for oi, offsets in enumerate(obs_offsets):
            f = CoefficientMap.basis(dim, offsets)
            row[ti, oi] = empirical_average(f, snap.values)
    return replica, row


def moment_series(
    dim: int,
    side: int,
    rates: LocalRateSpec,
    times: Sequence[float],
    obs_offsets: Sequence,
    replicas: int,
    master_seed: int,
    workers: int = 1,
):
    """Replica ensemble of <H_A, L_N(s(t))> from the all-plus start.

    Returns array (replicas, times, observables); replica r is seeded by
    (master_seed, r) so the result is independent of worker count.
    """
    jobs = [
        (dim, side, rates.to_dict(), list(times), [list(map(tuple, o)) for o in obs_offsets],
         master_seed, r)
        for r in range(replicas)
    ]
    if workers > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers) as pool:
            results = pool.map(_moment_worker, jobs)
    else:
        results = [_moment_worker(j) for j in jobs]
    results.sort(key=lambda x: x[0])
    return np.stack([r[1] for r in results], axis=0)
