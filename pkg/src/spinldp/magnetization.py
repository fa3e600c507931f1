"""Magnetization trajectories under independent rate-1 spin flips.

State m in [-1, 1]; momentum p real.  The Hamiltonian

    H(m, p) = (1+m)/2 (e^{-2p} - 1) + (1-m)/2 (e^{2p} - 1)

comes out of the exponentially tilted generator.  Its velocity conjugate has
the closed form (R = sqrt(q^2 + 4(1-m^2)))

    L(m, q) = (q/2) log((q+R) / (2(1-m))) - R/2 + 1,

extended by one-sided limits at m = +-1 and by +inf for infeasible
velocities (m = 1 cannot move up).  The denominator 2(1-m) is the one
produced by the conjugation itself; it is the unique choice with
L(m, -2m) = 0 along the deterministic drift.

The module also carries the exact finite-N oracle (binomial convolution for
the time-T magnetization) and the time-t constrained pressure for a tilt on
a single spin, whose t-derivative at 0 reproduces H.
"""

from __future__ import annotations

import math
import numpy as np

from .seeding import rng_from
from .errors import PathLeavesDomain

__all__ = [
    "mag_hamiltonian",
    "mag_lagrangian",
    "mag_lagrangian_vec",
    "mag_hamilton_rhs",
    "mag_extremal",
    "mag_exact_log_prob",
    "mag_constrained_pressure",
    "mag_mc_pressure",
    "mag_model",
]

_LOG_FACT_CACHE = np.zeros(1)


def _log_factorials(n: int) -> np.ndarray:
    """Immutable cumulative log-factorial table, grown on demand."""
    global _LOG_FACT_CACHE
    if len(_LOG_FACT_CACHE) <= n:
        m = max(n + 1, 2 * len(_LOG_FACT_CACHE))
        tab = np.zeros(m)
        tab[1:] = np.cumsum(np.log(np.arange(1, m)))
        _LOG_FACT_CACHE = tab
    return _LOG_FACT_CACHE


def mag_hamiltonian(m: float, p: float) -> float:
    if abs(m) > 1 + 1e-12:
        raise ValueError("|m| must be <= 1")
    try:
        return 0.5 * (m + 1.0) * math.expm1(-2.0 * p) + 0.5 * (1.0 - m) * math.expm1(2.0 * p)
    except OverflowError:
        return math.inf


def mag_hamiltonian_dp(m: float, p: float) -> float:
    """dH/dp; equals -2m at p = 0."""
    try:
        return -(1.0 + m) * math.exp(-2.0 * p) + (1.0 - m) * math.exp(2.0 * p)
    except OverflowError:
        return math.inf if p > 0 else -math.inf


def mag_lagrangian(m: float, q: float) -> float:
    """sup_p [p q - H(m, p)]; +inf for infeasible boundary velocities."""
    return float(mag_lagrangian_vec(np.asarray(m, float), np.asarray(q, float)))


def mag_lagrangian_vec(m, q):
    """Vectorized closed form, stable on both velocity signs.

    For q >= 0 the direct ratio (q+R)/(2(1-m)) is cancellation-free; for
    q < 0 the equivalent ratio 2(1+m)/(R-q) is used, which also produces the
    correct one-sided limits at m = +-1.
    """
    m = np.asarray(m, dtype=float)
    q = np.asarray(q, dtype=float)
    m, q = np.broadcast_arrays(m, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(q * q + 4.0 * (1.0 - m * m))
        ratio_pos = (q + r) / (2.0 * (1.0 - m))
        ratio_neg = (2.0 * (1.0 + m)) / (r - q)
        log_ratio = np.where(q >= 0, np.log(ratio_pos), np.log(ratio_neg))
        val = 0.5 * q * log_ratio - 0.5 * r + 1.0
        # q = 0 and boundary corner cases: vanishing velocity costs 1 - sqrt(1-m^2)
        val = np.where(q == 0, 1.0 - np.sqrt(np.maximum(1.0 - m * m, 0.0)), val)
    # infeasible: moving up at m=1 or down at m=-1 (log ratio diverges with q*log -> +inf)
    val = np.where((m >= 1.0) & (q > 0), np.inf, val)
    val = np.where((m <= -1.0) & (q < 0), np.inf, val)
    # outside the state interval there is no process at all
    val = np.where(np.abs(m) > 1.0, np.inf, val)
    val = np.where(np.isnan(val), np.inf, val)
    if val.ndim == 0:
        return float(val)
    return val


def mag_momentum(m, q):
    """dL/dq: the optimal conjugate momentum p*(m, q) = (1/2) log ratio."""
    m = np.asarray(m, dtype=float)
    q = np.asarray(q, dtype=float)
    m, q = np.broadcast_arrays(m, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(q * q + 4.0 * (1.0 - m * m))
        log_ratio = np.where(
            q >= 0,
            np.log((q + r) / (2.0 * (1.0 - m))),
            np.log((2.0 * (1.0 + m)) / (r - q)),
        )
    return 0.5 * log_ratio


def mag_dl_dm(m, q):
    """dL/dm = sinh(2 p*) by the envelope identity."""
    p = mag_momentum(m, q)
    return np.sinh(2.0 * p)


def mag_hamilton_rhs(m: float, p: float) -> tuple[float, float]:
    """Hamilton equations: (dm/dt, dp/dt).

    The flow blows up in finite time once tanh(p) e^{2t} reaches 1 (the
    state hits the boundary with diverging momentum); overflow saturates to
    inf so the integrator can convert it into a DomainExit.
    """
    try:
        e2p = math.exp(2.0 * p)
        em2p = math.exp(-2.0 * p)
    except OverflowError:
        s = math.inf if p > 0 else -math.inf
        return (s, s)
    return (-m * (e2p + em2p) + (e2p - em2p), 0.5 * (e2p - em2p))


def mag_extremal(m0: float, mT: float, T: float):
    """Two-exponential extremal m(t) = C1 e^{2t} + C2 e^{-2t} through (m0, mT).

    Returns (C1, C2, evaluator).  Raises PathLeavesDomain if the path exits
    [-1, 1] anywhere on [0, T].
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    e2t, em2t = math.exp(2.0 * T), math.exp(-2.0 * T)
    c1 = (mT - m0 * em2t) / (e2t - em2t)
    c2 = m0 - c1

    def path(t):
        t = np.asarray(t, dtype=float)
        return c1 * np.exp(2.0 * t) + c2 * np.exp(-2.0 * t)

    # interior extremum at e^{4t*} = C2/C1 when both coefficients share a sign
    worst = max(abs(m0), abs(mT))
    if c1 != 0.0 and c2 != 0.0 and (c2 / c1) > 0.0:
        tstar = 0.25 * math.log(c2 / c1)
        if 0.0 < tstar < T:
            worst = max(worst, abs(float(path(tstar))))
    if worst > 1.0 + 1e-12:
        raise PathLeavesDomain(f"extremal reaches |m| = {worst:.6g} > 1")
    return c1, c2, path


def mag_exact_log_prob(N: int, m0: float, T: float, mT: float) -> float:
    """Exact log P(m_N(T) = mT) from a fixed configuration at magnetization m0.

    Each spin independently flips an odd number of times with probability
    q = (1 - e^{-2T})/2; the final up-count is a convolution of two
    binomials (down-flips among initial ups, up-flips among initial downs),
    summed in log space with the cached log-factorial table.
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    n_up = (1.0 + m0) * N / 2.0
    u_target = (1.0 + mT) * N / 2.0
    if abs(n_up - round(n_up)) > 1e-9 or abs(u_target - round(u_target)) > 1e-9:
        raise ValueError("N(1+m0)/2 and N(1+mT)/2 must be integers")
    n_up = int(round(n_up))
    n_dn = N - n_up
    u_target = int(round(u_target))

    qflip = 0.5 * (1.0 - math.exp(-2.0 * T))
    if qflip == 0.0:
        return 0.0 if u_target == n_up else -math.inf
    lf = _log_factorials(N + 1)
    log_q = math.log(qflip)
    log_1mq = math.log1p(-qflip)

    # k_dn = flips among ups, k_up = flips among downs; n_up - k_dn + k_up = u_target
    k_lo = max(0, n_up - u_target)
    k_hi = min(n_up, N - u_target)
    if k_lo > k_hi:
        return -math.inf
    k_dn = np.arange(k_lo, k_hi + 1)
    k_up = u_target - n_up + k_dn
    log_terms = (
        lf[n_up] - lf[k_dn] - lf[n_up - k_dn]
        + k_dn * log_q + (n_up - k_dn) * log_1mq
        + lf[n_dn] - lf[k_up] - lf[n_dn - k_up]
        + k_up * log_q + (n_dn - k_up) * log_1mq
    )
    top = np.max(log_terms)
    return float(top + math.log(np.sum(np.exp(log_terms - top))))


def mag_constrained_pressure(lam: float, m: float, t: float) -> float:
    """Time-t pressure of a single-spin tilt given initial magnetization m.

    (1+m)/2 log(cosh lam + e^{-2t} sinh lam)
      + (1-m)/2 log(cosh lam - e^{-2t} sinh lam),
    evaluated through logaddexp so t = 0 returns exactly lam*m.
    """
    if abs(m) > 1 + 1e-12:
        raise ValueError("|m| must be <= 1")
    if t < -0.05:
        # the closed form extends analytically a little below 0, which the
        # centered derivative stencils at t = 0 rely on
        raise ValueError("t must be >= 0 (tolerating tiny negative probes)")
    s = math.exp(-2.0 * t)
    if s <= 1.0:
        log_1ps = math.log1p(s)
        log_1ms = math.log1p(-s) if s < 1.0 else -math.inf
        # cosh l + s sinh l = [(1+s)e^l + (1-s)e^-l]/2, and the mirror for -s
        plus = float(np.logaddexp(lam + log_1ps, -lam + log_1ms)) - math.log(2.0)
        minus = float(np.logaddexp(lam + log_1ms, -lam + log_1ps)) - math.log(2.0)
    else:
        arg_plus = math.cosh(lam) + s * math.sinh(lam)
        arg_minus = math.cosh(lam) - s * math.sinh(lam)
        if arg_plus <= 0 or arg_minus <= 0:
            raise ValueError("tilt too strong for the negative-t probe")
        plus, minus = math.log(arg_plus), math.log(arg_minus)
    return float(0.5 * (1.0 + m) * plus + 0.5 * (1.0 - m) * minus)


def mag_mc_pressure(
    N: int, m0: float, t: float, lam: float, replicas: int, seed, bootstrap: int = 200
):
    """Monte Carlo estimate of (1/N) log E[e^{lam sum_i s_i(t)}] with bootstrap SE.

    The dynamics marginal is sampled exactly: each spin's flip count over
    [0, t] is Poisson(t) and its parity decides the sign at time t.  Returns
    (estimate, bootstrap standard error of the estimate).
    """
    n_up = int(round((1.0 + m0) * N / 2.0))
    rng = rng_from(seed)
    flips = rng.poisson(t, size=(replicas, N))
    signs = np.where(flips % 2 == 0, 1.0, -1.0)
    signs[:, n_up:] *= -1.0  # spins n_up..N-1 start down
    s_tot = signs.sum(axis=1)
    # average e^{lam S} stably: factor out the max exponent
    expo = lam * s_tot
    top = np.max(expo)
    est = (top + math.log(np.mean(np.exp(expo - top)))) / N

    boots = np.empty(bootstrap)
    for b in range(bootstrap):
        idx = rng.integers(0, replicas, size=replicas)
        e = expo[idx]
        tp = np.max(e)
        boots[b] = (tp + math.log(np.mean(np.exp(e - tp)))) / N
    return float(est), float(np.std(boots, ddof=1))


def mag_value_and_partials(m, q):
    """(L, dL/dm, dL/dv) in one pass, sharing the square root and the ratio.

    With u = e^{2 p*}: dL/dv = p* = log(u)/2 and dL/dm = sinh(2 p*)
    = (u - 1/u)/2.
    """
    m = np.asarray(m, dtype=float)
    q = np.asarray(q, dtype=float)
    m, q = np.broadcast_arrays(m, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(q * q + 4.0 * (1.0 - m * m))
        u = np.where(q >= 0, (q + r) / (2.0 * (1.0 - m)), (2.0 * (1.0 + m)) / (r - q))
        log_u = np.log(u)
        val = 0.5 * q * log_u - 0.5 * r + 1.0
        val = np.where(q == 0, 1.0 - np.sqrt(np.maximum(1.0 - m * m, 0.0)), val)
        lx = 0.5 * (u - 1.0 / u)
    val = np.where((m >= 1.0) & (q > 0), np.inf, val)
    val = np.where((m <= -1.0) & (q < 0), np.inf, val)
    val = np.where(np.abs(m) > 1.0, np.inf, val)
    val = np.where(np.isnan(val), np.inf, val)
    return val, lx, 0.5 * log_u


def mag_model():
    """LagrangianModel view for the trajectory machinery."""
    from .trajectory import LagrangianModel

    return LagrangianModel(
        lagrangian=lambda x, v: mag_lagrangian_vec(x, v),
        dl_dx=lambda x, v: mag_dl_dm(x, v),
        dl_dv=lambda x, v: mag_momentum(x, v),
        value_and_partials=mag_value_and_partials,
        domain=(-1.0, 1.0),
        flow=lambda x, dt: x * np.exp(-2.0 * dt),
        drift=lambda x: -2.0 * np.asarray(x, float),
        extremal=mag_extremal,
    )
