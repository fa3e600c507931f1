"""Bad endpoints: non-unique optimal histories of the conditioned dynamics.

Given a static initial rate function I and an endpoint (mT, T), the total
cost of a history starting at m' is I(m') + K_T(m', mT) with K_T the
fixed-endpoint action infimum.  M* is the set of minimizing start points.
An endpoint is bad when M* has at least two elements and tiny endpoint
perturbations mT +- delta 2^-n select single minimizers converging to two
distinct elements of M*: the scalar transcription of approximating-sequence
badness detection, with the start magnetization playing the conditioned
observable.

Nature/nurture: a minimizer is "nature" when its start is closer to the
zero-cost preimage of the endpoint (pay the static cost, ride the drift)
than to the typical set argmin I, and "nurture" in the opposite case; a
10% dead band relative to the anchor separation avoids label flapping near
the crossover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SpinLDPError
from .io_utils import write_csv
from .magnetization import mag_model
from .rate_functions import RateFunctionSpec, bernoulli_rate, double_well_rate, tabulated_rate
from .seeding import child_seed
from .trajectory import (
    ActionProblem,
    FixedStart,
    OpenStart,
    minimize_action_fixed,
    minimize_action_open_start,
)

__all__ = [
    "SolverOpts",
    "transition_cost",
    "optimal_initials",
    "is_bad",
    "nature_nurture_classify",
    "badness_scan",
    "BadnessScanResult",
    "rate_function_from_descriptor",
]


@dataclass(frozen=True)
class SolverOpts:
    """Resolution/budget bundle passed through to the trajectory solvers."""

    dt_target: float = 0.005
    min_steps: int = 240
    max_iter: int = 3000
    gtol: float = 1e-9
    seed: object = 0

    def steps_for(self, T: float) -> int:
        return max(self.min_steps, int(math.ceil(T / self.dt_target)))


def rate_function_from_descriptor(kind: str, params) -> RateFunctionSpec:
    if kind == "bernoulli":
        return bernoulli_rate(float(params[0]))
    if kind == "double_well":
        return double_well_rate(float(params[0]))
    if kind == "tabulated":
        return tabulated_rate(params[0], params[1])
    raise ValueError(f"unknown rate function kind {kind!r}")


def transition_cost(model, m_start: float, m_end: float, T: float, opts: SolverOpts = SolverOpts()) -> float:
    """K_T(m_start, m_end): fixed-endpoint action infimum."""
    problem = ActionProblem(model, FixedStart(m_start), m_end, T)
    _, value = minimize_action_fixed(
        problem, steps=opts.steps_for(T), seed=opts.seed,
        max_iter=opts.max_iter, gtol=opts.gtol,
    )
    return value


def optimal_initials(
    I: RateFunctionSpec,
    mT: float,
    T: float,
    opts: SolverOpts = SolverOpts(),
    model=None,
    cluster_gamma0: float = 1e-3,
    cluster_value: float = 1e-5,
):
    """The cluster set M* of minimizers of m' -> I(m') + K_T(m', mT).

    Returns a list of OpenMinimizer records sorted by value (global minimum
    first), all within cluster_value of the minimum and mutually separated
    by more than cluster_gamma0 in their start points.
    """
    model = model if model is not None else mag_model()
    problem = ActionProblem(model, OpenStart(I), mT, T)
    _, _, cluster = minimize_action_open_start(
        problem, steps=opts.steps_for(T), seed=opts.seed,
        max_iter=opts.max_iter, gtol=opts.gtol,
        cluster_gamma0=cluster_gamma0, cluster_value=cluster_value,
    )
    return cluster


def is_bad(
    I: RateFunctionSpec,
    mT: float,
    T: float,
    epsilon: float = 0.1,
    delta: float = 0.05,
    opts: SolverOpts = SolverOpts(),
    model=None,
    minimizers=None,
    n_levels: int = 5,
):
    """Two-sided branch-selection detector.

    True iff M*(mT) has >= 2 elements and the perturbed endpoints
    mT + delta 2^-n and mT - delta 2^-n (n = 0..n_levels-1) select single
    minimizers converging to two distinct elements of M* separated by more
    than epsilon.  Always returns (flag, diagnostics).
    """
    model = model if model is not None else mag_model()
    if minimizers is None:
        minimizers = optimal_initials(I, mT, T, opts=opts, model=model)
    diag = {
        "n_minimizers": len(minimizers),
        "gamma0": [m.gamma0 for m in minimizers],
        "plus_branch": [],
        "minus_branch": [],
    }
    if len(minimizers) < 2:
        return False, diag

    for n in range(n_levels):
        d = delta * 2.0**-n
        for sign, key in ((+1.0, "plus_branch"), (-1.0, "minus_branch")):
            sel = optimal_initials(I, mT + sign * d, T, opts=opts, model=model)
            diag[key].append(sel[0].gamma0 if sel else math.nan)

    g_star = np.array([m.gamma0 for m in minimizers])
    plus = diag["plus_branch"][-1]
    minus = diag["minus_branch"][-1]
    near_plus = int(np.argmin(np.abs(g_star - plus)))
    near_minus = int(np.argmin(np.abs(g_star - minus)))
    separated = abs(plus - minus) > epsilon
    distinct = near_plus != near_minus
    flag = bool(separated and distinct)
    diag["selected"] = (float(g_star[near_plus]), float(g_star[near_minus]))
    diag["separation"] = abs(plus - minus)
    return flag, diag


def nature_nurture_classify(
    I: RateFunctionSpec,
    mT: float,
    T: float,
    opts: SolverOpts = SolverOpts(),
    model=None,
    minimizers=None,
    dead_band: float = 0.10,
):
    """Per-minimizer nature/nurture labels plus an aggregate.

    nature: the start serves the conditioning (close to the zero-cost
    preimage flow(mT, -T)); nurture: the start is typical for I (close to
    argmin I).  Ties within dead_band * anchor separation are 'mixed'.
    Returns (label, records) with records of
    (gamma0, label, d_nature, d_nurture).
    """
    model = model if model is not None else mag_model()
    if minimizers is None:
        minimizers = optimal_initials(I, mT, T, opts=opts, model=model)
    anchor = float(model.flow(mT, -T)) if model.flow is not None else mT
    wells = I.minimizers
    records = []
    for m in minimizers:
        d_nat = abs(m.gamma0 - anchor)
        d_nur = min(abs(m.gamma0 - w) for w in wells)
        ref = max(abs(anchor - min(wells, key=lambda w: abs(w - anchor))), 1e-6)
        if abs(d_nat - d_nur) <= dead_band * ref:
            label = "mixed"
        elif d_nat < d_nur:
            label = "nature"
        else:
            label = "nurture"
        records.append((m.gamma0, label, d_nat, d_nur))
    labels = {r[1] for r in records}
    aggregate = labels.pop() if len(labels) == 1 else "mixed"
    return aggregate, records


@dataclass(frozen=True)
class ScanCell:
    T: float
    mT: float
    n_minimizers: int
    gamma0_list: tuple
    cost: float
    bad: bool
    label: str
    d_nature: float
    d_nurture: float
    branch_selection: tuple = ()  # (plus-selected gamma0, minus-selected gamma0)
    error: str = ""


@dataclass(frozen=True)
class BadnessScanResult:
    kind: str
    params: tuple
    cells: tuple

    def bad_count(self) -> int:
        return sum(1 for c in self.cells if c.bad)

    def write_csv(self, path):
        write_csv(
            path,
            ["T", "mT", "n_minimizers", "gamma0_list", "cost", "bad", "label",
             "d_nature", "d_nurture", "error"],
            [
                [c.T, c.mT, c.n_minimizers, list(c.gamma0_list), c.cost,
                 int(c.bad), c.label, c.d_nature, c.d_nurture, c.error]
                for c in self.cells
            ],
        )


def _scan_cell(args):
    (kind, params, T, mT, epsilon, delta, opts_dict, master_seed, index) = args
    I = rate_function_from_descriptor(kind, params)
    opts = SolverOpts(**{**opts_dict, "seed": child_seed(master_seed, index)})
    model = mag_model()
    try:
        mins = optimal_initials(I, mT, T, opts=opts, model=model)
        bad, diag = is_bad(I, mT, T, epsilon, delta, opts=opts, model=model, minimizers=mins)
        label, records = nature_nurture_classify(I, mT, T, opts=opts, model=model, minimizers=mins)
        best = records[0]
        branches = ()
        if diag["plus_branch"]:
            branches = (diag["plus_branch"][-1], diag["minus_branch"][-1])
        cell = ScanCell(
            T=T, mT=mT, n_minimizers=len(mins),
            gamma0_list=tuple(m.gamma0 for m in mins),
            cost=mins[0].value, bad=bad, label=label,
            d_nature=best[2], d_nurture=best[3],
            branch_selection=branches,
        )
    except SpinLDPError as exc:
        cell = ScanCell(
            T=T, mT=mT, n_minimizers=0, gamma0_list=(), cost=math.nan,
            bad=False, label="", d_nature=math.nan, d_nurture=math.nan,
            error=type(exc).__name__,
        )
    return index, cell


def badness_scan(
    I_kind: str,
    I_params,
    T_grid: Sequence[float],
    mT_grid: Sequence[float],
    epsilon: float = 0.1,
    delta: float = 0.05,
    opts: SolverOpts = SolverOpts(),
    master_seed: int = 0,
    workers: int = 1,
    csv_path=None,
) -> BadnessScanResult:
    """Phase-diagram harness: per-cell minimizer sets, badness, labels.

    Cells are seeded by (master_seed, cell index) and assembled in index
    order, so the result is identical for any worker count.  Per-cell
    errors are recorded in the cell, never aborting the scan.
    """
    opts_dict = {
        "dt_target": opts.dt_target, "min_steps": opts.min_steps,
        "max_iter": opts.max_iter, "gtol": opts.gtol,
    }
    jobs = []
    idx = 0
    for T in T_grid:
        for mT in mT_grid:
            jobs.append((I_kind, tuple(I_params), float(T), float(mT),
                         epsilon, delta, opts_dict, master_seed, idx))
            idx += 1
    if workers > 1 and len(jobs) > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers) as pool:
            results = pool.map(_scan_cell, jobs)
    else:
        results = [_scan_cell(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    cells = tuple(c for _, c in results)
    out = BadnessScanResult(kind=I_kind, params=tuple(I_params), cells=cells)
    if csv_path is not None:
        out.write_csv(csv_path)
    return out
