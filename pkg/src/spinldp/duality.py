"""One-dimensional convex conjugation and duality-gap checking.

The conjugate sup_p [slope*p - f(p)] is computed by bracket expansion,
golden-section search, and a Newton polish when a derivative evaluator is
available.  All Hamiltonian/Lagrangian pairs in this package are smooth and
strictly convex in the momentum variable, so the concave objective is
unimodal and the scheme converges to machine-level accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import NonCoercive, NotConvex

VALUE_TOL = 1e-10
ARGMAX_TOL = 1e-8

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ScalarFunction:
    """A scalar convex function with an optional derivative evaluator.

    domain is a closed interval; (-inf, inf) means all of R.  A supplied
    derivative must match central finite differences to relative error 1e-6
    at interior points (see check_derivative).
    """

    fn: Callable[[float], float]
    domain: tuple[float, float] = (-math.inf, math.inf)
    deriv: Optional[Callable[[float], float]] = None

    def __call__(self, p: float) -> float:
        return self.fn(p)


def _safe_eval(fn, p):
    """Evaluate, mapping overflow to +inf (exponential tails are expected)."""
    try:
        v = fn(p)
    except OverflowError:
        return math.inf
    v = float(v)
    if math.isnan(v):
        return math.inf
    return v


def check_derivative(f: ScalarFunction, points: Sequence[float], rtol: float = 1e-6) -> float:
    """Max relative mismatch between f.deriv and central differences."""
    if f.deriv is None:
        raise ValueError("no derivative evaluator supplied")
    worst = 0.0
    for p in points:
        h = 1e-6 * (1.0 + abs(p))
        fd = (f.fn(p + h) - f.fn(p - h)) / (2.0 * h)
        d = f.deriv(p)
        err = abs(d - fd) / (1.0 + abs(fd))
        worst = max(worst, err)
    if worst > rtol:
        raise ValueError(f"derivative mismatch {worst:.3e} exceeds rtol {rtol:.1e}")
    return worst


def _convexity_probe(fn, lo, hi, n=17):
    """Check midpoint convexity of fn on [lo, hi]; raises NotConvex."""
    xs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    vals = [_safe_eval(fn, x) for x in xs]
    for i in range(1, n - 1):
        left, mid, right = vals[i - 1], vals[i], vals[i + 1]
        if math.isinf(left) or math.isinf(right):
            continue
        slack = 1e-9 * (1.0 + abs(left) + abs(right))
        if mid > 0.5 * (left + right) + slack:
            raise NotConvex(
                f"midpoint convexity violated near p={xs[i]:.6g} "
                f"(f={mid:.6g} > {0.5 * (left + right):.6g})"
            )


@dataclass(frozen=True)
class ConjugateResult:
    value: float
    argmax: float


def conjugate(
    f: ScalarFunction | Callable[[float], float],
    slope: float,
    bracket: tuple[float, float] = (-50.0, 50.0),
    value_tol: float = VALUE_TOL,
    argmax_tol: float = ARGMAX_TOL,
    max_doublings: int = 60,
    convexity_check: bool = True,
) -> ConjugateResult:
    """sup_p [slope*p - f(p)] for convex f.

    The bracket slides outward (doubling its step) on a side while the
    endpoint there still beats the interior; coercive objectives turn around
    quickly, and an objective that is still growing after max_doublings
    expansions is declared NonCoercive (supremum +inf).  Golden-section
    search then localizes the maximizer of the concave objective, followed
    by a Newton polish on f'(p) = slope when a derivative is available.
    """
    if isinstance(f, ScalarFunction):
        fn, deriv, domain = f.fn, f.deriv, f.domain
    else:
        fn, deriv, domain = f, None, (-math.inf, math.inf)

    def g(p):
        v = _safe_eval(fn, p)
        return -math.inf if math.isinf(v) else slope * p - v

    lo = max(bracket[0], domain[0])
    hi = min(bracket[1], domain[1])
    if not lo < hi:
        raise ValueError("empty bracket after domain intersection")

    if convexity_check:
        _convexity_probe(fn, lo, hi)

    a, b = lo, hi
    ga, gb = g(a), g(b)
    m = 0.5 * (a + b)
    gm = g(m)

    step = b - a
    n = 0
    while gm < ga and a > domain[0]:
        n += 1
        if n > max_doublings:
            raise NonCoercive(
                f"objective still increasing leftward after {max_doublings} expansions"
            )
        b, gb = m, gm
        m, gm = a, ga
        step *= 2.0
        a = max(a - step, domain[0])
        ga = g(a)
    n = 0
    while gm < gb and b < domain[1]:
        n += 1
        if n > max_doublings:
            raise NonCoercive(
                f"objective still increasing rightward after {max_doublings} expansions"
            )
        a, ga = m, gm
        m, gm = b, gb
        step *= 2.0
        b = min(b + step, domain[1])
        gb = g(b)

    # Golden-section on the concave objective over [a, b].
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    g1, g2 = g(x1), g(x2)
    while b - a > argmax_tol * (1.0 + abs(a) + abs(b)):
        if g1 < g2:
            a, x1, g1 = x1, x2, g2
            x2 = a + _GOLDEN * (b - a)
            g2 = g(x2)
        else:
            b, x2, g2 = x2, x1, g1
            x1 = b - _GOLDEN * (b - a)
            g1 = g(x1)
    p_star = x1 if g1 >= g2 else x2

    if deriv is not None:
        # Newton on h(p) = f'(p) - slope with finite-difference h'.
        p = p_star
        for _ in range(40):
            h = _safe_eval(deriv, p) - slope
            dp = 1e-6 * (1.0 + abs(p))
            hp = (_safe_eval(deriv, p + dp) - _safe_eval(deriv, p - dp)) / (2.0 * dp)
            if not (hp > 0.0) or math.isinf(hp):
                break
            p_new = p - h / hp
            if math.isnan(p_new) or not (a - 1.0 <= p_new <= b + 1.0):
                break
            done = abs(p_new - p) < 1e-15 * (1.0 + abs(p))
            p = p_new
            if done:
                break
        if g(p) >= g(p_star):
            p_star = p

    return ConjugateResult(value=g(p_star), argmax=p_star)


def duality_gap(
    h_family: Callable[[float, float], float],
    l_family: Callable[[float, float], float],
    state_grid: Sequence[float],
    slope_grid: Sequence[float],
    bracket: tuple[float, float] = (-50.0, 50.0),
    l_deriv: Optional[Callable[[float, float], float]] = None,
) -> float:
    """max over the grid of |H(x,p) - sup_q [p q - L(x,q)]|.

    Verifies one direction of a conjugate pair; call again with the families
    swapped for the reverse direction.  l_deriv, when given, is dL/dq and
    enables the Newton polish.
    """
    gap = 0.0
    for x in state_grid:
        sf = ScalarFunction(
            fn=lambda q, _x=x: l_family(_x, q),
            deriv=None if l_deriv is None else (lambda q, _x=x: l_deriv(_x, q)),
        )
        _convexity_probe(sf.fn, bracket[0], bracket[1])
        for p in slope_grid:
            res = conjugate(sf, p, bracket=bracket, convexity_check=False)
            gap = max(gap, abs(h_family(x, p) - res.value))
    return gap
