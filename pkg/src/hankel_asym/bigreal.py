"""Arbitrary-precision foundation: working-precision contract and quadrature.

All values are :class:`mpmath.mpf`.  Every routine takes an explicit
:class:`Precision` and evaluates under ``mpmath.workprec`` so callers never
depend on the global ``mp.prec`` setting.  mpmath keeps that setting in
process-global state, so parallel callers should use processes, not threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
from mpmath import mp, mpf

from .errors import ConvergenceError, DomainError

MIN_BITS = 64
GUARD_BITS = 16


@dataclass(frozen=True)
class Precision:
    """Binary working precision in bits."""

    bits: int

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < MIN_BITS:
            raise DomainError(f"precision must be an integer >= {MIN_BITS} bits, got {self.bits!r}")

    def workprec(self, extra: int = 0):
        """Context manager running mpmath at ``bits + extra``."""
        return mp.workprec(self.bits + extra)

    def eps(self, slack: int = 0) -> mpf:
        """2**-(bits - slack)."""
        return mpf(2) ** (slack - self.bits)

    def doubled(self) -> "Precision":
        return Precision(2 * self.bits)

    def __int__(self):
        return self.bits


def as_precision(prec) -> Precision:
    """Accept a :class:`Precision` or a plain bit count."""
    if isinstance(prec, Precision):
        return prec
    return Precision(int(prec))


@dataclass(frozen=True)
class QuadRule:
    """Quadrature nodes and positive weights; ``order`` is the per-panel node count."""

    nodes: tuple
    weights: tuple
    order: int

    def __len__(self):
        return len(self.nodes)

    def apply(self, f: Callable) -> mpf:
        return mpmath.fsum(w * f(x) for x, w in zip(self.nodes, self.weights))

    def mapped(self, a, b) -> "QuadRule":
        """Affine image of a rule on (-1, 1) onto (a, b)."""
        a, b = mpf(a), mpf(b)
        half = (b - a) / 2
        mid = (a + b) / 2
        return QuadRule(
            tuple(mid + half * x for x in self.nodes),
            tuple(half * w for w in self.weights),
            self.order,
        )


def required_precision(n: int, nu=0) -> Precision:
    """Conservative working precision for order-``n`` Hankel determinants.

    The log-determinant grows like n**2 log n while the entries' Hadamard
    bound grows like 2 n**2 log n, so roughly n**2 log n nats cancel.
    ``nu`` is accepted for interface symmetry; the bound does not depend on it.
    """
    if n < 1:
        raise DomainError(f"matrix order must be >= 1, got {n}")
    bits = math.ceil(2.5 * n * n * math.log(max(n, 2)) / math.log(2)) + 64
    return Precision(max(256, bits))


def _legendre_with_derivative(m: int, x: mpf):
    p0, p1 = mpf(1), x
    for k in range(2, m + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = m * (x * p1 - p0) / (x * x - 1)
    return p1, dp


@lru_cache(maxsize=256)
def _gauss_legendre_cached(m: int, bits: int):
    with mp.workprec(bits + GUARD_BITS):
        tol = mpf(2) ** (-bits - 4)
        half = []
        for i in range(1, m // 2 + 1):
            x = mpf(math.cos(math.pi * (i - 0.25) / (m + 0.5)))
            for _ in range(100):
                p, dp = _legendre_with_derivative(m, x)
                dx = p / dp
                x -= dx
                if abs(dx) <= tol:
                    break
            else:
                raise ConvergenceError(
                    f"Gauss-Legendre node {i} of {m} did not converge at {bits} bits", (x, dx)
                )
            p, dp = _legendre_with_derivative(m, x)
            half.append((x, 2 / ((1 - x * x) * dp * dp)))
        nodes, weights = [], []
        for x, w in half:
            nodes.append(-x)
            weights.append(w)
        if m % 2:
            _, dp = _legendre_with_derivative(m, mpf(0))
            nodes.append(mpf(0))
            weights.append(2 / (dp * dp))
        for x, w in reversed(half):
            nodes.append(x)
            weights.append(w)
    with mp.workprec(bits):
        return tuple(+x for x in nodes), tuple(+w for w in weights)


def gauss_legendre(m: int, prec) -> QuadRule:
    """m-point Gauss-Legendre rule on (-1, 1), nodes by Newton iteration.

    Nodes come back sorted ascending and exactly antisymmetric.
    """
    if m < 1:
        raise DomainError(f"node count must be >= 1, got {m}")
    prec = as_precision(prec)
    nodes, weights = _gauss_legendre_cached(int(m), prec.bits)
    return QuadRule(nodes, weights, int(m))


def panel_order(bits: int) -> int:
    """Per-panel Gauss-Legendre order used by the composite rules."""
    return max(16, min(400, bits // 8 + 8))


def composite_rule(edges: Sequence, m: int, prec) -> QuadRule:
    """Concatenate an m-point rule over consecutive panels ``edges[i]..edges[i+1]``."""
    base = gauss_legendre(m, prec)
    nodes, weights = [], []
    with as_precision(prec).workprec(GUARD_BITS):
        for a, b in zip(edges[:-1], edges[1:]):
            r = base.mapped(a, b)
            nodes.extend(r.nodes)
            weights.extend(r.weights)
    return QuadRule(tuple(nodes), tuple(weights), m)


def _is_analytic_power(p) -> bool:
    q = 2 * float(p) + 1
    return q >= 0 and abs(q - round(q)) < 1e-12


def sqrt_mapped_rule(x_max, panels: int, m: int, prec, endpoint_exponent=0) -> QuadRule:
    """Rule for integrals over (0, x_max) via the substitution x = s**2.

    Returned nodes and weights live in the x variable (the Jacobian 2s is
    folded into the weights).  An integrand behaving like x**p at 0 becomes
    2 s**(2p+1) ds, which is analytic when 2p+1 is a non-negative integer;
    otherwise the first panel is graded geometrically toward 0.
    """
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        s_max = mpmath.sqrt(mpf(x_max))
        h = s_max / panels
        edges = [h * k for k in range(panels + 1)]
        if not _is_analytic_power(endpoint_exponent):
            power = 2 * float(endpoint_exponent) + 2
            if power <= 0:
                raise DomainError(f"integrand x**{endpoint_exponent} is not integrable at 0")
            levels = math.ceil((prec.bits + GUARD_BITS) / power) + 1
            graded = [h / mpf(2) ** k for k in range(levels, 0, -1)]
            edges = [mpf(0)] + graded + edges[1:]
        rule = composite_rule(edges, m, prec)
        nodes = tuple(s * s for s in rule.nodes)
        weights = tuple(2 * s * w for s, w in zip(rule.nodes, rule.weights))
    return QuadRule(nodes, weights, m)


def _combine(rule: QuadRule, f):
    """Apply ``rule`` to a scalar- or sequence-valued integrand."""
    values = [f(x) for x in rule.nodes]
    if isinstance(values[0], (list, tuple)):
        return [mpmath.fdot(rule.weights, column) for column in zip(*values)]
    return mpmath.fdot(rule.weights, values)


def _distance(a, b):
    if isinstance(a, list):
        return max(abs(u - v) for u, v in zip(a, b)), max(max(abs(u) for u in b), mpf(1))
    return abs(a - b), max(abs(b), mpf(1))


def truncation_point(f: Callable, decay_hint, prec, x0=0) -> mpf:
    """Smallest scanned X >= x0 with the exponential tail beyond X below 2**-bits.

    The a priori bound (bits ln 2) / r caps the search; scanning starts low so
    integrands decaying faster than the hint are truncated early.
    """
    prec = as_precision(prec)
    r = mpf(decay_hint)
    if r <= 0:
        raise DomainError(f"decay rate must be positive, got {decay_hint}")
    ln2 = mpmath.log(2)
    x0 = mpf(x0)
    bound = x0 + (prec.bits + GUARD_BITS) * ln2 / r
    probe = [x0 + (bound - x0) * k / 32 for k in range(1, 33)]
    scale = max([mpf(1)] + [_magnitude(f(x)) for x in probe])
    step = max(mpf(1) / 4, (bound - x0) / 64)
    tol = scale * prec.eps(-GUARD_BITS)
    X = x0 + step
    for _ in range(4000):
        if all(_magnitude(f(X + k * step)) / r <= tol for k in range(3)):
            return X + 2 * step
        X += step
    raise ConvergenceError("could not locate a truncation point for the integrand", (X,))


def _magnitude(v):
    if isinstance(v, (list, tuple)):
        return max(abs(u) for u in v)
    return abs(v)


def integrate_semi_infinite(
    f: Callable,
    decay_hint,
    prec,
    *,
    x0=0,
    endpoint_exponent=0,
    max_refinements: int = 8,
    x_max=None,
):
    """Integral of ``f`` over (0, inf) for an exponentially decaying integrand.

    ``decay_hint`` is a rate r with |f(x)| <= C exp(-r x) beyond ``x0``;
    ``endpoint_exponent`` describes the x**p behaviour at 0.  The domain is
    truncated where the tail drops below 2**-bits, mapped by x = s**2 and
    covered by Gauss-Legendre panels whose count doubles until two
    successive estimates agree.  ``f`` may return a list; the result then
    is a list integrated component-wise.  A caller that already knows a
    truncation point can pass it as ``x_max``.
    """
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        X = truncation_point(f, decay_hint, prec, x0) if x_max is None else mpf(x_max)
        m = panel_order(prec.bits)
        panels = max(1, math.ceil(float(mpmath.sqrt(X))))
        tol = prec.eps(GUARD_BITS)
        prev = _combine(sqrt_mapped_rule(X, panels, m, prec, endpoint_exponent), f)
        for _ in range(max_refinements):
            panels *= 2
            cur = _combine(sqrt_mapped_rule(X, panels, m, prec, endpoint_exponent), f)
            diff, scale = _distance(prev, cur)
            if diff <= tol * scale:
                return [+v for v in cur] if isinstance(cur, list) else +cur
            prev = cur
    raise ConvergenceError("semi-infinite quadrature did not converge", (prev, cur))


def cosine_panel_count(x, y_max) -> int:
    """Panels over (0, y_max): a power of two times ceil(2 y_max), each no
    longer than pi / (4 max(x, 1)) so it sees at most an eighth of an
    oscillation."""
    x, y_max = mpf(x), mpf(y_max)
    h = mpmath.pi / (4 * max(x, mpf(1)))
    panels = max(1, int(mpmath.ceil(2 * y_max)))
    while y_max / panels > h:
        panels *= 2
    return panels


class CosineSampler:
    """Composite Gauss-Legendre sums for the cosine transform of g on (0, y_max).

    Samples of g on each panel layout are cached as fixed-point integers, so
    evaluating many x on the same layouts costs only integer arithmetic.
    Cosines are propagated from panel to panel by the Chebyshev recurrence
    cos(x (y + H)) = 2 cos(x H) cos(x y) - cos(x (y - H)).
    """

    def __init__(self, g: Callable, y_max, prec):
        self.g = g
        self.prec = as_precision(prec)
        with self.prec.workprec(GUARD_BITS):
            self.y_max = mpf(y_max)
        self.m = max(16, panel_order(self.prec.bits) // 2 + 4)
        self._tables = {}

    def _table(self, panels: int):
        table = self._tables.get(panels)
        if table is None:
            prec = self.prec
            # Recurrence errors grow at most like panels**2 / sin(x H); the
            # direct branch below handles tiny x H.
            shift = prec.bits + GUARD_BITS + 40 + 2 * panels.bit_length()
            local = gauss_legendre(self.m, prec.bits + GUARD_BITS).mapped(0, 1)
            with mp.workprec(shift + 16):
                H = self.y_max / panels
                nodes = [H * c for c in local.nodes]
                weights = [H * w for w in local.weights]
                cols = [
                    [int(mpmath.nint(mpmath.ldexp(self.g(p * H + c), shift))) for p in range(panels)]
                    for c in nodes
                ]
                wfix = [int(mpmath.nint(mpmath.ldexp(w, shift))) for w in weights]
            table = self._tables[panels] = (H, nodes, weights, cols, wfix, shift)
        return table

    def __call__(self, x, panels: int) -> mpf:
        prec = self.prec
        H, nodes, weights, cols, wfix, shift = self._table(panels)
        with mp.workprec(shift + 16):
            x = mpf(x)
            s = mpmath.sin(x * H)
            if s < mpf(2) ** -24:
                # Slowly varying cosines: sum directly.
                total = mpf(0)
                for c, w, col in zip(nodes, weights, cols):
                    total += w * mpmath.fsum(
                        mpmath.cos(x * (p * H + c)) * v for p, v in enumerate(col)
                    )
                total = mpmath.ldexp(total, -shift)
            else:
                t = int(mpmath.nint(mpmath.ldexp(2 * mpmath.cos(x * H), shift)))
                acc_total = 0
                for c, col, wf in zip(nodes, cols, wfix):
                    prev_c = int(mpmath.nint(mpmath.ldexp(mpmath.cos(x * (c - H)), shift)))
                    cur_c = int(mpmath.nint(mpmath.ldexp(mpmath.cos(x * c), shift)))
                    acc = 0
                    for v in col:
                        acc += cur_c * v
                        prev_c, cur_c = cur_c, ((t * cur_c) >> shift) - prev_c
                    acc_total += wf * (acc >> shift)
                total = mpmath.ldexp(mpf(acc_total), -2 * shift)
        with prec.workprec(GUARD_BITS):
            return +total


def cosine_rule_sum(g: Callable, x, y_max, panels: int, prec) -> mpf:
    """One composite Gauss-Legendre estimate of the cosine transform on (0, y_max)."""
    return CosineSampler(g, y_max, prec)(x, panels)


def cosine_transform(g: Callable, x, prec, *, y_max=None, max_refinements: int = 8) -> mpf:
    """Integral of cos(x y) g(y) over y in (0, inf) for a rapidly decaying g.

    The domain is cut where |g| falls below 2**-bits and covered with equal
    panels from :func:`cosine_panel_count`, doubled until two estimates
    agree.  Panel counts repeat across calls, so a memoized ``g`` pays off.
    """
    prec = as_precision(prec)
    if x < 0:
        raise DomainError(f"cosine transform needs x >= 0, got {x}")
    with prec.workprec(GUARD_BITS):
        x = mpf(x)
        if y_max is None:
            y_max = _gaussian_cutoff(g, prec)
        y_max = mpf(y_max)
        panels = cosine_panel_count(x, y_max)
        tol = prec.eps(GUARD_BITS)
        sampler = CosineSampler(g, y_max, prec)
        prev = sampler(x, panels)
        for _ in range(max_refinements):
            panels *= 2
            cur = sampler(x, panels)
            if abs(cur - prev) <= tol * max(abs(cur), mpf(1)):
                with prec.workprec():
                    return +cur
            prev = cur
    raise ConvergenceError("cosine transform did not converge", (prev, cur))


def gaussian_cutoff(g: Callable, prec) -> mpf:
    """Truncation point for a rapidly decaying g, as used by :func:`cosine_transform`."""
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        return _gaussian_cutoff(g, prec)


def _gaussian_cutoff(g: Callable, prec: Precision) -> mpf:
    """First y on a half-unit scan past which |g| stays below 2**-bits."""
    eps = prec.eps(-GUARD_BITS)
    scale = max(abs(g(mpf(k) / 4)) for k in range(9))
    if scale == 0:
        return mpf(1)
    y = mpf(1)
    for _ in range(100000):
        if abs(g(y)) <= eps * scale and abs(g(y + mpf(0.5))) <= eps * scale:
            return y + mpf(0.5)
        y += mpf(0.5)
    raise ConvergenceError("integrand does not decay; no truncation point found", (y,))
