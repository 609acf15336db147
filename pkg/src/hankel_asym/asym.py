"""Large-n expansion of log det H_n and its constants.

    log det H_n ~ c1 n^2 log n + c2 n^2 + c3 n log n + c4 n
                  + c5 sqrt(n) + c6 log n + c7

The Laguerre part (U = 1) is log 1/A_n with coefficients d1..d6; the
perturbation U only enters through c5 and the constant c7.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import mpmath
from mpmath import mpf

from .bigreal import (
    GUARD_BITS,
    Precision,
    as_precision,
    cosine_panel_count,
    CosineSampler,
    gaussian_cutoff,
    integrate_semi_infinite,
)
from .errors import ConvergenceError, DomainError
from .specfun import barnes_log_g_product, barnes_log_g_recurrence
from .weights import WeightSpec, log_U0, logU_eval, s_decay_rate

C_KEYS = tuple(f"c{k}" for k in range(1, 8))
D_KEYS = tuple(f"d{k}" for k in range(1, 7))
METHODS = ("auto", "quadrature")


@dataclass(frozen=True)
class AsymConstants:
    c1: mpf
    c2: mpf
    c3: mpf
    c4: mpf
    c5: mpf
    c6: mpf
    c7: mpf
    d1: mpf
    d2: mpf
    d3: mpf
    d4: mpf
    d5: mpf
    d6: mpf
    spec: WeightSpec
    bits: int = 128

    def values(self) -> dict:
        return {k: getattr(self, k) for k in C_KEYS + D_KEYS}

    def to_dict(self, digits: int = 30) -> dict:
        """Constants as decimal strings, keyed c1..c7, d1..d6."""
        return {k: mpmath.nstr(v, digits, strip_zeros=False) for k, v in self.values().items()}

    def with_overrides(self, **values) -> "AsymConstants":
        """Copy with some constants replaced; used for negative controls."""
        unknown = set(values) - set(C_KEYS + D_KEYS)
        if unknown:
            raise DomainError(f"unknown constants {sorted(unknown)}")
        return replace(self, **{k: mpf(v) for k, v in values.items()})


def log_barnes_g(z, prec) -> mpf:
    """log G(z) for z > 0, via the product formula below 1 and the recurrence above."""
    z = mpf(z)
    if z < 1:
        return barnes_log_g_product(z - 1, prec)
    return barnes_log_g_recurrence(z - 1, prec)


def d_constants(nu, prec) -> tuple:
    """(d1, ..., d6): log 1/A_n ~ d1 n^2 log n + d2 n^2 + d3 n log n + d4 n + d5 log n + d6."""
    if nu < -0.5:
        raise DomainError(f"nu must be >= -1/2, got {nu}")
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        nu = mpf(nu)
        pi = mpmath.pi
        log_g_half = barnes_log_g_product(mpf(-1) / 2, prec)
        d6 = (
            mpf(4) / 3 * log_g_half
            + (mpf(1) / 3 + nu / 2) * mpmath.log(pi)
            + (nu / 2 - mpf(1) / 18) * mpmath.log(2)
            - log_barnes_g(1 + nu, prec)
        )
        out = (mpf(1), mpf(-3) / 2, nu, -nu + mpmath.log(2 * pi), nu * nu / 2 - mpf(1) / 6, d6)
    with prec.workprec():
        return tuple(+v for v in out)


def predict_log_An_inv(nu, n: int, prec) -> mpf:
    """The large-n form of log 1/A_n built from d1..d6."""
    if n < 2:
        raise DomainError(f"expansion needs n >= 2, got {n}")
    prec = as_precision(prec)
    d1, d2, d3, d4, d5, d6 = d_constants(nu, prec)
    with prec.workprec(GUARD_BITS):
        n = mpf(n)
        L = mpmath.log(n)
        value = d1 * n * n * L + d2 * n * n + d3 * n * L + d4 * n + d5 * L + d6
    with prec.workprec():
        return +value


def log_u_integral(spec: WeightSpec, prec, method: str = "auto") -> mpf:
    """Integral of log U(x^2) over (0, inf)."""
    _check_method(method)
    prec = as_precision(prec)
    if spec.is_unit:
        return mpf(0)
    with prec.workprec(GUARD_BITS):
        if spec.family == "gauss_exp" and method == "auto":
            value = spec.theta * mpmath.sqrt(mpmath.pi) / 2
        else:
            # log U(y^2) = O(exp(-r y^2)), which dominates exp(-r y) past y = 1.
            value = integrate_semi_infinite(lambda y: logU_eval(spec, y * y), spec.decay_rate, prec)
    with prec.workprec():
        return +value


def s_squared_integral(spec: WeightSpec, prec, method: str = "auto") -> mpf:
    """Integral of x S(x)^2 over (0, inf), S the cosine transform of log U(y^2)."""
    _check_method(method)
    prec = as_precision(prec)
    if spec.is_unit:
        return mpf(0)
    with prec.workprec(GUARD_BITS):
        if spec.family == "gauss_exp" and method == "auto":
            value = spec.theta**2 * mpmath.pi / 4
        else:
            value = _s_squared_quadrature(spec, prec)
    with prec.workprec():
        return +value


def _s_squared_quadrature(spec: WeightSpec, prec: Precision) -> mpf:
    # One inner rule per x (panel counts from cosine_panel_count) on cached
    # layouts; the inner rule is validated against its doubling at sample
    # points instead of on every outer node.
    def g(y):
        return logU_eval(spec, y * y)

    y_max = gaussian_cutoff(g, prec)
    sampler = CosineSampler(g, y_max, prec)
    factor = 1

    def S(x, f=None):
        return sampler(x, (f or factor) * cosine_panel_count(x, y_max))

    def integrand(x):
        return mpf(0) if x == 0 else x * S(x) ** 2

    # S is only accurate to ~eps absolutely, so x S^2 reaches the noise
    # floor once |S| ~ sqrt(eps); scan for that point directly.
    step = mpf(1) / 2
    values = [integrand(step * k) for k in range(1, 5)]
    tol = max(values + [mpf(1)]) * prec.eps(-GUARD_BITS)
    X = 4 * step
    limit = 4 * (prec.bits + GUARD_BITS) / s_decay_rate(spec)
    while not (values[-1] <= tol and values[-2] <= tol):
        if X > limit:
            raise ConvergenceError("x S(x)^2 does not decay at the expected rate", (X,))
        X += step
        values.append(integrand(X))

    samples = [mpf(0), mpf(1) / 2, mpf(1)] + [X * k / 4 for k in range(1, 5)]
    for _ in range(4):
        if all(abs(S(x) - S(x, 2 * factor)) <= prec.eps(GUARD_BITS) * max(abs(S(x)), 1) for x in samples):
            break
        factor *= 2
    else:
        raise ConvergenceError("inner cosine rule did not settle", (factor,))
    return integrate_semi_infinite(integrand, s_decay_rate(spec), prec, endpoint_exponent=1, x_max=X)


def _check_method(method):
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")


def c_constants(spec: WeightSpec, prec=Precision(128), method: str = "auto") -> AsymConstants:
    """All expansion constants for ``spec``.

    ``method="quadrature"`` evaluates the two integrals numerically even when
    a closed form exists.  log U(0) is always analytic for built-in families.
    """
    prec = as_precision(prec)
    _check_method(method)
    if spec.family == "custom":
        return _c_constants(spec, prec, method)
    return _c_constants_cached(spec.to_json(), prec.bits, method)


@lru_cache(maxsize=64)
def _c_constants_cached(spec_json: str, bits: int, method: str) -> AsymConstants:
    return _c_constants(WeightSpec.from_json(spec_json), Precision(bits), method)


def _c_constants(spec: WeightSpec, prec: Precision, method: str) -> AsymConstants:
    d = d_constants(spec.nu, prec)
    c5_int = log_u_integral(spec, prec, method)
    s2 = s_squared_integral(spec, prec, method)
    with prec.workprec(GUARD_BITS):
        pi = mpmath.pi
        c5 = 2 / pi * c5_int
        c7 = d[5] - mpf(spec.nu) / 2 * log_U0(spec) + s2 / (2 * pi * pi)
    with prec.workprec():
        c = (d[0], d[1], d[2], d[3], +c5, d[4], +c7)
    return AsymConstants(*c, *d, spec=spec, bits=prec.bits)


def predict_log_det(consts: AsymConstants, n: int) -> mpf:
    """Right-hand side of the expansion at order n, without the o(1) term."""
    if n < 2:
        raise DomainError(f"expansion needs n >= 2, got {n}")
    prec = Precision(consts.bits)
    with prec.workprec(GUARD_BITS):
        k = consts
        m = mpf(n)
        L = mpmath.log(m)
        value = (
            k.c1 * m * m * L + k.c2 * m * m + k.c3 * m * L + k.c4 * m
            + k.c5 * mpmath.sqrt(m) + k.c6 * L + k.c7
        )
    with prec.workprec():
        return +value


def bessel_det_asym(spec: WeightSpec, n: int, prec=Precision(128), method: str = "auto") -> mpf:
    """Large-n form of log det(I + B_n) for the compressed Bessel kernel."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    prec = as_precision(prec)
    if spec.is_unit:
        return mpf(0)
    a = log_u_integral(spec, prec, method)
    s2 = s_squared_integral(spec, prec, method)
    with prec.workprec(GUARD_BITS):
        pi = mpmath.pi
        value = 2 * mpmath.sqrt(mpf(n)) / pi * a - mpf(spec.nu) / 2 * log_U0(spec) + s2 / (2 * pi * pi)
    with prec.workprec():
        return +value


__all__ = [
    "AsymConstants",
    "C_KEYS",
    "D_KEYS",
    "bessel_det_asym",
    "c_constants",
    "d_constants",
    "log_barnes_g",
    "log_u_integral",
    "predict_log_An_inv",
    "predict_log_det",
    "s_squared_integral",
]
