"""Special functions: log-gamma, Barnes G, Bessel J and Laguerre functions.

Sign convention for the orthonormal Laguerre polynomials: P_i(0) > 0, i.e.
the classical L_i^(nu) scaled by sqrt(i! / Gamma(i + nu + 1)).  The leading
coefficient then has sign (-1)**i, and the Christoffel-Darboux sum reads

    sum_{i<n} P_i(x) P_i(y)
        = sqrt(n (n + nu)) (P_{n-1}(x) P_n(y) - P_{n-1}(y) P_n(x)) / (x - y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from mpmath import mp, mpf
from scipy.special import gammaln

from .bigreal import GUARD_BITS, Precision, as_precision
from .errors import ConvergenceError, DomainError

# Bessel ascending series is used everywhere; past this point the cancellation
# (terms grow like e**x) is paid for with extra working bits.
def bessel_switch_point(bits: int) -> float:
    return max(20.0, bits / 4)


@lru_cache(maxsize=4096)
def _log_gamma_cached(z: mpf, bits: int) -> mpf:
    with mp.workprec(bits + GUARD_BITS + 8):
        z = mpf(z)
        shift_to = max(mpf(12), mpf(0.3) * bits)
        correction = mpf(0)
        if z < shift_to:
            steps = int(mpmath.ceil(shift_to - z))
            prod = mpf(1)
            for k in range(steps):
                prod *= z + k
            correction = mpmath.log(prod)
            z = z + steps
        eps = mpf(2) ** (-bits - GUARD_BITS)
        total = (z - mpf(0.5)) * mpmath.log(z) - z + mpmath.log(2 * mpmath.pi) / 2
        zsq = z * z
        zpow = z
        for k in range(1, 4 * bits + 100):
            term = mpmath.bernoulli(2 * k) / (2 * k * (2 * k - 1) * zpow)
            total += term
            if abs(term) < eps:
                break
            zpow *= zsq
        else:
            raise ConvergenceError(f"Stirling series for log Gamma({z}) did not converge", (total,))
        result = total - correction
    with mp.workprec(bits):
        return +result


def log_gamma(z, prec) -> mpf:
    """Natural log of Gamma(z) for real z > 0 (Stirling series after upward shift)."""
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        z = mpf(z)
    if z <= 0:
        raise DomainError(f"log_gamma needs z > 0, got {z}")
    if z == 1 or z == 2:
        return mpf(0)
    return _log_gamma_cached(z, prec.bits)


def _barnes_summand_derivative(q: int, k: mpf, z: mpf) -> mpf:
    """q-th derivative (q >= 2) in k of  k log(1 + z/k) - z + z**2 / (2k)."""
    sign = 1 if q % 2 == 0 else -1
    kz = k + z
    value = (
        math.factorial(q - 2) * (kz ** (1 - q) - k ** (1 - q))
        + z * math.factorial(q - 1) * kz ** (-q)
        + z * z / 2 * math.factorial(q) * k ** (-q - 1)
    )
    return sign * value


@lru_cache(maxsize=512)
def _barnes_product_cached(z: mpf, bits: int, terms: int | None) -> mpf:
    K = terms if terms is not None else max(int(4 * abs(z)) + 8, (bits + GUARD_BITS) // 4)
    guard = GUARD_BITS + 2 * max(1, int(math.log2(K + 1))) + int(math.log2(abs(float(z)) + 2)) + 8
    with mp.workprec(bits + guard):
        z = mpf(z)
        eps = mpf(2) ** (-bits - GUARD_BITS)
        head = (z / 2) * mpmath.log(2 * mpmath.pi) - (z + 1) * z / 2 - mpmath.euler * z * z / 2

        def summand(k):
            k = mpf(k)
            return k * mpmath.log1p(z / k) - z + z * z / (2 * k)

        partial = mpmath.fsum(summand(k) for k in range(1, K))

        # Euler-Maclaurin tail for sum_{k >= K} of the summand.
        Kf = mpf(K)
        antideriv = (Kf * Kf - z * z) / 2 * mpmath.log1p(z / Kf) - z * Kf / 2
        tail = -z * z / 4 - antideriv + summand(K) / 2
        first = mpmath.log1p(z / Kf) - z / (Kf + z) - z * z / (2 * Kf * Kf)
        tail -= mpmath.bernoulli(2) / 2 * first
        for j in range(2, 8 * K + 64):
            q = 2 * j - 1
            term = mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j) * _barnes_summand_derivative(q, Kf, z)
            tail -= term
            if abs(term) < eps:
                break
        else:
            raise ConvergenceError(
                f"Barnes product tail for z={z} did not converge with {K} explicit factors", (partial, tail)
            )
        result = head + partial + tail
    with mp.workprec(bits):
        return +result


def barnes_log_g_product(z, prec, terms: int | None = None) -> mpf:
    """log G(1+z) from the Weierstrass canonical product.

    The first ``terms - 1`` factors are summed explicitly (as logs); the
    remaining infinite tail is summed by Euler-Maclaurin, so the result
    is accurate to working precision rather than to O(1/terms).
    Euler's constant comes from :data:`mpmath.euler`.
    """
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        z = mpf(z)
    if z <= -1:
        raise DomainError(f"barnes_log_g_product supports z > -1 only, got {z}")
    if terms is not None and terms < 2:
        raise DomainError("terms must be >= 2")
    return _barnes_product_cached(z, prec.bits, terms)


def barnes_log_g_recurrence(z, prec) -> mpf:
    """log G(1+z) by descending G(1+z) = Gamma(z) G(z) to a base in [1, 2)."""
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        z = mpf(z)
        if z < 0:
            raise DomainError(f"barnes_log_g_recurrence needs z >= 0, got {z}")
        whole = int(mpmath.floor(z))
        frac = z - whole
        base = mpf(0) if frac == 0 else barnes_log_g_product(frac, prec)
        total = mpmath.fsum([base] + [log_gamma(z - k, prec) for k in range(whole)])
    with prec.workprec():
        return +total


def barnes_log_g_asymptotic(n, a=0, prec=Precision(128)) -> mpf:
    """log of the large-n form of G(1 + a + n).

    n**((n+a)**2/2 - 1/12) exp(-3n**2/4 - a n) (2 pi)**((n+a)/2)
        * G(1/2)**(2/3) pi**(1/6) 2**(-1/36)
    """
    prec = as_precision(prec)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    log_g_half = barnes_log_g_product(mpf(-0.5), prec)
    with prec.workprec(GUARD_BITS):
        n, a = mpf(n), mpf(a)
        value = (
            ((n + a) ** 2 / 2 - mpf(1) / 12) * mpmath.log(n)
            - mpf(3) / 4 * n * n
            - a * n
            + (n + a) / 2 * mpmath.log(2 * mpmath.pi)
            + mpf(2) / 3 * log_g_half
            + mpmath.log(mpmath.pi) / 6
            - mpmath.log(2) / 36
        )
    with prec.workprec():
        return +value


def _bessel_series(nu: mpf, x: mpf, bits: int) -> mpf:
    if x == 0:
        if nu == 0:
            return mpf(1)
        if nu > 0:
            return mpf(0)
        raise DomainError(f"J_nu(0) is singular for nu={nu}")
    guard = GUARD_BITS + int(float(x) * 1.4427) + 16
    with mp.workprec(bits + guard):
        half = x / 2
        q = -half * half
        term = mpmath.power(half, nu) * mpmath.rgamma(nu + 1)
        total = term
        eps = mpf(2) ** (-(bits + guard))
        k = 0
        while True:
            k += 1
            term *= q / (k * (k + nu))
            total += term
            if k > half and abs(term) <= eps * abs(total):
                break
            if k > 100000:
                raise ConvergenceError(f"Bessel series did not converge for nu={nu}, x={x}", (total,))
    with mp.workprec(bits):
        return +total


def bessel_j(nu, x, prec) -> mpf:
    """J_nu(x) for real order and x >= 0 by the ascending series.

    The series is summed with enough extra bits to absorb its cancellation,
    which grows like e**x, so it stays accurate past
    :func:`bessel_switch_point`.  Negative integer orders use
    J_{-m} = (-1)**m J_m.
    """
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        nu, x = mpf(nu), mpf(x)
    if x < 0:
        raise DomainError(f"bessel_j needs x >= 0, got {x}")
    if nu < 0 and nu == int(nu):
        m = int(-nu)
        value = _bessel_series(mpf(m), x, prec.bits)
        return value if m % 2 == 0 else -value
    return _bessel_series(nu, x, prec.bits)


def bessel_j_deriv(nu, x, prec) -> mpf:
    """J_nu'(x) = (J_{nu-1}(x) - J_{nu+1}(x)) / 2."""
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        nu, x = mpf(nu), mpf(x)
    if x < 0 or (x == 0 and nu < 1):
        raise DomainError(f"bessel_j_deriv needs x > 0 (or x = 0 with nu >= 1), got nu={nu}, x={x}")
    with prec.workprec(GUARD_BITS):
        value = (bessel_j(nu - 1, x, prec) - bessel_j(nu + 1, x, prec)) / 2
    with prec.workprec():
        return +value


@dataclass(frozen=True)
class LaguerreBasis:
    """Orthonormal polynomials for the weight x**nu e**-x on (0, inf).

    ``norm_constants[i]`` is the leading coefficient a_ii of P_i; its square
    is 1 / (Gamma(1+i+nu) Gamma(1+i)) and its sign is (-1)**i.
    """

    nu: float
    max_degree: int
    prec: Precision = Precision(128)
    norm_constants: tuple = field(init=False, repr=False)
    _recurrence: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.nu < -0.5:
            raise DomainError(f"Laguerre order must satisfy nu >= -1/2, got {self.nu}")
        if self.max_degree < 0:
            raise DomainError("max_degree must be >= 0")
        object.__setattr__(self, "prec", as_precision(self.prec))
        consts = []
        with self.prec.workprec(GUARD_BITS):
            nu = mpf(self.nu)
            for i in range(self.max_degree + 1):
                log_sq = -(log_gamma(1 + i + nu, self.prec) + log_gamma(1 + i, self.prec))
                a = mpmath.exp(log_sq / 2)
                consts.append(a if i % 2 == 0 else -a)
            p0 = mpmath.exp(-log_gamma(nu + 1, self.prec) / 2)
            coeffs = tuple(
                (2 * i + 1 + nu, mpmath.sqrt(i * (i + nu)), 1 / mpmath.sqrt((i + 1) * (i + 1 + nu)))
                for i in range(self.max_degree)
            )
        object.__setattr__(self, "norm_constants", tuple(consts))
        object.__setattr__(self, "_recurrence", (p0, coeffs))

    @property
    def outside_kernel_regime(self) -> bool:
        """True for -1/2 < nu < 1/2, where the kernel estimates assume |nu| >= 1/2."""
        return -0.5 < self.nu < 0.5

    def values(self, x, degree: int | None = None) -> list:
        """[P_0(x), ..., P_degree(x)] by the normalized three-term recurrence."""
        degree = self.max_degree if degree is None else degree
        if degree > self.max_degree:
            raise DomainError(f"degree {degree} exceeds basis max_degree {self.max_degree}")
        p0, coeffs = self._recurrence
        with self.prec.workprec(GUARD_BITS):
            x = mpf(x)
            p_prev, p = mpf(0), p0
            out = [p]
            for b, c, inv in coeffs[:degree]:
                p_prev, p = p, ((b - x) * p - c * p_prev) * inv
                out.append(p)
        return out


def laguerre_orthonormal(basis: LaguerreBasis, i: int, x) -> mpf:
    """P_i(x), orthonormal against x**nu e**-x."""
    if i < 0 or i > basis.max_degree:
        raise DomainError(f"degree {i} outside 0..{basis.max_degree}")
    value = basis.values(x, i)[i]
    with basis.prec.workprec():
        return +value


def laguerre_envelope(nu, x, prec) -> mpf:
    """x**(nu/2) e**(-x/2)."""
    prec = as_precision(prec)
    with prec.workprec(GUARD_BITS):
        x, nu = mpf(x), mpf(nu)
        if x < 0 or (x == 0 and nu < 0):
            raise DomainError(f"Laguerre function undefined at x={x} for nu={nu}")
        if x == 0:
            return mpf(1) if nu == 0 else mpf(0)
        return mpmath.power(x, nu / 2) * mpmath.exp(-x / 2)


def laguerre_function(basis: LaguerreBasis, i: int, x) -> mpf:
    """L_i^nu(x) = P_i(x) x**(nu/2) e**(-x/2); orthonormal in L2(0, inf)."""
    env = laguerre_envelope(basis.nu, x, basis.prec)
    with basis.prec.workprec(GUARD_BITS):
        value = laguerre_orthonormal(basis, i, x) * env
    with basis.prec.workprec():
        return +value


def laguerre_functions_f64(max_degree: int, nu: float, x) -> np.ndarray:
    """Double-precision Laguerre functions, shape (max_degree + 1, len(x)).

    Same recurrence and sign convention as :class:`LaguerreBasis`, for the
    vectorized Nystrom assembly.  Requires x > 0.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((max_degree + 1, x.size))
    env = np.exp(0.5 * nu * np.log(x) - 0.5 * x)
    p_prev = np.zeros_like(x)
    p = np.full_like(x, math.exp(-0.5 * gammaln(nu + 1)))
    out[0] = p * env
    for i in range(max_degree):
        p_next = ((2 * i + 1 + nu - x) * p - math.sqrt(i * (i + nu)) * p_prev) / math.sqrt((i + 1) * (i + 1 + nu))
        p_prev, p = p, p_next
        out[i + 1] = p * env
    return out
