"""Hankel moment matrices, their orthogonalized counterparts, and log-determinants.

For a weight u = w U with w = x**nu e**-x, and P_i orthonormal for w,

    det [int P_i P_j u]  =  A_n det [a_{i+j}],     A_n = prod a_ii**2,

and 1 / A_n = G(1+n) G(1+n+nu) / G(1+nu).  Everything here works in
log space at the caller's precision.

The orthogonalized matrix is O(1) and well conditioned, so the cross-path
checks evaluate it at no more than ORTHO_BITS; only the moment route needs
the large precision that Hankel conditioning demands.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mpf

from .bigreal import GUARD_BITS, Precision, as_precision, integrate_semi_infinite, required_precision
from .errors import NumericalError
from .specfun import LaguerreBasis, barnes_log_g_product, barnes_log_g_recurrence, log_gamma
from .weights import WeightSpec, Um1_eval, moments


ORTHO_BITS = 256


def ortho_precision(prec) -> Precision:
    """Working precision for the orthogonalized route inside cross-path checks."""
    prec = as_precision(prec)
    return prec if prec.bits <= ORTHO_BITS else Precision(ORTHO_BITS)


@dataclass(frozen=True)
class HankelMatrix:
    n: int
    entries: tuple  # row-major tuple of row tuples
    spec: WeightSpec
    prec: Precision

    def entry(self, i: int, j: int) -> mpf:
        return self.entries[i][j]


@dataclass(frozen=True)
class OrthoMatrix:
    n: int
    entries: tuple
    spec: WeightSpec
    prec: Precision

    def entry(self, i: int, j: int) -> mpf:
        return self.entries[i][j]


def hankel_matrix(spec: WeightSpec, n: int, prec) -> HankelMatrix:
    prec = as_precision(prec)
    a = moments(spec, 2 * n - 1, prec)
    rows = tuple(tuple(a[i + j] for j in range(n)) for i in range(n))
    return HankelMatrix(n, rows, spec, prec)


def cholesky_log_pivots(entries, prec) -> list:
    """log of the LDL^T pivots d_0..d_{n-1}; raises on a non-positive pivot.

    The partial sums of the result are the log-determinants of the leading
    principal submatrices.
    """
    prec = as_precision(prec)
    n = len(entries)
    with prec.workprec(GUARD_BITS):
        L = [[mpf(0)] * n for _ in range(n)]
        d = []
        for j in range(n):
            s = entries[j][j] - mpmath.fsum(L[j][k] ** 2 * d[k] for k in range(j))
            if s <= 0:
                raise NumericalError(f"non-positive pivot at index {j} ({mpmath.nstr(s, 5)})")
            d.append(s)
            L[j][j] = mpf(1)
            for i in range(j + 1, n):
                L[i][j] = (entries[i][j] - mpmath.fsum(L[i][k] * L[j][k] * d[k] for k in range(j))) / s
        logs = [mpmath.log(v) for v in d]
    with prec.workprec():
        return [+v for v in logs]


def _leading_log_dets(build, n, prec) -> list:
    """Cumulative log-dets, retrying once at doubled precision on pivot failure."""
    prec = as_precision(prec)
    try:
        pivots = cholesky_log_pivots(build(prec).entries, prec)
    except NumericalError:
        wider = prec.doubled()
        try:
            pivots = cholesky_log_pivots(build(wider).entries, wider)
        except NumericalError as exc:
            raise NumericalError(
                f"factorization failed at {prec.bits} and {wider.bits} bits; the weight is "
                f"not positive definite to this order ({exc})"
            ) from exc
    out, total = [], mpf(0)
    with prec.workprec(GUARD_BITS):
        for p in pivots:
            total += p
            out.append(+total)
    return out


def log_det_hankel_sequence(spec: WeightSpec, n: int, prec=None) -> list:
    """[log det H_1, ..., log det H_n] from one factorization."""
    prec = as_precision(prec) if prec is not None else required_precision(n, spec.nu)
    return _leading_log_dets(lambda p: hankel_matrix(spec, n, p), n, prec)


def log_det_hankel(spec: WeightSpec, n: int, prec=None) -> mpf:
    """log det (a_{i+j})_{i,j<n} by symmetric factorization.

    Defaults to :func:`required_precision` when ``prec`` is omitted.
    """
    return log_det_hankel_sequence(spec, n, prec)[-1]


def log_An_inv(nu, n: int, prec) -> mpf:
    """log(1 / A_n) = sum_{i<n} [log Gamma(1+i+nu) + log Gamma(1+i)].

    Cross-checked against log G(1+n) + log G(1+n+nu) - log G(1+nu).
    """
    prec = as_precision(prec)
    if n < 1:
        raise ValueError("n must be >= 1")
    with prec.workprec(GUARD_BITS):
        nu = mpf(nu)
        direct = mpmath.fsum(log_gamma(1 + i + nu, prec) + log_gamma(1 + i, prec) for i in range(n))
        via_barnes = (
            barnes_log_g_recurrence(n, prec)
            + barnes_log_g_recurrence(n + nu, prec)
            - (barnes_log_g_product(nu, prec) if nu < 1 else barnes_log_g_recurrence(nu, prec))
        )
        scale = max(abs(direct), mpf(1))
        if abs(direct - via_barnes) > prec.eps(64) * scale:
            raise NumericalError(
                f"log A_n^-1 routes disagree: gamma sum {mpmath.nstr(direct, 20)} "
                f"vs Barnes {mpmath.nstr(via_barnes, 20)}"
            )
    with prec.workprec():
        return +direct


def ortho_matrix(spec: WeightSpec, n: int, prec) -> OrthoMatrix:
    """(int P_i P_j u)_{i,j<n} as I + (int P_i P_j w (U - 1)).

    Only the perturbation is integrated numerically; the identity part is
    exact by orthonormality.
    """
    prec = as_precision(prec)
    if spec.is_unit:
        rows = tuple(tuple(mpf(1) if i == j else mpf(0) for j in range(n)) for i in range(n))
        return OrthoMatrix(n, rows, spec, prec)
    basis = LaguerreBasis(spec.nu, max(n - 1, 0), prec)
    nu = mpf(spec.nu)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]

    def integrand(x):
        if x == 0:
            return [mpf(0)] * len(pairs)
        p = basis.values(x, n - 1)
        wx = mpmath.power(x, nu) * mpmath.exp(-x) * Um1_eval(spec, x)
        q = [wx * v for v in p]
        return [q[i] * p[j] for i, j in pairs]

    # U - 1 = O(e**-rx) and w adds e**-x.
    values = integrate_semi_infinite(integrand, 1 + spec.decay_rate, prec, endpoint_exponent=spec.nu)
    M = [[mpf(0)] * n for _ in range(n)]
    with prec.workprec():
        for (i, j), v in zip(pairs, values):
            M[i][j] = M[j][i] = v + (1 if i == j else 0)
    return OrthoMatrix(n, tuple(tuple(r) for r in M), spec, prec)


def log_det_ortho_sequence(spec: WeightSpec, n: int, prec) -> list:
    prec = as_precision(prec)
    return _leading_log_dets(lambda p: ortho_matrix(spec, n, p), n, prec)


def log_det_ortho(spec: WeightSpec, n: int, prec) -> mpf:
    """log det of the orthogonalized matrix; O(1) in size, no Hankel conditioning."""
    return log_det_ortho_sequence(spec, n, prec)[-1]


def lemma1_residuals(spec: WeightSpec, n: int, prec=None) -> list:
    """|log det ortho - (log det H - log A^-1)| for orders 1..n."""
    prec = as_precision(prec) if prec is not None else required_precision(n, spec.nu)
    hank = log_det_hankel_sequence(spec, n, prec)
    orth = log_det_ortho_sequence(spec, n, ortho_precision(prec))
    with prec.workprec(GUARD_BITS):
        nu = mpf(spec.nu)
        out, an_inv = [], mpf(0)
        for k in range(n):
            an_inv += log_gamma(1 + k + nu, prec) + log_gamma(1 + k, prec)
            out.append(abs(orth[k] - (hank[k] - an_inv)))
    with prec.workprec():
        return [+v for v in out]


def lemma1_residual(spec: WeightSpec, n: int, prec=None) -> mpf:
    """Cross-path consistency of the orthogonalization identity at order n."""
    prec = as_precision(prec) if prec is not None else required_precision(n, spec.nu)
    hank = log_det_hankel(spec, n, prec)
    orth = log_det_ortho(spec, n, ortho_precision(prec))
    an_inv = log_An_inv(spec.nu, n, prec)
    with prec.workprec(GUARD_BITS):
        value = abs(orth - (hank - an_inv))
    with prec.workprec():
        return +value
