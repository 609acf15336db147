"""Laguerre and Bessel kernels on L2(0, inf) and their Nystrom Fredholm determinants.

Two numeric tiers:

* pointwise kernels (``laguerre_kernel``, ``bessel_kernel``,
  ``cd_integral_identity_residual``) evaluate in mpmath at a given
  precision and serve as references;
* the Nystrom routines assemble whole kernel matrices in float64 with
  numpy/scipy.  Passing ``prec`` to :func:`nystrom_log_det` switches it to
  the mpmath tier, which is only practical on small grids.

The perturbation U - 1 is never square-rooted unless it is positive
everywhere; otherwise the unsymmetrized product I + K diag(w (U - 1)) is
factorized with a general LU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath import mpf
from scipy.special import jv

from .bigreal import GUARD_BITS, Precision, as_precision, gauss_legendre
from .errors import NumericalError, ValidationError
from .specfun import LaguerreBasis, bessel_j, bessel_j_deriv, laguerre_envelope, laguerre_functions_f64
from .weights import WeightSpec, Um1_eval, Um1_f64

KINDS = ("laguerre_cd", "bessel_compressed")
STRATEGIES = {
    "laguerre_cd": ("sum_form", "cd_form", "integral_form"),
    "bessel_compressed": ("cd_form", "integral_form"),
}
DEFAULT_XMAX = 40.0


def h_switch(x) -> float:
    """Below this |x - y| the difference-quotient forms give way to exact alternatives."""
    return 1e-3 * (1 + abs(x))


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    n: int
    spec: WeightSpec
    eval_strategy: str = "cd_form"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kernel kind {self.kind!r}")
        if self.eval_strategy not in STRATEGIES[self.kind]:
            raise ValidationError(f"{self.kind} does not support strategy {self.eval_strategy!r}")
        if self.n < 1:
            raise ValidationError("kernel order n must be >= 1")


@dataclass(frozen=True, eq=False)
class NystromGrid:
    """Gauss-Legendre rule in s on (0, sqrt(x_max)), mapped to x = s**2.

    The map makes x**nu-type endpoint behaviour and the Bessel kernel's
    sqrt(x) oscillation phase uniform in s.
    """

    x_max: float
    m: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, x_max: float = DEFAULT_XMAX, m: int = 64) -> "NystromGrid":
        if x_max <= 0 or m < 2:
            raise ValidationError("grid needs x_max > 0 and m >= 2")
        s, w = np.polynomial.legendre.leggauss(m)
        root = math.sqrt(x_max)
        s = (s + 1) * root / 2
        w = w * root / 2
        return cls(float(x_max), int(m), s * s, 2 * s * w)

    @classmethod
    def for_order(cls, n: int, x_max: float = DEFAULT_XMAX, m: int | None = None) -> "NystromGrid":
        """Default resolution m = max(64, ceil(8 sqrt(n) sqrt(x_max)))."""
        if m is None:
            m = max(64, math.ceil(8 * math.sqrt(n) * math.sqrt(x_max)))
        return cls.build(x_max, m)

    def resolves(self, n: int) -> bool:
        # about 2 pi nodes per oscillation of J_nu(2 sqrt(n x)) in the s variable
        return self.m >= 2 * math.sqrt(n * self.x_max)

    def mp_rule(self, prec):
        """The same grid in mpmath at ``prec``."""
        prec = as_precision(prec)
        rule = gauss_legendre(self.m, prec)
        with prec.workprec(GUARD_BITS):
            root = mpmath.sqrt(mpf(self.x_max))
            s = [(x + 1) * root / 2 for x in rule.nodes]
            w = [v * root / 2 for v in rule.weights]
            return [t * t for t in s], [2 * t * v for t, v in zip(s, w)]


# --- pointwise (mpmath) kernels -------------------------------------------------


def _laguerre_pair(basis: LaguerreBasis, n: int, x):
    """(L_{n-1}(x), L_n(x)) plus the full list L_0..L_n."""
    p = basis.values(x, n)
    env = laguerre_envelope(basis.nu, x, basis.prec)
    funcs = [v * env for v in p]
    return funcs[n - 1], funcs[n], funcs


def _cd_quotient(basis, n, x, y):
    lx0, lx1, _ = _laguerre_pair(basis, n, x)
    ly0, ly1, _ = _laguerre_pair(basis, n, y)
    return (lx0 * ly1 - ly0 * lx1) / (x - y)


def _cd_integral(basis, n, x, y, nodes: int, prec: Precision):
    # t = s**2 keeps the t**nu endpoint behaviour analytic
    rule = gauss_legendre(nodes, prec)
    total = mpf(0)
    for s, w in zip(rule.nodes, rule.weights):
        s = (s + 1) / 2
        t = s * s
        ax0, ax1, _ = _laguerre_pair(basis, n, t * x)
        ay0, ay1, _ = _laguerre_pair(basis, n, t * y)
        total += w / 2 * 2 * s * (ax0 * ay1 + ay0 * ax1)
    return total / 2


def laguerre_kernel(ks: KernelSpec, x, y, prec=Precision(128)) -> mpf:
    """sum_{i<n} L_i(x) L_i(y), without the U - 1 factor."""
    prec = as_precision(prec)
    n, nu = ks.n, ks.spec.nu
    basis = LaguerreBasis(nu, n, prec)
    with prec.workprec(GUARD_BITS):
        x, y = mpf(x), mpf(y)
        near = abs(x - y) < h_switch(x)
        if ks.eval_strategy == "sum_form" or (ks.eval_strategy == "cd_form" and near):
            _, _, fx = _laguerre_pair(basis, n, x)
            _, _, fy = _laguerre_pair(basis, n, y)
            value = mpmath.fsum(a * b for a, b in zip(fx[:n], fy[:n]))
        elif ks.eval_strategy == "cd_form":
            value = mpmath.sqrt(n * (n + mpf(nu))) * _cd_quotient(basis, n, x, y)
        else:
            value = mpmath.sqrt(n * (n + mpf(nu))) * _cd_integral(basis, n, x, y, 64, prec)
    with prec.workprec():
        return +value


def cd_integral_identity_residual(n: int, nu, x, y, nodes: int = 64, prec=Precision(128)) -> mpf:
    """|difference quotient - (1/2) int_0^1 [L_{n-1}(tx) L_n(ty) + L_{n-1}(ty) L_n(tx)] dt|."""
    prec = as_precision(prec)
    if x == y:
        raise ValidationError("the identity residual needs x != y")
    basis = LaguerreBasis(nu, n, prec)
    with prec.workprec(GUARD_BITS):
        x, y = mpf(x), mpf(y)
        value = abs(_cd_quotient(basis, n, x, y) - _cd_integral(basis, n, x, y, nodes, prec))
    with prec.workprec():
        return +value


def _bessel_integral_mp(n, nu, x, y, prec):
    z = 2 * math.sqrt(n * float(max(x, y)))
    rule = gauss_legendre(32 + 4 * math.ceil(z), prec)
    total = mpf(0)
    a, b = 2 * mpmath.sqrt(n * x), 2 * mpmath.sqrt(n * y)
    for s, w in zip(rule.nodes, rule.weights):
        s = (s + 1) / 2
        total += w * s * bessel_j(nu, a * s, prec) * bessel_j(nu, b * s, prec)
    # n int_0^1 dt = n int_0^1 2 s ds, and the half-width of (0, 1) is 1/2
    return n * total


def bessel_kernel(ks: KernelSpec, x, y, prec=Precision(128)) -> mpf:
    """n int_0^1 J_nu(2 sqrt(n x t)) J_nu(2 sqrt(n y t)) dt, without V factors.

    Off the diagonal (``cd_form``) this is the difference quotient
    [J(2 sqrt(nx)) sqrt(ny) J'(2 sqrt(ny)) - J(2 sqrt(ny)) sqrt(nx) J'(2 sqrt(nx))] / (x - y).
    """
    prec = as_precision(prec)
    n, nu = ks.n, ks.spec.nu
    with prec.workprec(GUARD_BITS):
        x, y = mpf(x), mpf(y)
        if ks.eval_strategy == "integral_form" or abs(x - y) < h_switch(x):
            value = _bessel_integral_mp(n, nu, x, y, prec)
        else:
            ax, ay = 2 * mpmath.sqrt(n * x), 2 * mpmath.sqrt(n * y)
            num = bessel_j(nu, ax, prec) * mpmath.sqrt(n * y) * bessel_j_deriv(nu, ay, prec) - bessel_j(
                nu, ay, prec
            ) * mpmath.sqrt(n * x) * bessel_j_deriv(nu, ax, prec)
            value = num / (x - y)
    with prec.workprec():
        return +value


# --- float64 matrix assembly -------------------------------------------------------


def _t_rule(count: int):
    """Gauss-Legendre in s on (0, 1) for integrals in t = s**2; weights include dt/ds."""
    s, w = np.polynomial.legendre.leggauss(count)
    s = (s + 1) / 2
    return s * s, w * s  # (w / 2) * 2 s


def _laguerre_matrix(n: int, nu: float, x: np.ndarray, strategy: str) -> np.ndarray:
    L = laguerre_functions_f64(n, nu, x)
    if strategy == "sum_form":
        return L[:n].T @ L[:n]
    scale = math.sqrt(n * (n + nu))
    if strategy == "integral_form":
        t, w = _t_rule(64 + 4 * n)
        A = np.empty((t.size, x.size))
        B = np.empty((t.size, x.size))
        for k, tk in enumerate(t):
            Lt = laguerre_functions_f64(n, nu, tk * x)
            A[k], B[k] = Lt[n - 1], Lt[n]
        WB = w[:, None] * B
        return scale * 0.5 * (A.T @ WB + WB.T @ A)
    X, Y = np.meshgrid(x, x, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        K = scale * (np.outer(L[n - 1], L[n]) - np.outer(L[n], L[n - 1])) / (X - Y)
    near = np.abs(X - Y) < 1e-3 * (1 + X)
    if near.any():
        K[near] = (L[:n].T @ L[:n])[near]
    return K


def _bessel_integral_f64(n: int, nu: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    z = 2 * math.sqrt(n * float(max(xs.max(), ys.max())))
    t, w = _t_rule(64 + 4 * math.ceil(z))
    s = np.sqrt(t)
    Cx = jv(nu, 2 * np.sqrt(n * xs)[None, :] * s[:, None])
    Cy = jv(nu, 2 * np.sqrt(n * ys)[None, :] * s[:, None])
    return n * np.einsum("k,ki,ki->i", w, Cx, Cy)


def _bessel_matrix(n: int, nu: float, x: np.ndarray, strategy: str) -> np.ndarray:
    if strategy == "integral_form":
        z = 2 * math.sqrt(n * float(x.max()))
        t, w = _t_rule(64 + 4 * math.ceil(z))
        C = jv(nu, 2 * np.sqrt(n * x)[None, :] * np.sqrt(t)[:, None])
        return n * (C.T @ (w[:, None] * C))
    z = 2 * np.sqrt(n * x)
    J = jv(nu, z)
    Jp = 0.5 * (jv(nu - 1, z) - jv(nu + 1, z))
    r = np.sqrt(n * x)
    X, Y = np.meshgrid(x, x, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (np.outer(J, r * Jp) - np.outer(r * Jp, J)) / (X - Y)
    near = np.abs(X - Y) < 1e-3 * (1 + X)
    rows, cols = np.nonzero(near)
    if rows.size:
        K[rows, cols] = _bessel_integral_f64(n, nu, x[rows], x[cols])
    return K


def kernel_matrix(ks: KernelSpec, nodes: np.ndarray) -> np.ndarray:
    """Kernel values at all node pairs (float64), without the U - 1 factor."""
    nodes = np.asarray(nodes, dtype=float)
    if ks.kind == "laguerre_cd":
        return _laguerre_matrix(ks.n, ks.spec.nu, nodes, ks.eval_strategy)
    return _bessel_matrix(ks.n, ks.spec.nu, nodes, ks.eval_strategy)


def discretized_projection(n: int, nu: float, grid: NystromGrid) -> np.ndarray:
    """W**(1/2) K W**(1/2) for the bare Laguerre kernel; a rank-n projection when resolved."""
    sq = np.sqrt(grid.weights)
    K = kernel_matrix(KernelSpec("laguerre_cd", n, WeightSpec(nu), "sum_form"), grid.nodes)
    return sq[:, None] * K * sq[None, :]


def _check_grid(ks: KernelSpec, grid: NystromGrid):
    if not grid.resolves(ks.n):
        raise ValidationError(
            f"grid with m={grid.m} nodes on (0, {grid.x_max}) under-resolves order n={ks.n}; "
            f"need m >= {math.ceil(2 * math.sqrt(ks.n * grid.x_max))}"
        )


def nystrom_log_det(ks: KernelSpec, grid: NystromGrid | None = None, prec=None, symmetric: bool | None = None):
    """log det(I + K M_{U-1}) on the grid.

    ``symmetric=None`` picks the square-root splitting when U > 1 on every
    node and the unsymmetrized LU form otherwise; either can be forced.
    Returns a float in the float64 tier and an mpf when ``prec`` is given.
    """
    grid = grid if grid is not None else NystromGrid.for_order(ks.n)
    _check_grid(ks, grid)
    if ks.spec.is_unit:
        return mpf(0) if prec is not None else 0.0
    if prec is not None:
        return _nystrom_log_det_mp(ks, grid, as_precision(prec))
    d = Um1_f64(ks.spec, grid.nodes)
    K = kernel_matrix(ks, grid.nodes)
    if symmetric is None:
        symmetric = bool(np.all(d > 0))
    if symmetric:
        if np.any(d < 0):
            raise ValidationError("symmetric splitting needs U - 1 >= 0 on the grid")
        v = np.sqrt(grid.weights * d)
        M = np.eye(grid.m) + v[:, None] * K * v[None, :]
    else:
        M = np.eye(grid.m) + K * (grid.weights * d)[None, :]
    sign, logdet = np.linalg.slogdet(M)
    if sign <= 0 or not np.isfinite(logdet):
        raise NumericalError(f"I + K is singular or has non-positive determinant on the grid (sign={sign})")
    return float(logdet)


def _nystrom_log_det_mp(ks: KernelSpec, grid: NystromGrid, prec: Precision) -> mpf:
    nodes, weights = grid.mp_rule(prec)
    kernel = laguerre_kernel if ks.kind == "laguerre_cd" else bessel_kernel
    with prec.workprec(GUARD_BITS):
        d = [Um1_eval(ks.spec, x) for x in nodes]
        m = len(nodes)
        M = mpmath.matrix(m, m)
        for i in range(m):
            for j in range(i, m):
                k = kernel(ks, nodes[i], nodes[j], prec)
                M[i, j] = k * weights[j] * d[j]
                M[j, i] = k * weights[i] * d[i]
            M[i, i] += 1
        det = mpmath.det(M)
        if det <= 0:
            raise NumericalError("I + K has non-positive determinant on the grid")
        value = mpmath.log(det)
    with prec.workprec():
        return +value


def hs_distance(n: int, spec: WeightSpec, grid: NystromGrid | None = None) -> float:
    """Hilbert-Schmidt norm of |U-1|**(1/2) (Laguerre - Bessel) |U-1|**(1/2), by quadrature."""
    grid = grid if grid is not None else NystromGrid.for_order(n)
    _check_grid(KernelSpec("laguerre_cd", n, spec), grid)
    if spec.is_unit:
        return 0.0
    A = kernel_matrix(KernelSpec("laguerre_cd", n, spec), grid.nodes)
    B = kernel_matrix(KernelSpec("bessel_compressed", n, spec), grid.nodes)
    q = grid.weights * np.abs(Um1_f64(spec, grid.nodes))
    return float(math.sqrt(np.einsum("i,ij,j->", q, (A - B) ** 2, q)))
