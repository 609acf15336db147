"""Weights u(x) = e**-x x**nu U(x) on (0, inf) and their moment / transform data.

Built-in perturbation families (all with U - 1 = O(e**-x)):

* ``unit``         U = 1
* ``rational_exp`` U = 1 + alpha e**-x      (alpha > -1)
* ``gauss_exp``    U = exp(theta e**-x)

``custom`` takes a Python callable for U together with a decay rate r
certifying |U(x) - 1| <= C e**(-r x).  Such specs cannot be serialized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath
import numpy as np
from mpmath import mp, mpf

from .bigreal import GUARD_BITS, Precision, as_precision, cosine_transform, integrate_semi_infinite
from .errors import ConvergenceError, DomainError, ValidationError

FAMILIES = ("unit", "rational_exp", "gauss_exp", "custom")
_PARAM_NAMES = {"unit": (), "rational_exp": ("alpha",), "gauss_exp": ("theta",)}


@dataclass(frozen=True)
class WeightSpec:
    nu: float
    family: str = "unit"
    params: dict = field(default_factory=dict)
    custom: Optional[Callable] = field(default=None, compare=False, repr=False)
    decay_rate: float = 1.0

    def __post_init__(self):
        if not isinstance(self.nu, (int, float)) or self.nu < -0.5:
            raise ValidationError(f"nu must be a real number >= -1/2, got {self.nu!r}")
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        params = dict(self.params)
        if self.family == "custom":
            if self.custom is None:
                raise ValidationError("custom family needs a callable for U")
            if self.decay_rate <= 0:
                raise ValidationError("custom family needs a positive decay_rate certificate")
            self._validate_custom()
        else:
            expected = _PARAM_NAMES[self.family]
            if set(params) != set(expected):
                raise ValidationError(f"family {self.family!r} takes params {expected}, got {sorted(params)}")
            for k in expected:
                params[k] = float(params[k])
            if self.family == "rational_exp" and params["alpha"] <= -1:
                raise ValidationError("rational_exp requires alpha > -1 so that U stays positive")
            object.__setattr__(self, "decay_rate", 1.0)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "nu", float(self.nu))

    def _validate_custom(self):
        xs = [mpf(k) / 4 for k in range(0, 161)]
        with mp.workprec(64):
            vals = [mpf(self.custom(x)) for x in xs]
        if min(vals) <= 0:
            raise ValidationError("custom U must be positive on [0, inf)")
        # U - 1 scaled by the certified exponential must stay bounded.
        scaled = [abs(v - 1) * mpmath.exp(self.decay_rate * x) for v, x in zip(vals, xs)]
        if scaled[-1] > 100 * max(scaled[:20] + [mpf(1)]):
            raise ValidationError("custom U - 1 does not decay at the certified rate")

    @property
    def alpha(self) -> float:
        return self.params["alpha"]

    @property
    def theta(self) -> float:
        return self.params["theta"]

    @property
    def is_unit(self) -> bool:
        return self.family == "unit"

    def to_dict(self) -> dict:
        if self.family == "custom":
            raise ValidationError("custom weights are not serializable")
        return {"nu": self.nu, "family": self.family, "params": dict(self.params)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "WeightSpec":
        if not isinstance(data, dict):
            raise ValidationError("weight spec must be a JSON object")
        unknown = set(data) - {"nu", "family", "params"}
        if unknown:
            raise ValidationError(f"unknown weight spec fields: {sorted(unknown)}")
        if "nu" not in data or "family" not in data:
            raise ValidationError("weight spec needs 'nu' and 'family'")
        if data["family"] == "custom":
            raise ValidationError("custom weights cannot be loaded from JSON")
        return cls(nu=data["nu"], family=data["family"], params=data.get("params", {}))

    @classmethod
    def from_json(cls, text: str) -> "WeightSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid weight JSON: {exc}") from exc
        return cls.from_dict(data)


def _check_x(spec: WeightSpec, x):
    if x < 0 or (x == 0 and spec.nu < 0):
        raise DomainError(f"weight undefined at x={x} for nu={spec.nu}")


def U_eval(spec: WeightSpec, x) -> mpf:
    if x < 0:
        raise DomainError(f"U is defined on x >= 0, got {x}")
    x = mpf(x)
    if spec.family == "unit":
        return mpf(1)
    if spec.family == "rational_exp":
        return 1 + spec.alpha * mpmath.exp(-x)
    if spec.family == "gauss_exp":
        return mpmath.exp(spec.theta * mpmath.exp(-x))
    return mpf(spec.custom(x))


def Um1_eval(spec: WeightSpec, x) -> mpf:
    """U(x) - 1 without cancellation for the built-in families."""
    x = mpf(x)
    if spec.family == "unit":
        return mpf(0)
    if spec.family == "rational_exp":
        return spec.alpha * mpmath.exp(-x)
    if spec.family == "gauss_exp":
        return mpmath.expm1(spec.theta * mpmath.exp(-x))
    return U_eval(spec, x) - 1


def logU_eval(spec: WeightSpec, x) -> mpf:
    if x < 0:
        raise DomainError(f"U is defined on x >= 0, got {x}")
    x = mpf(x)
    if spec.family == "unit":
        return mpf(0)
    if spec.family == "rational_exp":
        return mpmath.log1p(spec.alpha * mpmath.exp(-x))
    if spec.family == "gauss_exp":
        return spec.theta * mpmath.exp(-x)
    return mpmath.log(U_eval(spec, x))


def u_eval(spec: WeightSpec, x) -> mpf:
    """u(x) = x**nu e**-x U(x)."""
    _check_x(spec, x)
    x = mpf(x)
    if x == 0:
        return U_eval(spec, x) if spec.nu == 0 else mpf(0)
    return mpmath.power(x, spec.nu) * mpmath.exp(-x) * U_eval(spec, x)


def log_U0(spec: WeightSpec) -> mpf:
    """log U(0), analytic for the built-in families."""
    if spec.family == "unit":
        return mpf(0)
    if spec.family == "rational_exp":
        return mpmath.log1p(spec.alpha)
    if spec.family == "gauss_exp":
        return mpf(spec.theta)
    return mpmath.log(U_eval(spec, 0))


def Um1_f64(spec: WeightSpec, x: np.ndarray) -> np.ndarray:
    """Vectorized U - 1 in double precision."""
    x = np.asarray(x, dtype=float)
    if spec.family == "unit":
        return np.zeros_like(x)
    if spec.family == "rational_exp":
        return spec.alpha * np.exp(-x)
    if spec.family == "gauss_exp":
        return np.expm1(spec.theta * np.exp(-x))
    return np.array([float(spec.custom(mpf(float(v)))) - 1.0 for v in x])


def moments(spec: WeightSpec, count: int, prec, method: str = "auto") -> list:
    """[a_0, ..., a_{count-1}] with a_k the k-th moment of u.

    ``method="quadrature"`` forces the numerical route for every family.
    """
    prec = as_precision(prec)
    if count < 1:
        return []
    if method not in ("auto", "quadrature"):
        raise ValidationError(f"unknown moment method {method!r}")
    if method == "quadrature" or spec.family == "custom":
        return [_moment_quadrature(spec, k, prec) for k in range(count)]
    with prec.workprec(GUARD_BITS + 2 * count.bit_length()):
        nu = mpf(spec.nu)
        gammas = [mpmath.gamma(nu + 1)]
        for k in range(1, count):
            gammas.append(gammas[-1] * (k + nu))
        if spec.family == "unit":
            out = gammas
        elif spec.family == "rational_exp":
            alpha = mpf(spec.alpha)
            out = [g * (1 + alpha / mpf(2) ** (k + nu + 1)) for k, g in enumerate(gammas)]
        else:
            out = _gauss_exp_moments(mpf(spec.theta), nu, gammas, prec)
    with prec.workprec():
        return [+a for a in out]


def _gauss_exp_moments(theta, nu, gammas, prec):
    # a_k = Gamma(k+nu+1) sum_j theta**j / j! (j+1)**-(k+nu+1)
    count = len(gammas)
    sums = [mpf(0)] * count
    eps = prec.eps(-GUARD_BITS)
    coef = mpf(1)
    for j in range(0, 1000000):
        if j > 0:
            coef *= theta / j
        base = mpf(j + 1)
        inv = 1 / base
        power = mpmath.power(base, -(nu + 1))
        biggest = mpf(0)
        for k in range(count):
            term = coef * power
            sums[k] += term
            biggest = max(biggest, abs(term) / max(abs(sums[k]), eps))
            power *= inv
        if j > abs(theta) and biggest < eps:
            return [g * s for g, s in zip(gammas, sums)]
    raise ConvergenceError("gauss_exp moment series did not converge", sums)


def _moment_quadrature(spec: WeightSpec, k: int, prec: Precision) -> mpf:
    def f(x):
        if x == 0:
            return u_eval(spec, x) if k == 0 else mpf(0)
        return mpmath.power(x, k) * u_eval(spec, x)

    return integrate_semi_infinite(f, 1, prec, endpoint_exponent=spec.nu)


def moment(spec: WeightSpec, k: int, prec, method: str = "auto") -> mpf:
    """a_k = integral of x**k u(x) over (0, inf)."""
    if k < 0:
        raise DomainError(f"moment index must be >= 0, got {k}")
    prec = as_precision(prec)
    if method == "quadrature" or spec.family == "custom":
        return _moment_quadrature(spec, k, prec)
    return moments(spec, k + 1, prec, method)[k]


def s_transform(spec: WeightSpec, x, prec, method: str = "auto") -> mpf:
    """S(x) = integral of cos(x y) log U(y**2) over y in (0, inf)."""
    prec = as_precision(prec)
    if x < 0:
        raise DomainError(f"S(x) needs x >= 0, got {x}")
    if spec.family == "unit":
        return mpf(0)
    if spec.family == "gauss_exp" and method == "auto":
        with prec.workprec(GUARD_BITS):
            x = mpf(x)
            value = spec.theta * mpmath.sqrt(mpmath.pi) / 2 * mpmath.exp(-x * x / 4)
        with prec.workprec():
            return +value
    return cosine_transform(lambda y: logU_eval(spec, y * y), x, prec)


def s_decay_rate(spec: WeightSpec) -> float:
    """A rate r with S(x)**2 = O(e**(-r x)), for truncating integrals of S**2.

    S decays like exp(-c x) with c the distance from the real axis to the
    nearest complex singularity of y -> log U(y**2).
    """
    if spec.family == "rational_exp":
        a = spec.alpha
        if a == 0:
            return 1.0
        # zeros of 1 + a e**(-y**2): y**2 = log|a| + i pi (2k+1) (a > 0) or + 2 pi i k (a < 0)
        shifts = [math.pi * (2 * k + 1) for k in range(-2, 2)] if a > 0 else [2 * math.pi * k for k in range(-2, 3)]
        best = math.inf
        for s in shifts:
            w = complex(math.log(abs(a)), s) ** 0.5
            if abs(w.imag) > 1e-12:
                best = min(best, abs(w.imag))
        return 2 * best
    if spec.family == "custom":
        return spec.decay_rate
    return 1.0
