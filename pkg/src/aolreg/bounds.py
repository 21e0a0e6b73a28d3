"""Closed-form rate and bound calculators (natural logarithms throughout)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy.special import gamma as _gamma
from scipy.special import gammaincc

LOC_RAD_CONST = 12 * 42 ** 2
LOC_FINITE_CONST = 144.0


@dataclass(frozen=True)
class EntropyModel:
    """Growth of the empirical entropy ``H(rho) = log N_2(F, rho)``.

    ``kind="poly"``: ``H = A rho^-p``; ``kind="vc"``: ``N <= max(1, (A/rho)^v)``;
    ``kind="finite"``: ``H = log M``.
    """

    kind: str
    A: float = 1.0
    p: float | None = None
    v: float | None = None
    M: int | None = None

    def __post_init__(self):
        if self.kind == "poly":
            if not (self.A > 0 and self.p is not None and self.p > 0):
                raise ValueError("poly entropy needs A > 0 and p > 0")
        elif self.kind == "vc":
            if not (self.A > 0 and self.v is not None and self.v > 0):
                raise ValueError("vc entropy needs A > 0 and v > 0")
        elif self.kind == "finite":
            if self.M is None or self.M < 2:
                raise ValueError("a finite class needs M >= 2")
        else:
            raise ValueError(f"unknown entropy model {self.kind!r}")

    @classmethod
    def poly(cls, p: float, A: float = 1.0) -> "EntropyModel":
        return cls("poly", A=A, p=p)

    @classmethod
    def vc(cls, v: float, A: float = 1.0) -> "EntropyModel":
        return cls("vc", A=A, v=v)

    @classmethod
    def finite(cls, M: float) -> "EntropyModel":
        return cls("finite", M=M)

    def entropy(self, rho: float) -> float:
        if self.kind == "finite":
            return math.log(self.M)
        if self.kind == "poly":
            return self.A * rho ** -self.p
        return self.v * math.log(self.A / rho) if rho < self.A else 0.0


def _log_tail(b: float) -> float:
    """``int_0^b sqrt(log(1/t)) dt`` for ``0 <= b <= 1``."""
    if b <= 0.0:
        return 0.0
    if b >= 1.0:
        return _gamma(1.5)
    return float(gammaincc(1.5, math.log(1.0 / b)) * _gamma(1.5))


def entropy_integral(model: EntropyModel, lo: float, hi: float) -> float:
    """``int_lo^hi sqrt(H(rho)) d rho``."""
    if hi <= lo:
        return 0.0
    if model.kind == "finite":
        return (hi - lo) * math.sqrt(math.log(model.M))
    if model.kind == "poly":
        p, sa = model.p, math.sqrt(model.A)
        if p == 2.0:
            if lo <= 0.0:
                raise ValueError("integral diverges at 0")
            return sa * math.log(hi / lo)
        e = 1.0 - p / 2.0
        if lo <= 0.0 and e <= 0.0:
            raise ValueError("integral diverges at 0")
        return sa * (hi ** e - (lo ** e if lo > 0 else 0.0)) / e
    A = model.A
    top = min(hi, A)
    if top <= lo:
        return 0.0
    return A * math.sqrt(model.v) * (_log_tail(top / A) - _log_tail(max(lo, 0.0) / A))


def dudley_bound(model: EntropyModel, n: int, alpha: float) -> float:
    """``4 alpha + (12/sqrt(n)) int_alpha^1 sqrt(H)``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return 4.0 * alpha + 12.0 / math.sqrt(n) * entropy_integral(model, alpha, 1.0)


def dudley_alpha(model: EntropyModel, n: int) -> float:
    """Minimizer of :func:`dudley_bound` over ``alpha`` in [0, 1].

    The bracket is convex in alpha; its stationary point solves
    ``H(alpha) = n / 9``.  For polynomial entropy this is
    ``(9 A / n)^(1/p)``, i.e. of order ``n^(-1/p)``.
    """
    if model.kind == "finite":
        return 0.0 if dudley_bound(model, n, 0.0) <= dudley_bound(model, n, 1.0) else 1.0
    if model.kind == "poly":
        return min((9.0 * model.A / n) ** (1.0 / model.p), 1.0)
    return min(model.A * math.exp(-n / (9.0 * model.v)), 1.0)


def loc_radius(model, n: int, C: float | None = None, c_a: float = 1.0) -> float:
    """A localization radius ``r*`` for the class of squared differences.

    ``model`` is a Rademacher-average estimate (a number) or an
    :class:`EntropyModel`.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if isinstance(model, (int, float)):
        if model < 0:
            raise ValueError("a Rademacher average is non-negative")
        c = LOC_RAD_CONST if C is None else C
        return c * math.log(64 * n) ** 3 * model ** 2
    if model.kind == "finite":
        c = LOC_FINITE_CONST if C is None else C
        return c * math.log(model.M) / n
    if model.kind == "vc":
        if n < c_a * model.v:
            raise ValueError(f"n = {n} is below c_a * v = {c_a * model.v}")
        c = 1.0 if C is None else C
        return c * model.v / n * math.log(math.e * n / model.v)
    raise ValueError("polynomial entropy has no closed-form radius; pass a Rademacher estimate")


@dataclass(frozen=True)
class BoundInputs:
    n: int
    epsilon: float
    delta: float
    C: float = 1.0
    r_star: float | None = None

    def __post_init__(self):
        if self.n < 5:
            raise ValueError("n must be at least 5")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.epsilon < 0 or self.C <= 0:
            raise ValueError("epsilon must be >= 0 and C > 0")

    @property
    def beta(self) -> float:
        return (math.log(1.0 / self.delta) + math.log(math.log(self.n))) / self.n

    def radius(self, model: EntropyModel) -> float:
        return self.r_star if self.r_star is not None else loc_radius(model, self.n)

    def gamma(self, model: EntropyModel) -> float:
        return math.sqrt(self.epsilon ** 2 + self.radius(model) + self.beta)


def xi_bound(model: EntropyModel, inputs: BoundInputs) -> float:
    """``gamma sqrt(r*) + (1/sqrt(n)) int_0^{C gamma} sqrt(H)``.

    For polynomial entropy with ``p >= 2`` the integral starts at ``1/n``.
    """
    r = inputs.radius(model)
    g = inputs.gamma(model)
    lo = 0.0
    if model.kind == "poly" and model.p >= 2.0:
        lo = 1.0 / inputs.n
    return g * math.sqrt(r) + entropy_integral(model, lo, inputs.C * g) / math.sqrt(inputs.n)


def psi_nms(n: int, M: int, s: int) -> float:
    """Optimal rate of s-sparse convex aggregation of M functions."""
    if not 1 <= s <= M or n < 1:
        raise ValueError("need 1 <= s <= M and n >= 1")
    sparse = s / n * math.log(math.e * M / s)
    convex = math.sqrt(math.log(1.0 + M / math.sqrt(n)) / n)
    return min(sparse, convex, 1.0)


def tilde_psi(m: int, n: int) -> float:
    if m < 1 or n < 1:
        raise ValueError("m and n must be at least 1")
    return min(m / n, math.sqrt(math.log(1.0 + m / math.sqrt(n)) / n))


def exact_power(n: float, exponent: float) -> float:
    """``n ** exponent``, computed exactly when ``n`` is a perfect power.

    Plain ``pow`` returns e.g. ``4096 ** (1/3) = 15.999999999999998``; that
    matters wherever the result feeds a ceiling or is compared for equality.
    """
    frac = Fraction(exponent).limit_denominator(1000)
    if abs(float(frac) - exponent) < 1e-15 and float(n).is_integer() and n > 0:
        root = round(n ** (1.0 / frac.denominator))
        for r in (root - 1, root, root + 1):
            if r > 0 and r ** frac.denominator == int(n):
                num = frac.numerator
                return float(r ** num) if num >= 0 else 1.0 / r ** -num
    return n ** exponent


def _neg_power(n: float, exponent: float) -> float:
    return exact_power(n, -exponent)


def barpsi_breakpoints(n: int, p: float) -> tuple[float, float]:
    if not p > 2:
        raise ValueError("p must exceed 2")
    return _neg_power(n, 2.0 / (2.0 + p)), _neg_power(n, 1.0 / p)


def barpsi(n: int, p: float, delta2: float) -> float:
    """Regret rate under approximation error ``delta2``: ``delta2`` clamped between the two breakpoints."""
    if not 0.0 <= delta2 <= 1.0:
        raise ValueError("delta2 must lie in [0, 1]")
    lo, hi = barpsi_breakpoints(n, p)
    return min(max(delta2, lo), hi)


def strict_ceil(x: float) -> int:
    """Smallest integer strictly greater than ``x``."""
    return math.floor(x) + 1


def rate_exponent(setting: str, p: float | None = None) -> float:
    """Exponent of ``n`` in the predicted rate for a setting."""
    if setting == "finite-aggregate":
        return -1.0
    if setting == "finite-erm":
        return -0.5
    if setting == "vc":
        return -1.0
    if p is None or not p > 0:
        raise ValueError(f"setting {setting!r} needs p > 0")
    if setting == "regret-poly":
        return -2.0 / (2.0 + p) if p <= 2 else -1.0 / p
    if setting == "risk-poly":
        return -2.0 / (2.0 + p)
    if setting == "skeleton-poly":
        return -1.0 / (p + 1.0)
    if setting == "regret-lower":
        if p < 2:
            raise ValueError("the regret lower bound needs p >= 2")
        return -1.0 / (p - 1.0)
    raise ValueError(f"unknown setting {setting!r}")


def table1_targets(regime: str, p: float | None = None) -> dict[str, float]:
    """Predicted regret exponents for aggregation of leaders, skeleton and global ERM."""
    if regime == "finite":
        return {"aol": -1.0, "skeleton": -1.0, "erm": -0.5}
    if regime == "parametric":
        return {"aol": -1.0, "skeleton": -0.5, "erm": -0.5}
    if regime == "poly":
        if p is None or not p > 0:
            raise ValueError("poly regime needs p > 0")
        if p < 2:
            return {"aol": -2.0 / (2.0 + p), "skeleton": max(-1.0 / (p + 1.0), -0.5), "erm": -0.5}
        return {"aol": -1.0 / p, "skeleton": -1.0 / (p + 1.0), "erm": -1.0 / p}
    raise ValueError(f"unknown regime {regime!r}")
