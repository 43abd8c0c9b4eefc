"""Single-agent best response to an expected attack count r.

An agent expecting ``r`` attacks minimizes ``r * L * p(a) + a`` over the
investment interval. Power and exponential curves have closed forms;
tabulated curves solve the first-order condition with brentq. A
golden-section search over the cost, safe because strict convexity of p
makes it unimodal, serves as the independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import AssumptionViolation, ModelError
from .model import InfectionCurve, ThreatModel

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2

FD_REL_STEP = 1e-6


def golden_section_minimize(f, a: float, b: float, tol: float = 1e-10) -> float:
    """Minimizer of a unimodal ``f`` on [a, b], to absolute tolerance ``tol``."""
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return 0.5 * (a + b)
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    for _ in range(n):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= INV_PHI
            c = a + INV_PHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= INV_PHI
            d = a + INV_PHI * h
            yd = f(d)
    return 0.5 * (a + b)


POWER_FORMS = ("exact", "omit_gamma")


def _power_gain(curve: InfectionCurve, power_form: str) -> float:
    if power_form not in POWER_FORMS:
        raise ModelError(f"power_form must be one of {POWER_FORMS}, got {power_form!r}")
    return curve.params[1] if power_form == "exact" else 1.0


def saturation_thresholds(threat: ThreatModel, curve: InfectionCurve,
                          power_form: str = "exact") -> tuple[float, float]:
    """Expected attack counts (r_min, r_max) at which I_min / I_max stop binding.

    From the first-order condition r * L * p'(a) + 1 = 0 evaluated at the
    interval ends. For the power family that gives
    (eps + I)**(gamma + 1) / (gamma * L * eps**gamma); ``power_form="omit_gamma"``
    drops the factor gamma from the denominator (see :class:`BestResponseCurve`).
    """
    L, lo, hi = threat.loss, threat.i_min, threat.i_max
    if curve.family == "power":
        eps, gamma = curve.params
        k = _power_gain(curve, power_form)
        return (
            (eps + lo) ** (gamma + 1) / (k * L * eps**gamma),
            (eps + hi) ** (gamma + 1) / (k * L * eps**gamma),
        )
    if curve.family == "exponential":
        xi = curve.params[0]
        with np.errstate(over="ignore"):
            return float(np.exp(lo * xi) / (L * xi)), float(np.exp(hi * xi) / (L * xi))
    if curve.family == "constant":
        raise AssumptionViolation("infection curve is constant; no best-response band")
    curve.validate(lo, hi)
    slope_lo = float(curve.derivative(lo))
    slope_hi = float(curve.derivative(hi))
    if slope_lo >= 0:
        raise AssumptionViolation("p'(I_min) = 0: infection curve is flat on the interval")
    r_max = -1.0 / (L * slope_hi) if slope_hi < 0 else math.inf
    return -1.0 / (L * slope_lo), r_max


@dataclass(frozen=True)
class BestResponseCurve:
    """Best response I_opt(r) and infection probability p*(r) for one threat/curve pair.

    For the power family, ``power_form`` selects the closed form:

    * ``"exact"`` (default): (gamma * r * L * eps**gamma)**(1/(gamma+1)) - eps,
      the minimizer of r * L * p(a) + a.
    * ``"omit_gamma"``: (r * L * eps**gamma)**(1/(gamma+1)) - eps. This
      minimizes r * (L / gamma) * p(a) + a instead, so it agrees with the
      exact form only at gamma = 1. It is kept because the figure values
      used as acceptance anchors were computed with it.
    """

    threat: ThreatModel
    curve: InfectionCurve
    r_min: float
    r_max: float
    power_form: str = "exact"

    @classmethod
    def build(cls, threat: ThreatModel, curve: InfectionCurve,
              power_form: str = "exact") -> "BestResponseCurve":
        if power_form not in POWER_FORMS:
            raise ModelError(f"power_form must be one of {POWER_FORMS}, got {power_form!r}")
        if curve.family == "constant":
            # I_opt is I_min for every r: sup and inf both run off to infinity.
            return cls(threat, curve, math.inf, math.inf, power_form)
        r_min, r_max = saturation_thresholds(threat, curve, power_form)
        return cls(threat, curve, r_min, r_max, power_form)

    def cost(self, r: float, a):
        return r * self.threat.loss * self.curve(a) + a

    def optimal_investment(self, r):
        """Unique minimizer of r * L * p(a) + a; vectorized over ``r``."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("expected attack count must be nonnegative")
        t = self.threat
        fam = self.curve.family
        if fam == "constant":
            a = np.full_like(r, t.i_min)
        elif fam == "power":
            eps, gamma = self.curve.params
            k = _power_gain(self.curve, self.power_form)
            with np.errstate(divide="ignore"):
                a = (k * r * t.loss * eps**gamma) ** (1.0 / (gamma + 1.0)) - eps
        elif fam == "exponential":
            xi = self.curve.params[0]
            with np.errstate(divide="ignore"):
                a = np.log(r * t.loss * xi) / xi
        else:
            a = np.vectorize(self._foc_investment, otypes=[float])(r)
        a = np.clip(a, t.i_min, t.i_max)
        # ties at the thresholds go to the boundary
        a = np.where(r <= self.r_min, t.i_min, a)
        a = np.where(r >= self.r_max, t.i_max, a)
        return a if a.ndim else float(a)

    def _foc_investment(self, r: float) -> float:
        # p' is continuous and nondecreasing, so the FOC has one root inside
        # (r_min, r_max); brentq resolves it to machine precision, which the
        # finite-difference derivatives of p* rely on.
        if r <= self.r_min:
            return self.threat.i_min
        if r >= self.r_max:
            return self.threat.i_max
        foc = lambda a: r * self.threat.loss * float(self.curve.derivative(a)) + 1.0
        return brentq(foc, self.threat.i_min, self.threat.i_max, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def numeric_investment(self, r: float, tol: float = 1e-10) -> float:
        """Golden-section minimizer of the cost, ignoring any closed form.

        The cost is evaluated in long double where the platform has it. In
        float64 the cost is so flat near the minimizer that rounding alone
        misplaces it by about 1e-9 * (a + eps).
        """
        r_ext = np.longdouble(r)
        loss = np.longdouble(self.threat.loss)
        cost = lambda a: r_ext * loss * self.curve(np.longdouble(a)) + np.longdouble(a)
        return golden_section_minimize(cost, self.threat.i_min, self.threat.i_max, tol)

    def optimal_infection_probability(self, r):
        return self.curve(self.optimal_investment(r))

    def pstar_derivative(self, r):
        """Central finite difference of p* with relative step 1e-6."""
        r = np.asarray(r, dtype=float)
        h = FD_REL_STEP * np.maximum(r, 1e-12)
        lo = np.maximum(r - h, 0.0)
        hi = r + h
        return (
            self.optimal_infection_probability(hi) - self.optimal_infection_probability(lo)
        ) / (hi - lo)


@dataclass(frozen=True)
class Assumption4Report:
    passed: bool
    r_grid: np.ndarray
    values: np.ndarray
    violation: tuple[float, float] | None = None

    def __bool__(self):
        return self.passed


def assumption4_report(pstar, r_min: float, r_max: float, grid_size: int = 200) -> Assumption4Report:
    """Check that r * dp*/dr is strictly increasing on a log grid over [r_min, r_max].

    ``pstar`` is any vectorized callable; derivatives are central finite
    differences with relative step 1e-6. Grid ends are pulled in by a
    relative 1e-5 so the stencil never straddles a saturation kink.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    if not (0 < r_min < r_max < math.inf):
        raise AssumptionViolation(f"need 0 < r_min < r_max < inf, got ({r_min}, {r_max})")
    r = np.geomspace(r_min * (1 + 1e-5), r_max * (1 - 1e-5), grid_size)
    h = FD_REL_STEP * r
    slope = (np.asarray(pstar(r + h)) - np.asarray(pstar(r - h))) / (2 * h)
    q = r * slope
    bad = np.nonzero(np.diff(q) <= 0)[0]
    if bad.size:
        i = int(bad[0])
        return Assumption4Report(False, r, q, (float(r[i]), float(r[i + 1])))
    return Assumption4Report(True, r, q)


def check_assumption4(brc: BestResponseCurve, grid_size: int = 200) -> Assumption4Report:
    return assumption4_report(brc.optimal_infection_probability, brc.r_min, brc.r_max, grid_size)
