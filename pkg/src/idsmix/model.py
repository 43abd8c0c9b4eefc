"""Static game data: populations, threats, infection curves, exposure
response functions and mixing vectors.

Degrees are always indexed 1..d_max with dense vectors; position ``i`` of
every per-degree array refers to degree ``i + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import AssumptionViolation, InadmissibleMixingError, ModelError

ADMISSIBLE_ATOL = 1e-12
RENORMALIZE_BAND = 1e-6


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class PopulationProfile:
    """Degree distribution of the dependence graph.

    Build it with :meth:`from_sizes` or :func:`make_power_law_population`;
    sizes are normalized to total mass one, so ``fractions`` equals
    ``sizes``.
    """

    sizes: np.ndarray
    fractions: np.ndarray = field(init=False)
    edge_weights: np.ndarray = field(init=False)
    avg_degree: float = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.sizes, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ModelError("population sizes must be a non-empty vector")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ModelError("population sizes must be finite and nonnegative")
        total = s.sum()
        if total <= 0:
            raise ModelError("population has zero total mass")
        f = s / total
        degrees = np.arange(1, s.size + 1, dtype=float)
        avg = float(np.dot(degrees, f))
        w = degrees * f / avg
        object.__setattr__(self, "sizes", _frozen(f))
        object.__setattr__(self, "fractions", _frozen(f))
        object.__setattr__(self, "edge_weights", _frozen(w))
        object.__setattr__(self, "avg_degree", avg)

    @classmethod
    def from_sizes(cls, sizes) -> "PopulationProfile":
        return cls(np.asarray(sizes, dtype=float))

    @property
    def d_max(self) -> int:
        return int(self.sizes.size)

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(1, self.d_max + 1, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, PopulationProfile):
            return NotImplemented
        return np.array_equal(self.fractions, other.fractions)

    def __hash__(self):
        return hash(self.fractions.tobytes())


def make_power_law_population(d_max: int, exponent: float) -> PopulationProfile:
    """Truncated power law, f_d proportional to d**(-exponent) on 1..d_max."""
    if int(d_max) != d_max or d_max < 1:
        raise ModelError(f"d_max must be a positive integer, got {d_max!r}")
    if not exponent > 0:
        raise ModelError(f"power-law exponent must be positive, got {exponent!r}")
    d = np.arange(1, int(d_max) + 1, dtype=float)
    return PopulationProfile(d ** (-float(exponent)))


def population_from_edge_weights(w) -> PopulationProfile:
    """Population whose edge-weighted degree fractions equal ``w``."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or np.any(w < 0) or not w.sum() > 0:
        raise ModelError("edge weights must be a nonnegative, nonzero vector")
    return PopulationProfile(w / np.arange(1, w.size + 1))


@dataclass(frozen=True)
class ThreatModel:
    """Attack environment and the investment interval.

    ``beta_ia`` never enters the equilibrium computation directly (the
    exposure response is assumed to absorb it); it is used by the
    first-hop Monte Carlo check.
    """

    tau_a: float
    beta_ia: float
    loss: float
    i_min: float
    i_max: float

    def __post_init__(self):
        if not 0 < self.tau_a <= 1:
            raise ModelError(f"tau_a must lie in (0, 1], got {self.tau_a}")
        if not 0 < self.beta_ia <= 1:
            raise ModelError(f"beta_ia must lie in (0, 1], got {self.beta_ia}")
        if not self.loss > 0:
            raise ModelError(f"loss must be positive, got {self.loss}")
        if not (0 <= self.i_min < self.i_max < np.inf):
            raise ModelError(
                f"need 0 <= i_min < i_max < inf, got [{self.i_min}, {self.i_max}]"
            )


@dataclass(frozen=True, eq=False)
class InfectionCurve:
    """Infection probability p(a) as a function of security investment.

    Families:

    * ``power``: p(a) = eps**gamma / (a + eps)**gamma
    * ``exponential``: p(a) = exp(-xi * a)
    * ``tabulated``: monotone piecewise-cubic (PCHIP) through knots,
      validated for monotonicity and convexity on 1000 sample points
    * ``constant``: p(a) = p0. Degenerate; violates strict convexity and
      exists for closed-form test fixtures only.
    """

    family: str
    params: tuple
    _interp: object = field(default=None, repr=False, compare=False)

    @classmethod
    def power(cls, eps: float, gamma: float) -> "InfectionCurve":
        if not (eps > 0 and gamma > 0):
            raise ModelError("power curve needs eps > 0 and gamma > 0")
        return cls("power", (float(eps), float(gamma)))

    @classmethod
    def exponential(cls, xi: float) -> "InfectionCurve":
        if not xi > 0:
            raise ModelError("exponential curve needs xi > 0")
        return cls("exponential", (float(xi),))

    @classmethod
    def constant(cls, p0: float) -> "InfectionCurve":
        if not 0 <= p0 <= 1:
            raise ModelError("constant infection probability must lie in [0, 1]")
        return cls("constant", (float(p0),))

    @classmethod
    def tabulated(cls, knots_a, knots_p, validate: bool = True) -> "InfectionCurve":
        a = np.asarray(knots_a, dtype=float)
        p = np.asarray(knots_p, dtype=float)
        if a.ndim != 1 or a.shape != p.shape or a.size < 2:
            raise ModelError("tabulated curve needs matching knot vectors of length >= 2")
        if np.any(np.diff(a) <= 0):
            raise ModelError("knot abscissae must be strictly increasing")
        if np.any((p < 0) | (p > 1)):
            raise ModelError("knot probabilities must lie in [0, 1]")
        curve = cls("tabulated", (tuple(a), tuple(p)), PchipInterpolator(a, p))
        if validate:
            curve.validate()
        return curve

    @property
    def domain(self) -> tuple[float, float]:
        if self.family == "tabulated":
            a = self.params[0]
            return a[0], a[-1]
        return 0.0, np.inf

    def __call__(self, a):
        # long double input stays long double (used by the golden-section oracle)
        a = np.asarray(a)
        if a.dtype != np.longdouble:
            a = a.astype(float)
        if self.family == "power":
            eps, gamma = self.params
            return (eps / (a + eps)) ** gamma
        if self.family == "exponential":
            return np.exp(-self.params[0] * a)
        if self.family == "constant":
            return np.full_like(a, self.params[0])
        return self._interp(a)

    def derivative(self, a):
        a = np.asarray(a, dtype=float)
        if self.family == "power":
            eps, gamma = self.params
            return -gamma * eps**gamma / (a + eps) ** (gamma + 1)
        if self.family == "exponential":
            xi = self.params[0]
            return -xi * np.exp(-xi * a)
        if self.family == "constant":
            return np.zeros_like(a)
        return self._interp.derivative()(a)

    def validate(self, lo: float | None = None, hi: float | None = None, n: int = 1000):
        """Check continuity/decrease/strict convexity on a sample grid.

        Raises :class:`AssumptionViolation` on failure. Parametric families
        satisfy the assumption analytically and are only range-checked.
        """
        if self.family == "constant":
            raise AssumptionViolation("constant infection curve is not strictly convex")
        dlo, dhi = self.domain
        lo = dlo if lo is None else lo
        hi = dhi if hi is None else hi
        if lo < dlo or hi > dhi:
            raise AssumptionViolation(
                f"curve defined on [{dlo}, {dhi}], requested [{lo}, {hi}]"
            )
        if self.family != "tabulated":
            return
        t = np.linspace(lo, hi, n)
        v = self(t)
        scale = max(np.abs(v).max(), 1e-300)
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise AssumptionViolation("interpolated probabilities leave [0, 1]")
        d1 = np.diff(v)
        d2 = np.diff(v, 2)
        if np.any(d1 > 1e-14 * scale):
            i = int(np.argmax(d1 > 1e-14 * scale))
            raise AssumptionViolation(f"curve increases near a = {t[i]:.6g}")
        if np.any(d2 < -1e-14 * scale):
            i = int(np.argmax(d2 < -1e-14 * scale))
            raise AssumptionViolation(f"curve is not convex near a = {t[i + 1]:.6g}")
        if not v[0] > v[-1]:
            raise AssumptionViolation("curve is constant")

    def __eq__(self, other):
        if not isinstance(other, InfectionCurve):
            return NotImplemented
        return (self.family, self.params) == (other.family, other.params)

    def __hash__(self):
        return hash((self.family, self.params))


@dataclass(frozen=True)
class ExposureResponse:
    """Map from per-agent first-hop vulnerability to ARE: theta(z) = coef * z**eta."""

    family: str
    coef: float
    eta: float = 1.0

    def __post_init__(self):
        if self.family not in ("linear", "power"):
            raise ModelError(f"unknown exposure response family {self.family!r}")
        if not (self.coef > 0 and self.eta > 0):
            raise ModelError("exposure response needs positive coefficient and exponent")
        if self.family == "linear" and self.eta != 1.0:
            raise ModelError("linear exposure response has eta = 1")

    @classmethod
    def linear(cls, k: float) -> "ExposureResponse":
        return cls("linear", float(k), 1.0)

    @classmethod
    def power(cls, k_prime: float, eta: float) -> "ExposureResponse":
        return cls("power", float(k_prime), float(eta))

    def __call__(self, z):
        return self.coef * np.asarray(z, dtype=float) ** self.eta

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        if self.eta == 1.0:
            return np.full_like(z, self.coef)
        return self.coef * self.eta * z ** (self.eta - 1.0)


@dataclass(frozen=True, eq=False)
class MixingVector:
    """Per-degree risk multipliers g_d, so that e_d = g_d * e_avg."""

    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ModelError("mixing vector must be a non-empty vector")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise ModelError("mixing vector entries must be finite and positive")
        object.__setattr__(self, "g", _frozen(g))

    @classmethod
    def neutral(cls, pop: PopulationProfile) -> "MixingVector":
        return cls(np.ones(pop.d_max))

    @classmethod
    def for_population(cls, pop: PopulationProfile, g) -> "MixingVector":
        """Build an admissible vector, renormalizing small defects.

        Within 1e-6 of admissibility the vector is rescaled; beyond that it
        is rejected.
        """
        mv = cls(g)
        defect = mv.admissibility_defect(pop)
        if abs(defect) <= ADMISSIBLE_ATOL:
            return mv
        if abs(defect) <= RENORMALIZE_BAND:
            return cls(mv.g / (1.0 + defect))
        raise InadmissibleMixingError(
            f"sum_d w_d g_d - 1 = {defect:.3e} exceeds renormalization band"
        )

    def admissibility_defect(self, pop: PopulationProfile) -> float:
        if self.g.size != pop.d_max:
            raise ModelError(
                f"mixing vector has length {self.g.size}, population d_max is {pop.d_max}"
            )
        return float(np.dot(pop.edge_weights, self.g) - 1.0)

    def is_admissible(self, pop: PopulationProfile, atol: float = ADMISSIBLE_ATOL) -> bool:
        return abs(self.admissibility_defect(pop)) <= atol

    def require_admissible(self, pop: PopulationProfile, atol: float = ADMISSIBLE_ATOL):
        defect = self.admissibility_defect(pop)
        if abs(defect) > atol:
            raise InadmissibleMixingError(f"sum_d w_d g_d - 1 = {defect:.3e}")

    def __eq__(self, other):
        if not isinstance(other, MixingVector):
            return NotImplemented
        return np.array_equal(self.g, other.g)

    def __hash__(self):
        return hash(self.g.tobytes())


def make_rho_mixing(pop: PopulationProfile, rho: float) -> MixingVector:
    """g_d proportional to d**rho, scaled so that sum_d w_d g_d = 1."""
    if rho == 0:
        return MixingVector.neutral(pop)
    raw = pop.degrees ** float(rho)
    return MixingVector(raw / np.dot(pop.edge_weights, raw))


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """Pure strategy profile: one investment per degree."""

    investments: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.investments, dtype=float)
        if a.ndim != 1 or not np.all(np.isfinite(a)):
            raise ModelError("investments must be a finite vector")
        object.__setattr__(self, "investments", _frozen(a))

    def check_bounds(self, threat: ThreatModel):
        a = self.investments
        if np.any(a < threat.i_min) or np.any(a > threat.i_max):
            raise ModelError(
                f"investments must lie in [{threat.i_min}, {threat.i_max}]"
            )
        return self


def cost_of_action(
    threat: ThreatModel,
    curve: InfectionCurve,
    d: int,
    exposure_per_neighbor: float,
    a: float,
) -> float:
    """Expected cost (tau_A + d * e_d) * L * p(a) + a of one agent."""
    if not threat.i_min <= a <= threat.i_max:
        raise ModelError(f"investment {a} outside [{threat.i_min}, {threat.i_max}]")
    if exposure_per_neighbor < 0:
        raise ModelError("risk exposure must be nonnegative")
    r = threat.tau_a + d * exposure_per_neighbor
    return float(r * threat.loss * curve(a) + a)
