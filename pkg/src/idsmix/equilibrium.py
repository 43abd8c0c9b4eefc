"""Pure-strategy Nash equilibrium of the population game.

At an equilibrium every population plays its best response to the risk it
sees, so the whole profile is pinned down by a single number, the average
risk exposure e. The equilibrium ARE is the root of

    vartheta(g, e) = theta(d_avg * sum_d w_d p*(tau_A + d g_d e)) - e

on [0, theta(d_avg * p(I_min))]. vartheta(0) >= 0 and vartheta is
nonpositive at the upper end because p* never exceeds p(I_min).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .best_response import FD_REL_STEP, BestResponseCurve
from .errors import (
    BoundaryEquilibriumError,
    BracketError,
    InvariantViolation,
    ModelError,
    SolverError,
)
from .model import (
    ExposureResponse,
    InfectionCurve,
    MixingVector,
    PopulationProfile,
    StrategyProfile,
    ThreatModel,
)

BISECT_RTOL = 1e-12
NEWTON_STEPS = 5
SCAN_POINTS = 64
INTERIOR_ATOL = 1e-9


@dataclass(frozen=True)
class GameInstance:
    pop: PopulationProfile
    threat: ThreatModel
    curve: InfectionCurve
    theta: ExposureResponse
    mixing: MixingVector
    power_form: str = "exact"
    brc: BestResponseCurve = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mixing.g.size != self.pop.d_max:
            raise ModelError("mixing vector and population disagree on d_max")
        self.mixing.require_admissible(self.pop)
        brc = BestResponseCurve.build(self.threat, self.curve, self.power_form)
        object.__setattr__(self, "brc", brc)

    @classmethod
    def build(cls, pop, threat, curve, theta, mixing=None,
              power_form: str = "exact") -> "GameInstance":
        if mixing is None:
            mixing = MixingVector.neutral(pop)
        elif not isinstance(mixing, MixingVector):
            mixing = MixingVector.for_population(pop, mixing)
        return cls(pop, threat, curve, theta, mixing, power_form)

    def with_mixing(self, mixing) -> "GameInstance":
        if not isinstance(mixing, MixingVector):
            mixing = MixingVector.for_population(self.pop, mixing)
        return dataclasses.replace(self, mixing=mixing)

    def with_theta(self, theta: ExposureResponse) -> "GameInstance":
        return dataclasses.replace(self, theta=theta)

    @property
    def exposure_ceiling(self) -> float:
        """Largest ARE any profile can produce: theta(d_avg * p(I_min))."""
        p_top = float(self.curve(self.threat.i_min))
        return float(self.theta(self.pop.avg_degree * p_top))


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    e_avg_star: float
    e_d: np.ndarray
    investments: StrategyProfile
    p_star_d: np.ndarray
    residual: float
    interior: np.ndarray
    sign_changes: int
    iterations: int

    @property
    def interior_all(self) -> bool:
        return bool(np.all(self.interior))

    def avg_investment(self, pop: PopulationProfile) -> float:
        return float(np.dot(pop.fractions, self.investments.investments))


def _attack_counts(game: GameInstance, g: np.ndarray, e: float) -> np.ndarray:
    return game.threat.tau_a + game.pop.degrees * g * e


def _vulnerability(game: GameInstance, g: np.ndarray, e: float) -> float:
    """sum_d w_d p*(tau_A + d g_d e): chance a random edge end is vulnerable."""
    p = game.brc.optimal_infection_probability(_attack_counts(game, g, e))
    return float(np.dot(game.pop.edge_weights, p))


def _mixing_array(game: GameInstance, g) -> np.ndarray:
    if g is None:
        return game.mixing.g
    g = np.asarray(g.g if isinstance(g, MixingVector) else g, dtype=float)
    if g.shape != (game.pop.d_max,) or np.any(g <= 0):
        raise ModelError("mixing override must be a positive vector of length d_max")
    return g


def vartheta(game: GameInstance, e: float, g=None) -> float:
    """Fixed-point residual at exposure ``e``.

    ``g`` overrides the game's mixing vector and need not be admissible;
    the residual is defined for any positive g, which is what the
    finite-difference sensitivity oracle needs.
    """
    if e < 0:
        raise ValueError("exposure must be nonnegative")
    g = _mixing_array(game, g)
    x = _vulnerability(game, g, e)
    return float(game.theta(game.pop.avg_degree * x)) - e


def _sign_changes(fn, hi: float) -> int:
    pts = np.concatenate([[0.0], np.geomspace(hi * 1e-12, hi, SCAN_POINTS - 1)])
    positive = np.array([fn(e) > 0 for e in pts])
    return int(np.count_nonzero(positive[1:] != positive[:-1]))


def _root(fn, hi: float, rtol: float, rng, max_iter: int) -> tuple[float, int]:
    lo = 0.0
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo < 0 or f_hi > 0:
        raise BracketError(
            f"vartheta(0) = {f_lo:.6g}, vartheta({hi:.6g}) = {f_hi:.6g}: no sign change"
        )
    if f_lo == 0:
        return 0.0, 0
    if f_hi == 0:
        return hi, 0
    if rng is not None:
        # randomized bracket subdivision; the unique root survives any split
        for m in np.sort(rng.uniform(lo, hi, size=3)):
            if not lo < m < hi:
                continue
            f_m = fn(m)
            if f_m == 0:
                return float(m), 0
            if f_m > 0:
                lo = m
            else:
                hi = m
                break
    try:
        e, info = bisect(fn, lo, hi, xtol=1e-300, rtol=rtol, maxiter=max_iter, full_output=True)
    except RuntimeError as exc:
        raise SolverError(str(exc)) from exc
    iterations = info.iterations
    for _ in range(NEWTON_STEPS):
        f_e = fn(e)
        if f_e == 0:
            break
        h = FD_REL_STEP * max(e, 1e-12)
        slope = (fn(e + h) - fn(max(e - h, 0.0))) / (e + h - max(e - h, 0.0))
        if not slope < 0:
            break
        cand = e - f_e / slope
        if cand < 0 or abs(cand - e) > 1e-9 * max(e, 1.0):
            break
        if abs(fn(cand)) >= abs(f_e):
            break
        e = cand
        iterations += 1
    return float(e), iterations


def equilibrium_are(game: GameInstance, g=None, *, rtol: float = BISECT_RTOL, rng=None,
                    max_iter: int = 500) -> float:
    """Root e*(g) of vartheta(g, .); ``g`` may be any positive vector."""
    g = _mixing_array(game, g)
    fn = lambda e: vartheta(game, e, g)
    return _root(fn, game.exposure_ceiling, rtol, rng, max_iter)[0]


def solve_equilibrium(game: GameInstance, *, rtol: float = BISECT_RTOL, rng=None,
                      max_iter: int = 500, scan: bool = True) -> EquilibriumResult:
    """Unique pure-strategy NE of ``game``.

    Args:
        rtol: relative bracket width at which bisection stops.
        rng: optional ``numpy.random.Generator``; randomizes the initial
            bracket subdivision (used for restart-robustness checks).
        scan: count sign changes of vartheta on 64 log-spaced exposures and
            raise :class:`InvariantViolation` if there is more than one.
    """
    g = game.mixing.g
    fn = lambda e: vartheta(game, e, g)
    hi = game.exposure_ceiling
    e_star, iterations = _root(fn, hi, rtol, rng, max_iter)
    changes = _sign_changes(fn, hi) if scan else -1
    if scan and changes > 1:
        raise InvariantViolation(f"vartheta changes sign {changes} times on [0, {hi:.6g}]")

    e_d = g * e_star
    a = np.asarray(game.brc.optimal_investment(_attack_counts(game, g, e_star)), dtype=float)
    t = game.threat
    interior = (a > t.i_min + INTERIOR_ATOL) & (a < t.i_max - INTERIOR_ATOL)
    return EquilibriumResult(
        e_avg_star=e_star,
        e_d=e_d,
        investments=StrategyProfile(a),
        p_star_d=np.asarray(game.curve(a), dtype=float),
        residual=abs(fn(e_star)),
        interior=interior,
        sign_changes=changes,
        iterations=iterations,
    )


def are_of_profile(game: GameInstance, profile: StrategyProfile) -> float:
    """ARE induced by an arbitrary pure profile, via both equivalent sums."""
    profile.check_bounds(game.threat)
    a = profile.investments
    if a.size != game.pop.d_max:
        raise ModelError("profile length differs from d_max")
    p = np.asarray(game.curve(a), dtype=float)
    pop = game.pop
    direct = float(game.theta(np.dot(pop.degrees * pop.fractions, p)))
    edge = float(game.theta(pop.avg_degree * np.dot(pop.edge_weights, p)))
    if abs(direct - edge) > 1e-12 * max(1.0, abs(direct)):
        raise InvariantViolation(f"ARE forms disagree: {direct!r} vs {edge!r}")
    return edge


def _partials(game: GameInstance, result: EquilibriumResult):
    if not result.interior_all:
        raise BoundaryEquilibriumError(
            "equilibrium has investments at a bound; the implicit-function "
            "sensitivity is not valid there"
        )
    pop, g, e = game.pop, game.mixing.g, result.e_avg_star
    r = _attack_counts(game, g, e)
    x = float(np.dot(pop.edge_weights, game.brc.optimal_infection_probability(r)))
    phi_dot = pop.avg_degree * float(game.theta.derivative(pop.avg_degree * x))
    p_dot = game.brc.pstar_derivative(r)
    d_e = phi_dot * float(np.sum(pop.edge_weights * p_dot * pop.degrees * g)) - 1.0
    d_g = phi_dot * pop.edge_weights * p_dot * pop.degrees * e
    if not d_e < 0:
        raise InvariantViolation(f"d vartheta / d e = {d_e:.6g} is not negative")
    return d_e, d_g


def sensitivity_vector(game: GameInstance, result: EquilibriumResult | None = None) -> np.ndarray:
    """All partial derivatives d e* / d g_d via the implicit function theorem."""
    if result is None:
        result = solve_equilibrium(game)
    d_e, d_g = _partials(game, result)
    return -d_g / d_e


def equilibrium_sensitivity(game: GameInstance, d: int,
                            result: EquilibriumResult | None = None) -> float:
    """d e* / d g_d at the game's mixing vector (``d`` is a degree, 1-based)."""
    if not 1 <= d <= game.pop.d_max:
        raise ValueError(f"degree {d} outside 1..{game.pop.d_max}")
    return float(sensitivity_vector(game, result)[d - 1])


def transfer_rate(game: GameInstance, d1: int, d2: int,
                  result: EquilibriumResult | None = None) -> float:
    """First-order ARE change per unit of a risk transfer from degree d2 to d1.

    Raising g_{d1} by delta while lowering g_{d2} by delta * w_{d1} / w_{d2}
    keeps the vector admissible; this returns the derivative of e* along
    that direction.
    """
    s = sensitivity_vector(game, result)
    w = game.pop.edge_weights
    return float(s[d1 - 1] - w[d1 - 1] / w[d2 - 1] * s[d2 - 1])
