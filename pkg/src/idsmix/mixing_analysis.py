"""Ordering of mixing vectors and the risk-transfer construction.

A mixing vector g induces a distribution v_d = w_d g_d over degrees. One
vector raises equilibrium ARE relative to another when its v is larger in
the usual stochastic order; this module checks that order, a sufficient
ratio condition for it, and builds the explicit sequence of pairwise risk
transfers that walks one vector into the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibrium import GameInstance, equilibrium_are
from .errors import InvariantViolation, ModelError
from .model import ADMISSIBLE_ATOL, MixingVector, PopulationProfile

GAP_ATOL = 1e-9
PAIRINGS = ("published", "first_gap")


def _as_array(g) -> np.ndarray:
    return np.asarray(g.g if isinstance(g, MixingVector) else g, dtype=float)


@dataclass(frozen=True, eq=False)
class RiskDistribution:
    v: np.ndarray

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.v)


def risk_distribution(pop: PopulationProfile, g) -> RiskDistribution:
    g = MixingVector(_as_array(g))
    g.require_admissible(pop, atol=1e-10)
    return RiskDistribution(pop.edge_weights * g.g)


@dataclass(frozen=True)
class DominanceResult:
    holds: bool
    holds_strictly: bool
    fails_at: int | None = None

    def __bool__(self):
        return self.holds


def dominance_condition(pop: PopulationProfile, g1, g2, atol: float = 1e-12) -> DominanceResult:
    """Prefix sums of w*g1 never exceed those of w*g2.

    Equivalently v(g1) first-order stochastically dominates v(g2). Both
    vectors must be admissible for ``pop``. ``fails_at`` is the first
    degree where the prefix inequality breaks.
    """
    g1, g2 = MixingVector(_as_array(g1)), MixingVector(_as_array(g2))
    g1.require_admissible(pop, ADMISSIBLE_ATOL)
    g2.require_admissible(pop, ADMISSIBLE_ATOL)
    c1 = np.cumsum(pop.edge_weights * g1.g)
    c2 = np.cumsum(pop.edge_weights * g2.g)
    bad = np.nonzero(c1 > c2 + atol)[0]
    if bad.size:
        return DominanceResult(False, False, int(bad[0]) + 1)
    return DominanceResult(True, bool(np.any(c1 < c2 - atol)))


def sufficient_ratio_condition(g1, g2) -> bool:
    """True iff g1_d / g2_d is nondecreasing in d."""
    g1, g2 = _as_array(g1), _as_array(g2)
    if g1.shape != g2.shape or np.any(g1 <= 0) or np.any(g2 <= 0):
        raise ModelError("ratio condition needs two positive vectors of equal length")
    ratio = g1 / g2
    return bool(np.all(ratio[:-1] <= ratio[1:]))


def prefix_ratio_lemma_check(a, b, rtol: float = 1e-12) -> bool:
    """Check the prefix-ratio lemma on one pair of sequences.

    If b_l / a_l is nonincreasing in l then the full-sum ratio is at most
    every prefix-sum ratio. Returns whether the hypothesis holds; when it
    does, the conclusion is verified and a counterexample raises
    :class:`InvariantViolation`.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size < 2:
        raise ValueError("need two sequences of equal length K > 1")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("sequences must be nonnegative")
    if np.any(a == 0):
        raise ZeroDivisionError("a contains a zero entry")
    ratio = b / a
    if not np.all(ratio[1:] <= ratio[:-1]):
        return False
    prefix = np.cumsum(b) / np.cumsum(a)
    total = prefix[-1]
    bad = np.nonzero(total > prefix * (1 + rtol))[0]
    if bad.size:
        k = int(bad[0]) + 1
        raise InvariantViolation(f"total ratio {total!r} exceeds prefix ratio at k={k}")
    return True


@dataclass(frozen=True, eq=False)
class TransferStep:
    """One risk transfer: g_{d1} up by ``delta``, g_{d2} down by ``decrease``."""

    d1: int
    d2: int
    delta: float
    decrease: float
    g: np.ndarray
    are_path: tuple = ()


def transfer_sequence(
    pop: PopulationProfile,
    g_from,
    g_to,
    *,
    game: GameInstance | None = None,
    max_substep: float = 0.05,
    gap_atol: float = GAP_ATOL,
    pairing: str = "published",
) -> list[TransferStep]:
    """Pairwise transfers turning ``g_from`` into ``g_to``.

    ``g_to`` must dominate ``g_from`` in the sense of
    :func:`dominance_condition`. Each step raises g_{d1} and lowers g_{d2}
    for some d2 < d1, by as much as both gaps allow; admissibility is
    preserved exactly by construction.

    ``pairing`` chooses the degrees:

    * ``"published"``: d1 is the highest degree still below target and d2
      the lowest still above it. This reaches the target whenever
      g_to - g_from changes sign once (for instance under the ratio
      condition), but with interleaved gaps it can break dominance midway
      and then raises :class:`InvariantViolation`.
    * ``"first_gap"``: d2 is the lowest degree still above target and d1
      the lowest degree still below it. Every prefix sum of the weighted
      surplus stays nonnegative, so any dominated pair is reached.

    If ``game`` is given, each step is replayed in sub-steps of increase at
    most ``max_substep`` and the equilibrium ARE is re-solved after every
    sub-step; a non-increase raises :class:`InvariantViolation`. The ARE
    values are stored in each step's ``are_path``.
    """
    if pairing not in PAIRINGS:
        raise ModelError(f"pairing must be one of {PAIRINGS}, got {pairing!r}")
    target = _as_array(g_to)
    current = _as_array(g_from).copy()
    dom = dominance_condition(pop, target, current)
    if not dom.holds:
        raise ModelError(
            f"target does not dominate the starting vector (prefix sums fail at d={dom.fails_at})"
        )
    w = pop.edge_weights
    steps: list[TransferStep] = []
    e_prev = equilibrium_are(game, current) if game is not None else None
    for _ in range(2 * pop.d_max + 1):
        below = np.nonzero(target > current + gap_atol)[0]
        above = np.nonzero(current > target + gap_atol)[0]
        if below.size == 0 and above.size == 0:
            return steps
        if below.size == 0 or above.size == 0:
            raise InvariantViolation(
                "transfer procedure stalled: one-sided coordinate gaps remain "
                f"(max gap {np.max(np.abs(target - current)):.3e})"
            )
        i2 = int(above[0])
        i1 = int(below[-1]) if pairing == "published" else int(below[0])
        if i2 >= i1:
            raise InvariantViolation(f"transfer would move risk downward (d1={i1 + 1}, d2={i2 + 1})")
        gap1 = target[i1] - current[i1]
        gap2 = current[i2] - target[i2]
        start = current.copy()
        if w[i2] / w[i1] * gap2 < gap1:
            delta, decrease = w[i2] / w[i1] * gap2, gap2
            current[i1] += delta
            current[i2] = target[i2]
        else:
            delta, decrease = gap1, w[i1] / w[i2] * gap1
            current[i1] = target[i1]
            current[i2] -= decrease
        path = ()
        if game is not None:
            path, e_prev = _replay(game, start, i1, i2, delta, max_substep, e_prev)
        steps.append(TransferStep(i1 + 1, i2 + 1, float(delta), float(decrease), current.copy(), path))
    raise InvariantViolation("transfer procedure did not terminate within 2 * d_max steps")


def _replay(game, start, i1, i2, delta, max_substep, e_prev):
    w = game.pop.edge_weights
    n_sub = max(1, int(np.ceil(delta / max_substep)))
    g = start.copy()
    path = []
    for k in range(1, n_sub + 1):
        g = start.copy()
        g[i1] += delta * k / n_sub
        g[i2] -= w[i1] / w[i2] * delta * k / n_sub
        e = equilibrium_are(game, g)
        if not e > e_prev:
            raise InvariantViolation(
                f"ARE did not increase on transfer d2={i2 + 1} -> d1={i1 + 1}: {e_prev!r} -> {e!r}"
            )
        path.append(e)
        e_prev = e
    return tuple(path), e_prev
