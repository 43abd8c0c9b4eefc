"""Monte Carlo check of the first-hop attack count behind the ARE estimate.

Samples a configuration-model graph with the population's degree
distribution, then repeatedly draws direct attacks, infections and one
round of neighbour attacks. The mean number of first-hop indirect attacks
per agent should match tau_A * beta_IA * sum_d d f_d p(a_d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .model import InfectionCurve, PopulationProfile, StrategyProfile, ThreatModel

MAX_SWAP_ATTEMPTS = 100


@dataclass(frozen=True, eq=False)
class SampledNetwork:
    n: int
    degrees: np.ndarray
    edges: np.ndarray  # shape (m, 2), u < v
    seed: int

    @property
    def degree_histogram(self) -> np.ndarray:
        """Agent counts for degrees 1..max realized degree."""
        return np.bincount(self.degrees, minlength=int(self.degrees.max()) + 1)[1:]


def _stratified_degrees(pop: PopulationProfile, n: int, rng) -> np.ndarray:
    # largest-remainder rounding of n * f_d
    exact = n * pop.fractions
    counts = np.floor(exact).astype(int)
    short = n - counts.sum()
    if short:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    deg = np.repeat(np.arange(1, pop.d_max + 1), counts)
    return rng.permutation(deg)


def _pair_stubs(degrees: np.ndarray, rng) -> np.ndarray:
    stubs = rng.permutation(np.repeat(np.arange(degrees.size), degrees))
    pairs = stubs.reshape(-1, 2)
    pairs.sort(axis=1)
    edges: dict[tuple[int, int], None] = {}
    bad = []
    for u, v in pairs.tolist():
        if u == v or (u, v) in edges:
            bad.append((u, v))
        else:
            edges[(u, v)] = None
    for s1, s2 in bad:
        # degree-preserving repair: swap the bad pair with an accepted edge
        keys = list(edges)
        for _ in range(MAX_SWAP_ATTEMPTS):
            u, v = keys[rng.integers(len(keys))]
            if rng.random() < 0.5:
                u, v = v, u
            e1 = (min(s1, u), max(s1, u))
            e2 = (min(s2, v), max(s2, v))
            if s1 == u or s2 == v or e1 == e2 or e1 in edges or e2 in edges:
                continue
            del edges[(min(u, v), max(u, v))]
            edges[e1] = None
            edges[e2] = None
            break
        else:
            raise ModelError("could not remove a self-loop or multi-edge")
    return np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)


def sample_network(pop: PopulationProfile, n: int, seed: int,
                   degree_sampling: str = "stratified") -> SampledNetwork:
    """Configuration-model graph with neutral mixing.

    ``degree_sampling`` is ``"stratified"`` (largest-remainder quotas, the
    histogram matches n*f up to rounding) or ``"multinomial"`` (i.i.d. draws
    from f). An odd stub total is completed by raising one agent's degree.
    """
    if n < pop.d_max + 1:
        raise ModelError(f"n = {n} agents cannot realize degree {pop.d_max}")
    rng = np.random.default_rng(seed)
    if degree_sampling == "stratified":
        degrees = _stratified_degrees(pop, n, rng)
    elif degree_sampling == "multinomial":
        degrees = rng.choice(np.arange(1, pop.d_max + 1), size=n, p=pop.fractions)
    else:
        raise ValueError(f"unknown degree sampling {degree_sampling!r}")
    degrees = degrees.astype(np.int64)
    if degrees.sum() % 2:
        room = np.nonzero(degrees < pop.d_max)[0]
        degrees[room[rng.integers(room.size)]] += 1
    edges = _pair_stubs(degrees, rng)
    return SampledNetwork(n, degrees, edges, int(seed))


@dataclass(frozen=True, eq=False)
class SimOutcome:
    first_hop_attacks_per_agent: float
    std_error: float
    per_degree_direct_infection: np.ndarray
    reps: int
    seed: int
    expected: float
    realized_expected: float

    @property
    def z_score(self) -> float:
        return (self.first_hop_attacks_per_agent - self.expected) / self.std_error


def first_hop_expectation(pop: PopulationProfile, threat: ThreatModel,
                          curve: InfectionCurve, profile: StrategyProfile) -> float:
    """tau_A * beta_IA * sum_d d f_d p(a_d)."""
    p = np.asarray(curve(profile.investments), dtype=float)
    return float(threat.tau_a * threat.beta_ia * np.dot(pop.degrees * pop.fractions, p))


def simulate_first_hop(net: SampledNetwork, threat: ThreatModel, curve: InfectionCurve,
                       profile: StrategyProfile, reps: int, seed: int,
                       pop: PopulationProfile | None = None) -> SimOutcome:
    """Mean first-hop indirect attacks per agent over ``reps`` replications.

    Each replication gets its own stream spawned from ``seed``, so results
    are reproducible independently of how replications are scheduled.
    ``pop`` (optional) supplies the population-level expectation; without
    it the realized degree histogram is used.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    a = profile.investments
    if net.degrees.max() > a.size:
        raise ModelError("profile does not cover every realized degree")
    p_node = np.asarray(curve(a[net.degrees - 1]), dtype=float)
    u, v = net.edges[:, 0], net.edges[:, 1]
    m = u.size
    max_deg = a.size
    deg_counts = np.bincount(net.degrees, minlength=max_deg + 1)[1:]
    streams = np.random.SeedSequence(seed).spawn(reps)

    per_rep = np.empty(reps)
    infected_by_degree = np.zeros(max_deg)
    for k, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        hit = rng.random(net.n) < threat.tau_a
        infected = hit & (rng.random(net.n) < p_node)
        fwd = infected[u] & (rng.random(m) < threat.beta_ia)
        back = infected[v] & (rng.random(m) < threat.beta_ia)
        per_rep[k] = (np.count_nonzero(fwd) + np.count_nonzero(back)) / net.n
        infected_by_degree += np.bincount(net.degrees[infected], minlength=max_deg + 1)[1:]

    with np.errstate(invalid="ignore", divide="ignore"):
        rates = infected_by_degree / (reps * deg_counts)
    rates[deg_counts == 0] = np.nan
    std_error = float(per_rep.std(ddof=1) / np.sqrt(reps)) if reps > 1 else float("nan")
    realized = float(threat.tau_a * threat.beta_ia * np.sum(net.degrees * p_node) / net.n)
    expected = first_hop_expectation(pop, threat, curve, profile) if pop is not None else realized
    return SimOutcome(
        first_hop_attacks_per_agent=float(per_rep.mean()),
        std_error=std_error,
        per_degree_direct_infection=rates,
        reps=reps,
        seed=int(seed),
        expected=expected,
        realized_expected=realized,
    )
