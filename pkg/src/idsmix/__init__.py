"""Equilibrium security investment in interdependent-security population games
with degree-correlated risk exposure."""

__version__ = "0.1.0"

from .best_response import BestResponseCurve, check_assumption4, saturation_thresholds
from .equilibrium import (
    EquilibriumResult,
    GameInstance,
    are_of_profile,
    equilibrium_are,
    equilibrium_sensitivity,
    solve_equilibrium,
    vartheta,
)
from .model import (
    ExposureResponse,
    InfectionCurve,
    MixingVector,
    PopulationProfile,
    StrategyProfile,
    ThreatModel,
    cost_of_action,
    make_power_law_population,
    make_rho_mixing,
)

__all__ = [
    "BestResponseCurve",
    "EquilibriumResult",
    "ExposureResponse",
    "GameInstance",
    "InfectionCurve",
    "MixingVector",
    "PopulationProfile",
    "StrategyProfile",
    "ThreatModel",
    "are_of_profile",
    "check_assumption4",
    "cost_of_action",
    "equilibrium_are",
    "equilibrium_sensitivity",
    "make_power_law_population",
    "make_rho_mixing",
    "saturation_thresholds",
    "solve_equilibrium",
    "vartheta",
]
