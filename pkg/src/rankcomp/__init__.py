"""Multi-query ranking games and competition-log analytics.

The library has two halves that share a numeric core:

* a game-theoretic half: emphasis-vector strategies scored by a
  single-peaked retrieval function, pure-Nash existence/construction/
  verification, best-response machinery, dynamics, and a brute-force
  grid oracle;
* an empirical half: document features, ranking-similarity measures,
  competition-log handling, and the 27-feature next-round-winner
  prediction pipeline.

Everything is importable from the submodules; the most commonly used
names are re-exported here.
"""

from .game import (
    EmphasisVector,
    InducedRanking,
    RankingGame,
    SinglePeakFunction,
    StrategyProfile,
    induce_ranking,
    score,
    utilities,
    validate_profile,
)
from .best_response import best_response_value, best_response_witness, thresholds
from .equilibria import construct_equilibrium, exists_equilibrium, verify_nash
from .dynamics import detect_cycle, run_dynamics, verify_trace
from .grid_oracle import GridSpec, grid_nash_search, grid_profiles

__all__ = [
    "EmphasisVector",
    "InducedRanking",
    "RankingGame",
    "SinglePeakFunction",
    "StrategyProfile",
    "induce_ranking",
    "score",
    "utilities",
    "validate_profile",
    "thresholds",
    "best_response_value",
    "best_response_witness",
    "exists_equilibrium",
    "construct_equilibrium",
    "verify_nash",
    "run_dynamics",
    "verify_trace",
    "detect_cycle",
    "GridSpec",
    "grid_profiles",
    "grid_nash_search",
]

__version__ = "0.1.0"
