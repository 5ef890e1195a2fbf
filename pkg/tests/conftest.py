import random
from fractions import Fraction

import pytest

from rankcomp.game import EmphasisVector, RankingGame, StrategyProfile


def random_fraction(rng: random.Random, max_den: int = 12) -> Fraction:
    den = rng.randint(1, max_den)
    num = rng.randint(0, den)
    return Fraction(num, den)


def random_strategy(rng: random.Random, m: int, zero_prob: float = 0.3) -> EmphasisVector:
    vals = []
    for _ in range(m):
        if rng.random() < zero_prob:
            vals.append(Fraction(0))
        else:
            vals.append(random_fraction(rng))
    total = sum(vals)
    if total > 1:
        vals = [v / total for v in vals]
    return EmphasisVector(vals)


def random_instance(rng: random.Random, max_n: int = 5, max_m: int = 8):
    n = rng.randint(2, max_n)
    m = rng.randint(1, max_m)
    peak = random_fraction(rng, 10)
    game = RankingGame.tent(n, m, peak)
    profile = StrategyProfile([random_strategy(rng, m) for _ in range(n)])
    return game, profile


@pytest.fixture
def rng():
    return random.Random(20240801)
