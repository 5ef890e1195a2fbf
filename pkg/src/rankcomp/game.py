"""Core ranking-game model: strategies, scoring, rankings, utilities.

A game has n players, m queries, and a single-peaked scoring function f.
A player's strategy is an emphasis vector on the capped simplex (every
component in [0, 1], components summing to at most 1); the score of a
document for query j is f applied to its j-th emphasis.  Per query, the
players sharing the top score split one unit of utility equally — the
expected value of "ties broken arbitrarily" under a uniform draw, and the
only sharing rule consistent with two identical documents earning m/2
each.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numeric import (
    DomainError,
    Number,
    SIMPLEX_TOL,
    all_exact,
    number_to_json,
    numbers_equal,
    parse_number,
)


@dataclass(frozen=True)
class SinglePeakFunction:
    """Piecewise-linear single-peaked function on [0, 1].

    ``knots`` are (x, y) pairs with x strictly increasing from 0 to 1;
    y rises strictly to the unique maximum at ``peak`` and falls strictly
    after it.  Degenerate peaks 0 and 1 keep only the surviving branch.
    The default shape used throughout is the normalized tent, built with
    :meth:`tent`.
    """

    knots: tuple[tuple[Number, Number], ...]
    peak: Number

    def __post_init__(self):
        ks = self.knots
        if len(ks) < 2:
            raise DomainError("need at least two knots")
        if ks[0][0] != 0 or ks[-1][0] != 1:
            raise DomainError("knots must span [0, 1]")
        xs = [x for x, _ in ks]
        ys = [y for _, y in ks]
        if any(xs[i] >= xs[i + 1] for i in range(len(xs) - 1)):
            raise DomainError("knot x-coordinates must be strictly increasing")
        if not 0 <= self.peak <= 1:
            raise DomainError("peak must lie in [0, 1]")
        if self.peak not in xs:
            raise DomainError("peak must be one of the knot x-coordinates")
        if any(y < 0 or y > 1 for y in ys):
            raise DomainError("knot values must lie in [0, 1]")
        p_idx = xs.index(self.peak)
        for i in range(p_idx):
            if not ys[i] < ys[i + 1]:
                raise DomainError("function must increase strictly up to the peak")
        for i in range(p_idx, len(ys) - 1):
            if not ys[i] > ys[i + 1]:
                raise DomainError("function must decrease strictly after the peak")

    @classmethod
    def tent(cls, peak: Number) -> "SinglePeakFunction":
        """Normalized tent: x/peak up to the peak, (1-x)/(1-peak) after."""
        peak = parse_number(peak) if isinstance(peak, str) else peak
        if not 0 <= peak <= 1:
            raise DomainError(f"peak {peak} outside [0, 1]")
        one = Fraction(1) if not isinstance(peak, float) else 1.0
        zero = one - one
        if peak == 0:
            return cls(knots=((zero, one), (one, zero)), peak=zero)
        if peak == 1:
            return cls(knots=((zero, zero), (one, one)), peak=one)
        return cls(knots=((zero, zero), (peak, one), (one, zero)), peak=peak)

    @property
    def max_score(self) -> Number:
        return self(self.peak)

    def __call__(self, x: Number) -> Number:
        if not 0 <= x <= 1:
            raise DomainError(f"emphasis {x} outside [0, 1]")
        ks = self.knots
        for (x0, y0), (x1, y1) in zip(ks, ks[1:]):
            if x <= x1:
                if x == x0:
                    return y0
                if x == x1:
                    return y1
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return ks[-1][1]

    def inverse_increasing_geq(self, target: Number) -> Number:
        """Least x in [0, peak] with f(x) >= target.

        This is the branch inverse used to price beating a given score:
        with target = f(e) for some opponent emphasis e, the result is the
        cheapest emphasis achieving at least that score.  Requires
        target <= f(peak).
        """
        if target > self.max_score:
            raise DomainError("target exceeds the maximum score")
        ks = self.knots
        x0, y0 = ks[0]
        if y0 >= target:
            return x0
        for (xa, ya), (xb, yb) in zip(ks, ks[1:]):
            if xa >= self.peak:
                break
            if yb >= target:
                return xa + (target - ya) * (xb - xa) / (yb - ya)
        return self.peak


@dataclass(frozen=True)
class EmphasisVector:
    """A document abstracted as per-query emphases."""

    emphases: tuple[Number, ...]

    def __init__(self, emphases: Sequence[Number]):
        object.__setattr__(self, "emphases", tuple(emphases))

    @property
    def total(self) -> Number:
        return sum(self.emphases)

    def __len__(self) -> int:
        return len(self.emphases)

    def __getitem__(self, j: int) -> Number:
        return self.emphases[j]


@dataclass(frozen=True)
class RankingGame:
    """Game parameters: player count, query count, scoring function."""

    n: int
    m: int
    f: SinglePeakFunction

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("need at least one player")
        if self.m < 1:
            raise DomainError("need at least one query")

    @classmethod
    def tent(cls, n: int, m: int, peak: Number) -> "RankingGame":
        return cls(n=n, m=m, f=SinglePeakFunction.tent(peak))

    @property
    def peak(self) -> Number:
        return self.f.peak


@dataclass(frozen=True)
class StrategyProfile:
    """All players' strategies, indexed by player id."""

    strategies: tuple[EmphasisVector, ...]

    def __init__(self, strategies: Sequence):
        vecs = tuple(
            s if isinstance(s, EmphasisVector) else EmphasisVector(s) for s in strategies
        )
        object.__setattr__(self, "strategies", vecs)

    def __len__(self) -> int:
        return len(self.strategies)

    def __getitem__(self, i: int) -> EmphasisVector:
        return self.strategies[i]

    def replace(self, player: int, strategy: EmphasisVector) -> "StrategyProfile":
        s = list(self.strategies)
        s[player] = strategy
        return StrategyProfile(s)

    def is_exact(self) -> bool:
        return all(all_exact(v.emphases) for v in self.strategies)


@dataclass(frozen=True)
class TieGroup:
    score: Number
    players: tuple[int, ...]


@dataclass(frozen=True)
class InducedRanking:
    """Per-query ordered tie groups, best score first."""

    query_index: int
    tie_groups: tuple[TieGroup, ...]

    def rank_of(self, player: int) -> int:
        """1-based rank, counting every member of better groups."""
        seen = 0
        for group in self.tie_groups:
            if player in group.players:
                return seen + 1
            seen += len(group.players)
        raise DomainError(f"player {player} not in ranking")

    @property
    def top_players(self) -> tuple[int, ...]:
        return self.tie_groups[0].players


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def score(game: RankingGame, strategy: EmphasisVector, query_index: int) -> Number:
    """Retrieval score of a document for one query: f(emphasis)."""
    if not 0 <= query_index < game.m:
        raise DomainError(f"query index {query_index} outside [0, {game.m})")
    return game.f(strategy[query_index])


def induce_ranking(game: RankingGame, profile: StrategyProfile, query_index: int) -> InducedRanking:
    """Rank players by descending score; equal scores share a tie group."""
    scores = [(score(game, profile[i], query_index), i) for i in range(game.n)]
    # stable two-pass sort keeps exact rationals exact: by id, then score desc
    scores.sort(key=lambda t: t[1])
    scores.sort(key=lambda t: t[0], reverse=True)
    groups: list[TieGroup] = []
    for s, i in scores:
        if groups and numbers_equal(groups[-1].score, s):
            groups[-1] = TieGroup(groups[-1].score, groups[-1].players + (i,))
        else:
            groups.append(TieGroup(s, (i,)))
    return InducedRanking(
        query_index=query_index,
        tie_groups=tuple(TieGroup(g.score, tuple(sorted(g.players))) for g in groups),
    )


def utilities(game: RankingGame, profile: StrategyProfile) -> tuple[Number, ...]:
    """Per-player expected utility: each query's top group splits one unit."""
    exact = profile.is_exact() and all_exact([k for xy in game.f.knots for k in xy])
    out = [Fraction(0) if exact else 0.0] * game.n
    for j in range(game.m):
        top = induce_ranking(game, profile, j).top_players
        share = Fraction(1, len(top)) if exact else 1.0 / len(top)
        for i in top:
            out[i] = out[i] + share
    return tuple(out)


def validate_profile(game: RankingGame, profile: StrategyProfile) -> ValidationReport:
    """Report every invariant violation; never raises."""
    violations: list[str] = []
    if len(profile) != game.n:
        violations.append(f"profile has {len(profile)} strategies, game has n={game.n}")
    for i, vec in enumerate(profile.strategies):
        if len(vec) != game.m:
            violations.append(f"player {i}: length {len(vec)} != m={game.m}")
            continue
        for j, e in enumerate(vec.emphases):
            if not 0 <= e <= 1:
                violations.append(f"player {i}: emphasis {e} on query {j} outside [0, 1]")
        total = vec.total
        cap = 1 if all_exact(vec.emphases) else 1 + SIMPLEX_TOL
        if total > cap:
            violations.append(f"player {i}: sum {total} > 1")
    return ValidationReport(ok=not violations, violations=tuple(violations))


def require_valid(game: RankingGame, profile: StrategyProfile) -> None:
    report = validate_profile(game, profile)
    if not report.ok:
        raise DomainError("invalid profile: " + "; ".join(report.violations))


# --- profile file format -------------------------------------------------
#
# {"n": int, "m": int, "peak": number, "strategies": [[number, ...], ...]}
#
# Numbers may be JSON numbers or strings ("1/3", "0.45"); both are read
# exactly.  save_profile emits a float view plus an exact string view so
# downstream verification stays rational.


def profile_to_dict(game: RankingGame, profile: StrategyProfile) -> dict:
    return {
        "n": game.n,
        "m": game.m,
        "peak": float(game.peak),
        "peak_exact": number_to_json(game.peak),
        "strategies": [[float(e) for e in v.emphases] for v in profile.strategies],
        "strategies_exact": [
            [number_to_json(e) for e in v.emphases] for v in profile.strategies
        ],
    }


def profile_from_dict(data: dict) -> tuple[RankingGame, StrategyProfile]:
    try:
        n = int(data["n"])
        m = int(data["m"])
        peak = parse_number(data.get("peak_exact", data["peak"]))
        raw = data.get("strategies_exact", data["strategies"])
    except KeyError as exc:
        raise DomainError(f"profile file missing field {exc}") from exc
    game = RankingGame.tent(n, m, peak)
    profile = StrategyProfile([[parse_number(e) for e in row] for row in raw])
    return game, profile


def load_profile(path) -> tuple[RankingGame, StrategyProfile]:
    with open(path, "r", encoding="utf-8") as fh:
        return profile_from_dict(json.load(fh))


def save_profile(path, game: RankingGame, profile: StrategyProfile) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(profile_to_dict(game, profile), fh, sort_keys=True)
        fh.write("\n")
