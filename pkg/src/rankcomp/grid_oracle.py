"""Brute-force equilibrium search on a rational grid.

Strategies are restricted to emphases that are multiples of 1/g (still on
the capped simplex); profiles are enumerated lexicographically, by default
up to player-permutation symmetry.  In ``exact`` deviation mode each grid
profile is screened in floats (see :mod:`rankcomp.kernels`) and survivors
are confirmed with exact rational best responses against *continuous*
deviations — so a reported profile is a genuine equilibrium of the full
game, while an empty result only corroborates non-existence (equilibria
may lie off-grid).  ``grid`` mode checks deviations restricted to grid
strategies and is diagnostic only: it can accept spurious profiles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from math import comb

import numpy as np

from . import kernels
from .equilibria import verify_nash
from .game import EmphasisVector, RankingGame, StrategyProfile, utilities
from .numeric import CapacityError, DomainError, Number, parse_number

DEFAULT_BUDGET = 100_000_000


@dataclass(frozen=True)
class GridSpec:
    g: int
    n: int
    m: int
    peak: Number
    budget: int = DEFAULT_BUDGET
    symmetry: bool = True

    def __post_init__(self):
        if self.g < 1:
            raise DomainError("grid resolution must be >= 1")
        if self.n < 1 or self.m < 1:
            raise DomainError("need n >= 1 and m >= 1")
        peak = self.peak
        if isinstance(peak, str):
            peak = parse_number(peak)
            object.__setattr__(self, "peak", peak)
        if not 0 <= peak <= 1:
            raise DomainError(f"peak {peak} outside [0, 1]")


@dataclass(frozen=True)
class GridSearchResult:
    equilibria: tuple[StrategyProfile, ...]
    profiles_checked: int
    strategy_count: int
    mode: str
    symmetry: bool
    notes: tuple[str, ...] = field(default_factory=tuple)


def strategy_count(spec: GridSpec) -> int:
    """Grid points per player: compositions of <= g into m parts."""
    return comb(spec.g + spec.m, spec.m)


def profile_count(spec: GridSpec) -> int:
    s = strategy_count(spec)
    if spec.symmetry:
        return comb(s + spec.n - 1, spec.n)
    return s**spec.n


def grid_strategies(spec: GridSpec) -> list[tuple[int, ...]]:
    """All numerator vectors (c_1..c_m), sum <= g, lexicographic."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], remaining: int, slots: int):
        if slots == 0:
            out.append(tuple(prefix))
            return
        for c in range(remaining + 1):
            prefix.append(c)
            rec(prefix, remaining - c, slots - 1)
            prefix.pop()

    rec([], spec.g, spec.m)
    return out


def _strategy_vector(nums: tuple[int, ...], g: int) -> EmphasisVector:
    return EmphasisVector([Fraction(c, g) for c in nums])


def _index_profiles(spec: GridSpec, count: int):
    if spec.symmetry:
        return combinations_with_replacement(range(count), spec.n)
    return product(range(count), repeat=spec.n)


def grid_profiles(spec: GridSpec):
    """Enumerate grid StrategyProfiles (respecting the symmetry flag)."""
    total = profile_count(spec)
    if total > spec.budget:
        raise CapacityError(
            f"{total} grid profiles exceed the budget of {spec.budget}"
        )
    strategies = [_strategy_vector(s, spec.g) for s in grid_strategies(spec)]
    for idx in _index_profiles(spec, len(strategies)):
        yield StrategyProfile([strategies[i] for i in idx])


def _screen_exact_mode(spec: GridSpec, game: RankingGame, chunk_size: int = 65536):
    """Float-screen all grid profiles, yield surviving index tuples."""
    numerators = grid_strategies(spec)
    strat = np.array(numerators, dtype=np.float64) / spec.g
    peak = float(spec.peak)
    buf: list[tuple[int, ...]] = []
    for idx in _index_profiles(spec, len(numerators)):
        buf.append(idx)
        if len(buf) >= chunk_size:
            yield from _screen_chunk(strat, buf, peak)
            buf = []
    if buf:
        yield from _screen_chunk(strat, buf, peak)


def _screen_chunk(strat, buf, peak):
    prof = np.array(buf, dtype=np.int64)
    mask = kernels.grid_screen(strat, prof, peak)
    for keep, idx in zip(mask, buf):
        if keep:
            yield idx


def grid_nash_search(
    game: RankingGame,
    spec: GridSpec,
    deviation_mode: str = "exact",
    jobs: int = 1,
) -> GridSearchResult:
    """Search the grid for equilibria under the chosen deviation model."""
    if (game.n, game.m) != (spec.n, spec.m):
        raise DomainError("game and grid spec disagree on n or m")
    if game.peak != spec.peak:
        raise DomainError("game and grid spec disagree on the peak")
    total = profile_count(spec)
    if total > spec.budget:
        raise CapacityError(f"{total} grid profiles exceed the budget of {spec.budget}")
    s_count = strategy_count(spec)

    if deviation_mode == "exact":
        numerators = grid_strategies(spec)
        strategies = [_strategy_vector(s, spec.g) for s in numerators]
        found = []
        index_iter = (
            _screen_exact_mode(spec, game)
            if jobs <= 1
            else _screen_exact_parallel(spec, game, jobs)
        )
        for idx in index_iter:
            profile = StrategyProfile([strategies[i] for i in idx])
            if verify_nash(game, profile).is_nash:
                found.append(profile)
        notes = (
            "grid profiles passing the exact check are genuine equilibria of the continuous game",
            "an empty result corroborates but does not prove non-existence",
        )
        return GridSearchResult(
            equilibria=tuple(found),
            profiles_checked=total,
            strategy_count=s_count,
            mode="exact",
            symmetry=spec.symmetry,
            notes=notes,
        )

    if deviation_mode == "grid":
        strategies = [_strategy_vector(s, spec.g) for s in grid_strategies(spec)]
        alt_cost = total * spec.n * len(strategies)
        if alt_cost > spec.budget:
            raise CapacityError(
                f"grid-deviation check needs {alt_cost} utility evaluations, over budget"
            )
        found = []
        for idx in _index_profiles(spec, len(strategies)):
            profile = StrategyProfile([strategies[i] for i in idx])
            if _grid_stable(game, profile, strategies):
                found.append(profile)
        notes = (
            "grid mode checks grid deviations only and may accept spurious profiles",
        )
        return GridSearchResult(
            equilibria=tuple(found),
            profiles_checked=total,
            strategy_count=s_count,
            mode="grid",
            symmetry=spec.symmetry,
            notes=notes,
        )

    raise DomainError(f"unknown deviation mode {deviation_mode!r}")


def _grid_stable(game, profile, strategies) -> bool:
    current = utilities(game, profile)
    for i in range(game.n):
        for alt in strategies:
            if alt.emphases == profile[i].emphases:
                continue
            if utilities(game, profile.replace(i, alt))[i] > current[i]:
                return False
    return True


def _screen_exact_parallel(spec: GridSpec, game: RankingGame, jobs: int):
    """Chunked parallel screen; results merged in submission order."""
    from concurrent.futures import ProcessPoolExecutor

    numerators = grid_strategies(spec)
    strat = np.array(numerators, dtype=np.float64) / spec.g
    peak = float(spec.peak)
    chunk: list[tuple[int, ...]] = []
    chunks: list[list[tuple[int, ...]]] = []
    for idx in _index_profiles(spec, len(numerators)):
        chunk.append(idx)
        if len(chunk) >= 65536:
            chunks.append(chunk)
            chunk = []
    if chunk:
        chunks.append(chunk)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_screen_worker, strat, c, peak) for c in chunks]
        for fut in futures:
            yield from fut.result()


def _screen_worker(strat, buf, peak):
    return list(_screen_chunk(strat, buf, peak))
