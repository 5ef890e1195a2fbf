"""Best-response dynamics: runner, trace verification, cycle detection.

The runner replaces the scheduled mover's strategy with a best-response
witness whenever a strictly improving deviation exists; a full pass with
no move is convergence.  Cycle detection compares states (profile plus
player-to-act) either exactly or up to a symmetry: a relabeling of
players combined with a relabeling of queries, with the mover role mapped
through the player relabeling.  The non-convergence example that motivates
all of this alternates two players through profiles that repeat only up to
such a symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Sequence

from .best_response import DEFAULT_EPSILON, best_response_value, best_response_witness
from .game import RankingGame, StrategyProfile, require_valid, utilities
from .numeric import DomainError, Number, numbers_equal

#: skip symmetric detection when (n-1)! * m! exceeds this many mappings
SYMMETRY_BUDGET = 200_000


@dataclass(frozen=True)
class DynamicsStep:
    index: int
    mover: int
    moved: bool
    value: Number
    profile: StrategyProfile


@dataclass(frozen=True)
class CycleInfo:
    first: int
    second: int
    equivalence: str  # "exact" | "symmetric"
    player_perm: Optional[tuple[int, ...]] = None
    query_perm: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class DynamicsOutcome:
    kind: str  # converged | cycled | budget_exhausted
    round: Optional[int] = None
    cycle: Optional[CycleInfo] = None


@dataclass(frozen=True)
class DynamicsTrace:
    initial: StrategyProfile
    steps: tuple[DynamicsStep, ...]
    outcome: DynamicsOutcome

    @property
    def profiles(self) -> list[StrategyProfile]:
        return [self.initial] + [s.profile for s in self.steps]


@dataclass(frozen=True)
class TraceStepReport:
    index: int
    mover: Optional[int]
    achieved: Number
    optimal_value: Number
    optimal: bool


def _schedule(order: str, n: int, start: int, seed: Optional[int]):
    if order == "round-robin":
        i = start
        while True:
            yield i
            i = (i + 1) % n
    elif order == "random":
        import random

        if seed is None:
            raise DomainError("random order requires a seed")
        rng = random.Random(seed)
        while True:
            yield rng.randrange(n)
    else:
        raise DomainError(f"unknown order {order!r}")


def run_dynamics(
    game: RankingGame,
    initial: StrategyProfile,
    *,
    order: str = "round-robin",
    start_player: Optional[int] = None,
    seed: Optional[int] = None,
    max_rounds: int = 100,
    epsilon: Number = DEFAULT_EPSILON,
    cycle_mode: str = "symmetric",
) -> DynamicsTrace:
    """Iterate best responses until convergence, a cycle, or the budget.

    The default schedule is round-robin starting at the second player,
    matching the motivating example's move order.  Movers play the
    attained optimum (not the supremum): every strategy written down must
    be realizable.
    """
    require_valid(game, initial)
    if max_rounds < 1:
        raise DomainError("max_rounds must be >= 1")
    if start_player is None:
        start_player = 1 if game.n >= 2 else 0
    sched = _schedule(order, game.n, start_player, seed)

    profile = initial
    steps: list[DynamicsStep] = []
    states: list[tuple[StrategyProfile, int]] = []
    stays = 0
    last_move = -1
    fresh_state = True  # profile changed since the last recorded state
    outcome: Optional[DynamicsOutcome] = None

    for t in range(max_rounds):
        mover = next(sched)
        # a stay leaves the configuration unchanged, so only states reached
        # by an actual move (plus the start) can open a cycle; this keeps
        # convergence at a fixed point from masquerading as a symmetric
        # repeat between the two movers of an identical-strategy profile
        if fresh_state:
            states.append((profile, mover))
            fresh_state = False
            cyc = _find_cycle(game, states, cycle_mode)
            if cyc is not None:
                outcome = DynamicsOutcome(kind="cycled", cycle=cyc)
                break

        current = utilities(game, profile)[mover]
        br = best_response_value(game, profile, mover)
        if br.attained_value > current and not numbers_equal(br.attained_value, current):
            witness = best_response_witness(game, profile, mover, epsilon)
            profile = profile.replace(mover, witness.strategy)
            steps.append(DynamicsStep(t, mover, True, witness.value, profile))
            stays = 0
            last_move = t
            fresh_state = True
        else:
            steps.append(DynamicsStep(t, mover, False, current, profile))
            stays += 1
            if stays >= game.n:
                outcome = DynamicsOutcome(kind="converged", round=last_move + 1)
                break

    if outcome is None:
        outcome = DynamicsOutcome(kind="budget_exhausted")
    return DynamicsTrace(initial=initial, steps=tuple(steps), outcome=outcome)


def infer_movers(profiles: Sequence[StrategyProfile]) -> list[Optional[int]]:
    """Mover per step from consecutive profile diffs (None for a stay)."""
    movers: list[Optional[int]] = []
    for a, b in zip(profiles, profiles[1:]):
        if len(a) != len(b):
            raise DomainError("profiles in a trace must keep the same player count")
        diff = [i for i in range(len(a)) if a[i].emphases != b[i].emphases]
        if len(diff) > 1:
            raise DomainError(f"consecutive profiles differ in {len(diff)} players")
        movers.append(diff[0] if diff else None)
    return movers


def verify_trace(
    game: RankingGame,
    profiles: Sequence[StrategyProfile],
    movers: Optional[Sequence[Optional[int]]] = None,
) -> tuple[TraceStepReport, ...]:
    """Check every step of an explicit sequence for best-response play.

    A moving step is optimal when the mover's utility in the new profile
    equals the attained best-response value against the old one; a stay
    is optimal when nobody could improve (the profile is a fixed point
    for the scheduled player, which we check for all players since the
    mover is unidentified).
    """
    if len(profiles) < 2:
        raise DomainError("need at least two profiles")
    for prof in profiles:
        require_valid(game, prof)
    if movers is None:
        movers = infer_movers(profiles)
    reports = []
    for t, ((before, after), mover) in enumerate(zip(zip(profiles, profiles[1:]), movers)):
        if mover is None:
            # report the player with the largest improvement gap; a stay is
            # optimal only when even that player cannot gain
            current = utilities(game, before)
            gaps = []
            for i in range(game.n):
                br = best_response_value(game, before, i)
                gaps.append((br.attained_value - current[i], i, br.attained_value))
            gap, i, attained = max(gaps)
            reports.append(
                TraceStepReport(
                    t, None, current[i], attained,
                    optimal=gap <= 0 or numbers_equal(attained, current[i]),
                )
            )
            continue
        br = best_response_value(game, before, mover)
        achieved = utilities(game, after)[mover]
        reports.append(
            TraceStepReport(
                t,
                mover,
                achieved,
                br.attained_value,
                optimal=numbers_equal(achieved, br.attained_value),
            )
        )
    return tuple(reports)


def _profiles_equal(a: StrategyProfile, b: StrategyProfile) -> bool:
    return all(
        len(x) == len(y) and all(numbers_equal(p, q) for p, q in zip(x.emphases, y.emphases))
        for x, y in zip(a.strategies, b.strategies)
    )


def _find_cycle(game, states, mode) -> Optional[CycleInfo]:
    if len(states) < 2:
        return None
    last_profile, last_mover = states[-1]
    j = len(states) - 1
    for i in range(j):
        profile_i, mover_i = states[i]
        if mover_i == last_mover and _profiles_equal(profile_i, last_profile):
            return CycleInfo(first=i, second=j, equivalence="exact")
        if mode == "symmetric":
            found = _symmetric_match(game, states[i], states[-1])
            if found is not None:
                pperm, qperm = found
                return CycleInfo(
                    first=i, second=j, equivalence="symmetric",
                    player_perm=pperm, query_perm=qperm,
                )
    return None


def _symmetric_match(game, state_a, state_b):
    """Permutation pair mapping state_a onto state_b, if any.

    Searches player permutations that send a's mover to b's mover, and
    query permutations; mappings are capped by SYMMETRY_BUDGET.
    """
    profile_a, mover_a = state_a
    profile_b, mover_b = state_b
    n, m = game.n, game.m
    if math.factorial(max(n - 1, 1)) * math.factorial(m) > SYMMETRY_BUDGET:
        return None
    others_a = [i for i in range(n) if i != mover_a]
    others_b = [i for i in range(n) if i != mover_b]
    for rest in permutations(others_b):
        pperm = [0] * n
        pperm[mover_a] = mover_b
        for src, dst in zip(others_a, rest):
            pperm[src] = dst
        for qperm in permutations(range(m)):
            ok = True
            for k in range(n):
                va = profile_a[k].emphases
                vb = profile_b[pperm[k]].emphases
                if not all(numbers_equal(va[q], vb[qperm[q]]) for q in range(m)):
                    ok = False
                    break
            if ok:
                return tuple(pperm), tuple(qperm)
    return None


def detect_cycle(
    game: RankingGame,
    profiles: Sequence[StrategyProfile],
    movers: Optional[Sequence[Optional[int]]] = None,
    *,
    mode: str = "symmetric",
) -> Optional[CycleInfo]:
    """Scan an explicit profile sequence for a (possibly symmetric) repeat.

    Movers are inferred from diffs when not given; the player to act at
    the final state is extrapolated by continuing the observed rotation
    (for two players this is simply the other player).
    """
    if movers is None:
        movers = infer_movers(profiles)
    acted = [mv for mv in movers if mv is not None]
    if acted:
        nxt = _next_mover(acted, len(profiles[0]))
    else:
        nxt = 0
    full = list(movers) + [nxt]
    states = [(profiles[t], full[t]) for t in range(len(profiles))]
    for j in range(1, len(states)):
        cyc = _find_cycle(game, states[: j + 1], mode)
        if cyc is not None:
            return cyc
    return None


def _next_mover(acted: list[int], n: int) -> int:
    """Continue the observed mover rotation one step."""
    last = acted[-1]
    # look for the most recent successor of `last` in the history
    for t in range(len(acted) - 1):
        if acted[t] == last:
            return acted[t + 1]
    return (last + 1) % n
