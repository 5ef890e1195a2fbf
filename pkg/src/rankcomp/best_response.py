"""Exact best-response analysis against fixed opponents.

For a deviating player, each query is priced by the cheapest emphasis on
the increasing branch that reaches the opponents' top score (the branch
inverse).  A deviation plan picks, per query, one of: stay at zero, match
the top score exactly (tie), or beat it strictly (solo).  Solo wins need
an arbitrarily small margin above the cost, so a plan containing one is
feasible only with strict budget slack; tie-only plans may spend the whole
budget.  Playing past the peak is never useful: for equal score the
decreasing branch always costs more emphasis.

The default optimizer enumerates invest-subsets exactly (2^m plans, m <=
15).  A structured fast path — ascending-cost solo prefixes combined with
tie subsets — is provided for larger m and is checked against the
enumeration in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .game import EmphasisVector, RankingGame, StrategyProfile, require_valid, score, utilities
from .numeric import (
    CapacityError,
    DomainError,
    Number,
    is_exact,
    number_less,
    numbers_equal,
)

#: largest m for which plan enumeration runs without the greedy flag
ENUMERATION_LIMIT = 15

DEFAULT_EPSILON = Fraction(1, 1000)


@dataclass(frozen=True)
class QueryThreshold:
    """Price of contesting one query against the fixed opponents.

    cost          least emphasis in [0, peak] reaching the opponents' top
                  score on the increasing branch
    top_is_peak   the top score equals f(peak), so it cannot be beaten
    tie_count     opponents attaining the top score
    beats_at_cost playing exactly `cost` already exceeds the top score
                  (possible only when f(0) > top; never for the tent)
    zero_value    utility earned at zero spend (free tie/win when the
                  opponents' top is f(0))
    """

    query_index: int
    cost: Number
    top_is_peak: bool
    tie_count: int
    beats_at_cost: bool
    zero_value: Number


@dataclass(frozen=True)
class DeviationPlan:
    solo_set: frozenset[int]
    tie_set: frozenset[int]
    value: Number
    epsilon: Number


@dataclass(frozen=True)
class BestResponse:
    sup_value: Number
    attained_value: Number
    plan: DeviationPlan


@dataclass(frozen=True)
class WitnessResult:
    strategy: EmphasisVector
    value: Number
    epsilon_used: Number
    plan: DeviationPlan


def thresholds(game: RankingGame, profile: StrategyProfile, player: int) -> tuple[QueryThreshold, ...]:
    """Per-query thresholds for `player` deviating against the others.

    For n = 1 there are no opponents: every query reports cost 0 with
    tie_count 0, meaning the sole player wins everything for free.
    """
    require_valid(game, profile)
    if not 0 <= player < game.n:
        raise DomainError(f"player {player} outside [0, {game.n})")
    f = game.f
    exact = profile.is_exact() and is_exact(*[k for xy in f.knots for k in xy])
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    out = []
    for j in range(game.m):
        opp_scores = [score(game, profile[k], j) for k in range(game.n) if k != player]
        if not opp_scores:
            out.append(
                QueryThreshold(j, cost=zero, top_is_peak=False, tie_count=0,
                               beats_at_cost=True, zero_value=one)
            )
            continue
        top = max(opp_scores)
        tie_count = sum(1 for s in opp_scores if numbers_equal(s, top))
        cost = f.inverse_increasing_geq(top)
        at_cost = f(cost)
        beats = number_less(top, at_cost)
        top_is_peak = numbers_equal(top, f.max_score)
        if numbers_equal(cost, zero):
            zv = one if beats else _tie_share(tie_count, exact)
        else:
            zv = zero
        out.append(
            QueryThreshold(j, cost=cost, top_is_peak=top_is_peak, tie_count=tie_count,
                           beats_at_cost=beats, zero_value=zv)
        )
    return tuple(out)


def _tie_share(tie_count: int, exact: bool) -> Number:
    return Fraction(1, tie_count + 1) if exact else 1.0 / (tie_count + 1)


def _solo_available(th: QueryThreshold) -> bool:
    # beating f(peak) is impossible; anything lower can be beaten from the
    # increasing branch
    return not th.top_is_peak or th.beats_at_cost


def best_response_value(
    game: RankingGame,
    profile: StrategyProfile,
    player: int,
    *,
    method: str = "enumerate",
    allow_greedy_fallback: bool = False,
) -> BestResponse:
    """Supremum and attained optimum over all deviations of one player.

    attained_value is realizable by an explicit strategy (see
    :func:`best_response_witness`); sup_value additionally counts plans
    that exhaust the budget exactly while still needing a strict win
    margin, and so may be approached but not reached.
    """
    ths = thresholds(game, profile, player)
    if game.n == 1:
        exact = profile.is_exact()
        m_val = Fraction(game.m) if exact else float(game.m)
        plan = DeviationPlan(frozenset(range(game.m)), frozenset(), m_val, Fraction(0) if exact else 0.0)
        return BestResponse(sup_value=m_val, attained_value=m_val, plan=plan)
    if method == "greedy":
        return _optimize_greedy(game, ths)
    if game.m > ENUMERATION_LIMIT:
        if allow_greedy_fallback:
            return _optimize_greedy(game, ths)
        raise CapacityError(
            f"m={game.m} exceeds the enumeration limit {ENUMERATION_LIMIT}; "
            "pass allow_greedy_fallback=True for the approximate fast path"
        )
    return _optimize_enumerate(game, ths)


def _plan_roles(ths, subset):
    """Split an invest-subset into (best roles, closed-only roles)."""
    open_solos = []
    closed_solos = []
    ties = []
    for j in subset:
        th = ths[j]
        if th.beats_at_cost:
            closed_solos.append(j)
        elif _solo_available(th):
            open_solos.append(j)
        else:
            ties.append(j)
    return open_solos, closed_solos, ties


def _optimize_enumerate(game: RankingGame, ths) -> BestResponse:
    exact = is_exact(*[t.cost for t in ths])
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    zero_total = sum((t.zero_value for t in ths), zero)

    best_attained = zero_total
    best_plan = DeviationPlan(frozenset(), frozenset(), zero_total, zero)
    best_sup = zero_total

    indices = range(game.m)
    for mask in range(1 << game.m):
        subset = [j for j in indices if mask >> j & 1]
        cost = sum((ths[j].cost for j in subset), zero)
        if cost > one:
            continue
        open_solos, closed_solos, ties = _plan_roles(ths, subset)
        rest = zero_total - sum((ths[j].zero_value for j in subset), zero)

        # every invested query at its best role (solos where beatable)
        value_open = rest + sum(
            (one if _solo_available(ths[j]) else _tie_share(ths[j].tie_count, exact) for j in subset),
            zero,
        )
        # every invested query at a margin-free role
        value_closed = rest + sum(
            (one if ths[j].beats_at_cost else _tie_share(ths[j].tie_count, exact) for j in subset),
            zero,
        )

        if value_open > best_sup:
            best_sup = value_open
        needs_margin = any(
            _solo_available(ths[j]) and not ths[j].beats_at_cost for j in subset
        )
        if not needs_margin or number_less(cost, one):
            if value_open > best_attained:
                best_attained = value_open
                solos = frozenset(j for j in subset if _solo_available(ths[j]))
                best_plan = DeviationPlan(solos, frozenset(subset) - solos, value_open, zero)
        if value_closed > best_attained:
            best_attained = value_closed
            solos = frozenset(closed_solos)
            best_plan = DeviationPlan(solos, frozenset(subset) - solos, value_closed, zero)

    return BestResponse(sup_value=best_sup, attained_value=best_attained, plan=best_plan)


def _optimize_greedy(game: RankingGame, ths) -> BestResponse:
    """Fast path: ascending-cost solo prefixes crossed with tie subsets.

    Mixing a tie into a plan at a query that could be beaten never helps
    when slack exists (same budget, lower value), so ties matter only at
    unbeatable (peak-pinned) queries — enumerated exactly below — or in
    margin-free plans that spend the budget to the last drop, handled by
    the pure-tie pass.  Exact for every instance whose unbeatable-query
    count stays within the subset cap (always, under tent scoring); beyond that the tie fill degrades
    to ascending-cost order and the result is a documented lower bound.
    """
    exact = is_exact(*[t.cost for t in ths])
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    zero_total = sum((t.zero_value for t in ths), zero)

    solo_q = sorted(
        (j for j in range(game.m) if _solo_available(ths[j])),
        key=lambda j: (ths[j].cost, j),
    )
    peak_q = [j for j in range(game.m) if not _solo_available(ths[j])]

    best_attained = zero_total
    best_plan = DeviationPlan(frozenset(), frozenset(), zero_total, zero)
    best_sup = zero_total

    tie_subset_cap = 16
    if len(peak_q) <= tie_subset_cap:
        tie_subsets = [
            list(c) for r in range(len(peak_q) + 1) for c in combinations(peak_q, r)
        ]
    else:
        # degraded fill: take peak ties cheapest-first
        ordered = sorted(peak_q, key=lambda j: (ths[j].cost, j))
        tie_subsets = [ordered[:r] for r in range(len(ordered) + 1)]

    for ties in tie_subsets:
        tie_cost = sum((ths[j].cost for j in ties), zero)
        if tie_cost > one:
            continue
        tie_value = sum((_tie_share(ths[j].tie_count, exact) for j in ties), zero)
        base_rest = zero_total - sum((ths[j].zero_value for j in ties), zero)
        cost = tie_cost
        solo_value = zero
        chosen: list[int] = []
        for k in range(len(solo_q) + 1):
            if k > 0:
                j = solo_q[k - 1]
                cost = cost + ths[j].cost
                solo_value = solo_value + one
                chosen.append(j)
                if cost > one:
                    break
            rest = base_rest - sum((ths[j].zero_value for j in chosen), zero)
            value = tie_value + solo_value + rest
            if value > best_sup:
                best_sup = value
            needs_margin = any(not ths[j].beats_at_cost for j in chosen)
            if needs_margin and not number_less(cost, one):
                continue
            if value > best_attained:
                best_attained = value
                best_plan = DeviationPlan(frozenset(chosen), frozenset(ties), value, zero)

    # margin-free plans may tie even at beatable queries when the budget
    # is spent exactly; sweep closed tie subsets over all priced queries
    priced = [j for j in range(game.m) if not ths[j].beats_at_cost]
    if len(priced) <= tie_subset_cap:
        for r in range(len(priced) + 1):
            for ties in combinations(priced, r):
                cost = sum((ths[j].cost for j in ties), zero)
                if cost > one:
                    continue
                value = (
                    zero_total
                    - sum((ths[j].zero_value for j in ties), zero)
                    + sum((_tie_share(ths[j].tie_count, exact) for j in ties), zero)
                )
                if value > best_attained:
                    best_attained = value
                    best_plan = DeviationPlan(frozenset(), frozenset(ties), value, zero)
                if value > best_sup:
                    best_sup = value

    return BestResponse(sup_value=best_sup, attained_value=best_attained, plan=best_plan)


def best_response_witness(
    game: RankingGame,
    profile: StrategyProfile,
    player: int,
    epsilon: Number = DEFAULT_EPSILON,
    *,
    method: str = "enumerate",
) -> WitnessResult:
    """Concrete strategy achieving the attained best-response value.

    Tie queries get exactly their cost; solo queries get cost plus a
    margin, capped at the peak.  The margin starts from `epsilon` and is
    auto-shrunk to half the remaining budget slack split across the solo
    wins, so the witness always validates.  The achieved utility is
    recomputed through :func:`utilities` and asserted to match.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    br = best_response_value(game, profile, player, method=method)
    if game.n == 1:
        exact = profile.is_exact()
        zero = Fraction(0) if exact else 0.0
        vec = EmphasisVector([zero] * game.m)
        return WitnessResult(vec, br.attained_value, zero, br.plan)

    ths = thresholds(game, profile, player)
    exact = is_exact(*[t.cost for t in ths]) and not isinstance(epsilon, float)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    eps = Fraction(epsilon) if exact and not isinstance(epsilon, Fraction) else epsilon

    plan = br.plan
    open_solos = [
        j for j in sorted(plan.solo_set) if not ths[j].beats_at_cost
    ]
    total_cost = sum((ths[j].cost for j in plan.solo_set | plan.tie_set), zero)

    def build(margin):
        emphases = [zero] * game.m
        for j in plan.tie_set:
            emphases[j] = ths[j].cost
        for j in plan.solo_set:
            if ths[j].beats_at_cost:
                emphases[j] = ths[j].cost
            else:
                bumped = ths[j].cost + margin
                emphases[j] = bumped if bumped < game.peak else game.peak
        return emphases

    if open_solos:
        emphases = build(eps)
        if sum(emphases) > one:
            # requested margin overruns the budget: shrink to half the slack
            eps = (one - total_cost) / (2 * len(open_solos))
            emphases = build(eps)
    else:
        eps = zero
        emphases = build(eps)
    vec = EmphasisVector(emphases)

    achieved = utilities(game, profile.replace(player, vec))[player]
    if not numbers_equal(achieved, br.attained_value):
        raise AssertionError(
            f"witness utility {achieved} does not match attained value {br.attained_value}"
        )
    return WitnessResult(vec, achieved, eps, DeviationPlan(plan.solo_set, plan.tie_set, plan.value, eps))
