"""Next-round-winner prediction over competition logs.

Each candidate document (a publisher not ranked first for the query in
the previous round) becomes a 27-dimensional instance:

* Micro (12): unique-term additions/deletions between the candidate's
  previous and current documents, split by whether the terms appear in
  the previous winner's document, for three term groups (query terms,
  stopwords, everything else)
* Macro (3): tf.idf cosines among current doc, previous doc, previous
  winner
* TopicMacro (2): cosines of current/previous doc to the centroid of the
  previous round's per-query winners
* TopicRank (3): min/median/max of the previous doc's ranks across the
  topic's queries
* QueryRank (3): indicators that min/median/max equals this query's rank
* PrevChange (3): min/median/max of per-query scaled rank improvements
  between the two previous rounds
* Len (1): current document's token count

Labels mark the document that actually won the query.  The evaluation
protocol is leave-one-round-out cross-validation with an inner
leave-one-round-out pass for picking the regularization parameter by
accuracy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .competition_log import CompetitionLog, PredictionTriple, filter_for_prediction
from .logreg import LinearModel, train_lreg
from .numeric import DomainError
from .stopwords import DEFAULT_STOPWORDS
from .text_features import CorpusStats, cosine, tfidf_vector, tokenize

SECTION_LAYOUT = (
    ("micro", 12),
    ("macro", 3),
    ("topic_macro", 2),
    ("topic_rank", 3),
    ("query_rank", 3),
    ("prev_change", 3),
    ("len", 1),
)

FEATURE_DIM = sum(width for _, width in SECTION_LAYOUT)  # 27


def section_slices() -> dict[str, slice]:
    out = {}
    offset = 0
    for name, width in SECTION_LAYOUT:
        out[name] = slice(offset, offset + width)
        offset += width
    return out


_MICRO_GROUPS = ("query", "stop", "other")
_MICRO_KINDS = ("add_w", "rmv_w", "add_nw", "rmv_nw")

FEATURE_NAMES: tuple[str, ...] = tuple(
    [f"micro_{g}_{k}" for g in _MICRO_GROUPS for k in _MICRO_KINDS]
    + ["macro_sim_now_prev", "macro_sim_now_winner", "macro_sim_prev_winner"]
    + ["topicmacro_sim_now_centroid", "topicmacro_sim_prev_centroid"]
    + ["topicrank_min", "topicrank_median", "topicrank_max"]
    + ["queryrank_is_min", "queryrank_is_median", "queryrank_is_max"]
    + ["prevchange_min", "prevchange_median", "prevchange_max"]
    + ["len"]
)

assert len(FEATURE_NAMES) == FEATURE_DIM


@dataclass(frozen=True)
class PredictionInstance:
    topic_id: str
    query_index: int
    round_index: int
    publisher: str
    features: tuple[float, ...]
    label: bool

    @property
    def group_key(self) -> tuple[str, int, int]:
        return (self.topic_id, self.query_index, self.round_index)


def _lower_median(values: Sequence[float]) -> float:
    """Median with the lower element for even counts (m = 3 never hits it)."""
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def _scaled_rank_change(r_prev2: int, r_prev1: int) -> float:
    """(r_{l-2} - r_{l-1}) / (r_{l-2} - 1); zero when already at rank 1."""
    if r_prev2 == 1:
        return 0.0
    return (r_prev2 - r_prev1) / (r_prev2 - 1)


def _micro_counts(
    now_terms: frozenset[str],
    prev_terms: frozenset[str],
    winner_terms: frozenset[str],
    group_terms: frozenset[str],
) -> tuple[float, float, float, float]:
    added = (now_terms - prev_terms) & group_terms
    removed = (prev_terms - now_terms) & group_terms
    return (
        float(len(added & winner_terms)),
        float(len(removed & winner_terms)),
        float(len(added - winner_terms)),
        float(len(removed - winner_terms)),
    )


def build_instances(
    log: CompetitionLog,
    triples: Optional[Iterable[PredictionTriple]] = None,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> list[PredictionInstance]:
    """Feature vectors for every candidate of every eligible triple.

    Candidates for (topic, query, l) are the publishers not ranked first
    for that query at round l-1.  Background statistics for the tf.idf
    vectors cover all of the topic's documents up to and including round
    l, keeping the pipeline self-contained.
    """
    if triples is None:
        triples = filter_for_prediction(log)
    out: list[PredictionInstance] = []
    stats_cache: dict[tuple[str, int], CorpusStats] = {}

    for triple in triples:
        topic = log.topic(triple.topic_id)
        l = triple.round_index
        if l < 3 or l > len(topic.rounds):
            continue
        now = topic.round(l)
        prev = topic.round(l - 1)
        prev2 = topic.round(l - 2)
        q = triple.query_index
        m = len(topic.queries)

        key = (topic.topic_id, l)
        stats = stats_cache.get(key)
        if stats is None:
            stats = CorpusStats.from_documents(
                tokenize(topic.round(r).text_of(pub))
                for r in range(1, l + 1)
                for pub in sorted(topic.round(r).documents)
            )
            stats_cache[key] = stats

        query_doc = tokenize(topic.queries[q])
        query_terms = frozenset(query_doc.tokens)
        stop_terms = frozenset(stopwords) - query_terms  # query terms take precedence
        winner_prev = prev.winner(q)
        winner_doc = tokenize(prev.text_of(winner_prev))
        winner_terms = frozenset(winner_doc.term_counts)
        winner_vec = tfidf_vector(winner_doc, stats)

        # centroid of the previous round's distinct winning documents
        distinct_winners = sorted({prev.winner(j) for j in range(m)})
        centroid: dict[str, float] = {}
        for pub in distinct_winners:
            vec = tfidf_vector(tokenize(prev.text_of(pub)), stats)
            for t, v in vec.items():
                centroid[t] = centroid.get(t, 0.0) + v
        centroid = {t: v / len(distinct_winners) for t, v in centroid.items()}

        candidates = [pub for pub in prev.rankings[q] if pub != winner_prev]
        for pub in candidates:
            doc_now = tokenize(now.text_of(pub))
            doc_prev = tokenize(prev.text_of(pub))
            now_terms = frozenset(doc_now.term_counts)
            prev_terms = frozenset(doc_prev.term_counts)
            all_terms = now_terms | prev_terms | winner_terms
            other_terms = all_terms - query_terms - stop_terms

            micro: list[float] = []
            for group in (query_terms, stop_terms, other_terms):
                micro.extend(_micro_counts(now_terms, prev_terms, winner_terms, group))

            now_vec = tfidf_vector(doc_now, stats)
            prev_vec = tfidf_vector(doc_prev, stats)
            macro = [
                cosine(now_vec, prev_vec),
                cosine(now_vec, winner_vec),
                cosine(prev_vec, winner_vec),
            ]
            topic_macro = [cosine(now_vec, centroid), cosine(prev_vec, centroid)]

            prev_ranks = [prev.rank_of(pub, j) for j in range(m)]
            tr_min = float(min(prev_ranks))
            tr_med = float(_lower_median(prev_ranks))
            tr_max = float(max(prev_ranks))
            own_rank = float(prev.rank_of(pub, q))
            query_rank = [
                1.0 if tr_min == own_rank else 0.0,
                1.0 if tr_med == own_rank else 0.0,
                1.0 if tr_max == own_rank else 0.0,
            ]
            changes = [
                _scaled_rank_change(prev2.rank_of(pub, j), prev.rank_of(pub, j))
                for j in range(m)
            ]
            prev_change = [min(changes), _lower_median(changes), max(changes)]

            features = tuple(
                micro
                + macro
                + topic_macro
                + [tr_min, tr_med, tr_max]
                + query_rank
                + prev_change
                + [float(doc_now.length)]
            )
            out.append(
                PredictionInstance(
                    topic_id=topic.topic_id,
                    query_index=q,
                    round_index=l,
                    publisher=pub,
                    features=features,
                    label=now.winner(q) == pub,
                )
            )
    return out


def build_instances_parallel(
    log: CompetitionLog,
    triples: Optional[Iterable[PredictionTriple]] = None,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
    jobs: int = 1,
) -> list[PredictionInstance]:
    """build_instances with topics partitioned across worker processes.

    Output order matches the serial builder (triples grouped by topic in
    input order), so results are identical for any job count.
    """
    if triples is None:
        triples = filter_for_prediction(log)
    triples = list(triples)
    if jobs <= 1:
        return build_instances(log, triples, stopwords)
    from concurrent.futures import ProcessPoolExecutor

    by_topic: dict[str, list[PredictionTriple]] = {}
    for t in triples:
        by_topic.setdefault(t.topic_id, []).append(t)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(build_instances, log, chunk, stopwords)
            for chunk in by_topic.values()
        ]
        out: list[PredictionInstance] = []
        for fut in futures:
            out.extend(fut.result())
    return out


def normalize_per_query(instances: Sequence[PredictionInstance]) -> list[PredictionInstance]:
    """Min-max scale each feature within its (topic, query, round) group.

    Constant features map to zero; labels are untouched.  Idempotent.
    """
    groups: dict[tuple, list[PredictionInstance]] = {}
    for inst in instances:
        groups.setdefault(inst.group_key, []).append(inst)
    out = []
    for members in groups.values():
        cols = list(zip(*(inst.features for inst in members)))
        lo = [min(col) for col in cols]
        hi = [max(col) for col in cols]
        for inst in members:
            feats = tuple(
                (v - l) / (h - l) if h > l else 0.0
                for v, l, h in zip(inst.features, lo, hi)
            )
            out.append(replace(inst, features=feats))
    return out


def mask_sections(
    instances: Sequence[PredictionInstance], keep: Sequence[str]
) -> list[PredictionInstance]:
    """Zero-out every feature section not named in `keep` (ablation aid)."""
    slices = section_slices()
    unknown = set(keep) - set(slices)
    if unknown:
        raise DomainError(f"unknown feature sections: {sorted(unknown)}")
    keep_idx = set()
    for name in keep:
        keep_idx.update(range(slices[name].start, slices[name].stop))
    out = []
    for inst in instances:
        feats = tuple(v if i in keep_idx else 0.0 for i, v in enumerate(inst.features))
        out.append(replace(inst, features=feats))
    return out


# --- prediction and baselines ------------------------------------------------


def predict_winner(model: LinearModel, group: Sequence[PredictionInstance]) -> str:
    """Highest decision score wins; ties go to the lowest publisher id."""
    if not group:
        raise DomainError("empty candidate group")
    X = np.array([inst.features for inst in group], dtype=np.float64)
    scores = model.decision_scores(X)
    best = min(range(len(group)), key=lambda i: (-scores[i], group[i].publisher))
    return group[best].publisher


@dataclass(frozen=True)
class GroupPrediction:
    group_key: tuple
    predicted_positive: frozenset[str]
    winner: str
    candidates: tuple[str, ...]


def _group_instances(
    instances: Sequence[PredictionInstance],
) -> dict[tuple, list[PredictionInstance]]:
    groups: dict[tuple, list[PredictionInstance]] = {}
    for inst in instances:
        groups.setdefault(inst.group_key, []).append(inst)
    return groups


def _winner_of(group: Sequence[PredictionInstance]) -> str:
    winners = [inst.publisher for inst in group if inst.label]
    if len(winners) != 1:
        raise DomainError(
            f"group {group[0].group_key} has {len(winners)} positive labels, expected 1"
        )
    return winners[0]


BASELINE_NAMES = ("rand", "qmaj", "tmaj", "allw", "alll")


def baselines(
    log: CompetitionLog,
    instances: Sequence[PredictionInstance],
    seed: int,
) -> dict[str, list[GroupPrediction]]:
    """The five reference predictors over the same candidate groups.

    rand picks uniformly; qmaj/tmaj pick the candidate with most past wins
    for the query / for all the topic's queries (ties broken randomly);
    allw marks every candidate a winner, alll none.
    """
    rng = random.Random(seed)
    groups = _group_instances(instances)
    out: dict[str, list[GroupPrediction]] = {name: [] for name in BASELINE_NAMES}
    for key in sorted(groups):
        members = groups[key]
        topic_id, q, l = key
        topic = log.topic(topic_id)
        candidates = tuple(inst.publisher for inst in members)
        winner = _winner_of(members)

        def past_wins(pub: str, queries: Sequence[int]) -> int:
            return sum(
                1
                for r in range(1, l)
                for j in queries
                if topic.round(r).winner(j) == pub
            )

        def majority(queries: Sequence[int]) -> str:
            wins = {pub: past_wins(pub, queries) for pub in candidates}
            top = max(wins.values())
            tied = [pub for pub in candidates if wins[pub] == top]
            return rng.choice(tied)

        out["rand"].append(
            GroupPrediction(key, frozenset([rng.choice(candidates)]), winner, candidates)
        )
        out["qmaj"].append(
            GroupPrediction(key, frozenset([majority([q])]), winner, candidates)
        )
        out["tmaj"].append(
            GroupPrediction(
                key, frozenset([majority(range(len(topic.queries)))]), winner, candidates
            )
        )
        out["allw"].append(GroupPrediction(key, frozenset(candidates), winner, candidates))
        out["alll"].append(GroupPrediction(key, frozenset(), winner, candidates))
    return out


def model_predictions(
    model: LinearModel, instances: Sequence[PredictionInstance]
) -> list[GroupPrediction]:
    groups = _group_instances(instances)
    out = []
    for key in sorted(groups):
        members = groups[key]
        out.append(
            GroupPrediction(
                key,
                frozenset([predict_winner(model, members)]),
                _winner_of(members),
                tuple(inst.publisher for inst in members),
            )
        )
    return out


def evaluate(predictions: Sequence[GroupPrediction]) -> tuple[float, float]:
    """(accuracy, F1) macro-averaged over candidate groups.

    Per group, every candidate is classified winner/loser; accuracy is
    the fraction classified correctly.  Precision/recall target the
    winner class, and a group that predicts no winners scores F1 = 0.
    """
    if not predictions:
        raise DomainError("nothing to evaluate")
    accs = []
    f1s = []
    for gp in predictions:
        k = len(gp.candidates)
        tp = 1 if gp.winner in gp.predicted_positive else 0
        n_pos = len(gp.predicted_positive)
        correct = k - n_pos - 1 + 2 * tp
        accs.append(correct / k)
        if n_pos == 0 or tp == 0:
            f1s.append(0.0)
        else:
            precision = tp / n_pos
            recall = tp / 1.0
            f1s.append(2 * precision * recall / (precision + recall))
    return sum(accs) / len(accs), sum(f1s) / len(f1s)


# --- cross-validation ---------------------------------------------------------


@dataclass(frozen=True)
class FoldReport:
    test_round: int
    selected_param: float
    acc: float
    f1: float


@dataclass(frozen=True)
class CvReport:
    folds: tuple[FoldReport, ...]
    mean_acc: float
    mean_f1: float
    params: tuple[float, ...]


def _fit_on(instances: Sequence[PredictionInstance], param: float, seed: int) -> LinearModel:
    X = np.array([inst.features for inst in instances], dtype=np.float64)
    y = np.array([1.0 if inst.label else 0.0 for inst in instances])
    return train_lreg(X, y, param, seed=seed)


def cross_validate(
    instances: Sequence[PredictionInstance],
    params: Sequence[float] = (1.0, 10.0, 50.0, 100.0),
    seed: int = 0,
) -> CvReport:
    """Leave-one-round-out evaluation with nested parameter selection.

    The outer loop holds out each round; the inner loop leave-one-round-
    out-validates every parameter on the remaining rounds and keeps the
    one with the best mean accuracy (earliest grid entry on ties).  The
    winning parameter is refit on all non-test rounds and scored on the
    held-out round.
    """
    rounds = sorted({inst.round_index for inst in instances})
    if len(rounds) < 3:
        raise DomainError(f"cross-validation needs >= 3 rounds, got {len(rounds)}")
    by_round: dict[int, list[PredictionInstance]] = {r: [] for r in rounds}
    for inst in instances:
        by_round[inst.round_index].append(inst)

    folds = []
    for test_round in rounds:
        train_rounds = [r for r in rounds if r != test_round]
        mean_acc_per_param = []
        for param in params:
            accs = []
            for val_round in train_rounds:
                fit_rounds = [r for r in train_rounds if r != val_round]
                fit_insts = [i for r in fit_rounds for i in by_round[r]]
                val_insts = by_round[val_round]
                if not val_insts or not _has_both_classes(fit_insts):
                    continue
                model = _fit_on(fit_insts, param, seed)
                acc, _ = evaluate(model_predictions(model, val_insts))
                accs.append(acc)
            mean_acc_per_param.append(sum(accs) / len(accs) if accs else 0.0)
        best_idx = max(range(len(params)), key=lambda i: (mean_acc_per_param[i], -i))
        best_param = params[best_idx]
        fit_insts = [i for r in train_rounds for i in by_round[r]]
        model = _fit_on(fit_insts, best_param, seed)
        acc, f1 = evaluate(model_predictions(model, by_round[test_round]))
        folds.append(FoldReport(test_round, best_param, acc, f1))

    return CvReport(
        folds=tuple(folds),
        mean_acc=sum(f.acc for f in folds) / len(folds),
        mean_f1=sum(f.f1 for f in folds) / len(folds),
        params=tuple(params),
    )


def _has_both_classes(instances: Sequence[PredictionInstance]) -> bool:
    labels = {inst.label for inst in instances}
    return labels == {True, False}


# --- CSV I/O ------------------------------------------------------------------

CSV_ID_COLUMNS = ("topic_id", "query_index", "round_index", "publisher")


def instances_to_csv(path, instances: Sequence[PredictionInstance]) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(CSV_ID_COLUMNS) + list(FEATURE_NAMES) + ["label"])
        for inst in instances:
            writer.writerow(
                [inst.topic_id, inst.query_index, inst.round_index, inst.publisher]
                + [repr(v) for v in inst.features]
                + [int(inst.label)]
            )


def instances_from_csv(path) -> list[PredictionInstance]:
    import csv

    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = list(CSV_ID_COLUMNS) + list(FEATURE_NAMES) + ["label"]
        if header != expected:
            raise DomainError("instance CSV header does not match the 27-feature layout")
        for row in reader:
            out.append(
                PredictionInstance(
                    topic_id=row[0],
                    query_index=int(row[1]),
                    round_index=int(row[2]),
                    publisher=row[3],
                    features=tuple(float(v) for v in row[4 : 4 + FEATURE_DIM]),
                    label=row[-1] == "1",
                )
            )
    return out
