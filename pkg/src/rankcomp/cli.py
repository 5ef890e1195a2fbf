"""Command-line interface: one executable, JSON-first output.

Subcommand grammar:

    game      exists | construct | verify | best-response | dynamics | oracle
    features  extract | rbo
    report    win-spread | rbo | trajectories
    simulate  competition
    predict   build | cv | baselines

Every command prints canonical JSON (sorted keys) so identical inputs and
seeds give byte-identical output; ``--format table`` renders the same
structure for humans.  Exit codes: 0 success, 1 domain error, 2 usage
error.  ``RANKCOMP_SEED`` and ``RANKCOMP_JOBS`` provide environment
defaults for the corresponding options.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import best_response as br_mod
from . import dynamics as dyn_mod
from . import equilibria as eq_mod
from . import grid_oracle as oracle_mod
from .competition_log import (
    SynthesisConfig,
    filter_for_prediction,
    load_log,
    report_feature_trajectories,
    report_ranking_agreement,
    report_win_spread,
    save_log,
    synthesize,
)
from .game import (
    RankingGame,
    load_profile,
    profile_to_dict,
    validate_profile,
)
from .numeric import CapacityError, DomainError, number_to_json, parse_number
from .prediction import (
    baselines as run_baselines,
    build_instances,
    build_instances_parallel,
    cross_validate,
    evaluate,
    instances_from_csv,
    instances_to_csv,
    mask_sections,
    normalize_per_query,
)
from .stopwords import DEFAULT_STOPWORDS, load_stopwords
from .text_features import FEATURE_NAMES as TEXT_FEATURE_NAMES
from .text_features import CorpusStats, compute_features, rbo, tokenize


def dump_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def _emit(ctx, data) -> None:
    fmt = ctx.obj.get("format", "json") if ctx.obj else "json"
    if fmt == "table":
        click.echo(_render_table(data))
    else:
        click.echo(dump_json(data))


def _render_table(data, indent: str = "") -> str:
    lines = []
    if isinstance(data, dict):
        for key in sorted(data):
            value = data[key]
            if isinstance(value, (dict, list)):
                lines.append(f"{indent}{key}:")
                lines.append(_render_table(value, indent + "  "))
            else:
                lines.append(f"{indent}{key}: {value}")
    elif isinstance(data, list):
        for item in data:
            if isinstance(item, (dict, list)):
                lines.append(_render_table(item, indent + "  "))
            else:
                lines.append(f"{indent}- {item}")
    else:
        lines.append(f"{indent}{data}")
    return "\n".join(line for line in lines if line)


def _schema_option(schema: dict):
    """Add --schema to a command: print the output schema and exit."""

    def decorator(fn):
        def callback(ctx, param, value):
            if value:
                click.echo(dump_json(schema))
                ctx.exit(0)

        return click.option(
            "--schema",
            is_flag=True,
            expose_value=False,
            is_eager=True,
            callback=callback,
            help="Print a machine-readable schema of this command's output.",
        )(fn)

    return decorator


def _fail(message: str):
    click.echo(dump_json({"error": message}), err=True)
    sys.exit(1)


def _env_seed():
    raw = os.environ.get("RANKCOMP_SEED")
    return int(raw) if raw else None


def _env_jobs():
    raw = os.environ.get("RANKCOMP_JOBS")
    return int(raw) if raw else 1


class _Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (DomainError, CapacityError, FileNotFoundError) as exc:
            _fail(str(exc))


@click.group(cls=_Cli)
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="json")
@click.pass_context
def main(ctx, fmt):
    """Multi-query ranking games and competition analytics."""
    ctx.ensure_object(dict)
    ctx.obj["format"] = fmt


# --------------------------------------------------------------------- game


@main.group()
def game():
    """Equilibria, best responses, dynamics, grid oracle."""


@game.command("exists")
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, required=True)
@click.option("--peak", required=True)
@_schema_option({"exists": "bool", "threshold": "float", "threshold_exact": "str", "regime": "str"})
@click.pass_context
def game_exists(ctx, n, m, peak):
    verdict = eq_mod.exists_equilibrium(n, m, parse_number(peak))
    _emit(
        ctx,
        {
            "exists": verdict.exists,
            "threshold": float(verdict.threshold),
            "threshold_exact": number_to_json(verdict.threshold),
            "regime": verdict.regime,
        },
    )


@game.command("construct")
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, required=True)
@click.option("--peak", required=True)
@click.option("--check", is_flag=True, help="Verify the construction before printing.")
@click.option("--out", type=click.Path(), default=None, help="Also write the profile file.")
@_schema_option({"n": "int", "m": "int", "peak": "float", "strategies": "[[float]]",
                 "strategies_exact": "[[str|int]]", "verified": "bool?"})
@click.pass_context
def game_construct(ctx, n, m, peak, check, out):
    g = RankingGame.tent(n, m, parse_number(peak))
    profile = eq_mod.construct_equilibrium(g)
    data = profile_to_dict(g, profile)
    if check:
        data["verified"] = eq_mod.verify_nash(g, profile).is_nash
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(dump_json(profile_to_dict(g, profile)) + "\n")
    _emit(ctx, data)


def _nash_report_dict(game_obj, report):
    return {
        "is_nash": report.is_nash,
        "per_player": [
            {
                "player": pd.player,
                "current": float(pd.current),
                "current_exact": number_to_json(pd.current),
                "attained": float(pd.attained),
                "attained_exact": number_to_json(pd.attained),
                "improving_witness": (
                    [float(e) for e in pd.improving_witness.emphases]
                    if pd.improving_witness is not None
                    else None
                ),
            }
            for pd in report.per_player
        ],
    }


@game.command("verify")
@click.option("--profile", "profile_path", type=click.Path(exists=True), required=True)
@_schema_option({"is_nash": "bool", "per_player": [{"player": "int", "current": "float",
                 "attained": "float", "improving_witness": "[float]|null"}]})
@click.pass_context
def game_verify(ctx, profile_path):
    g, profile = load_profile(profile_path)
    report = validate_profile(g, profile)
    if not report.ok:
        _fail("invalid profile: " + "; ".join(report.violations))
    _emit(ctx, _nash_report_dict(g, eq_mod.verify_nash(g, profile)))


@game.command("best-response")
@click.option("--profile", "profile_path", type=click.Path(exists=True), required=True)
@click.option("--player", type=int, required=True)
@click.option("--epsilon", default="1/1000")
@_schema_option({"player": "int", "sup_value": "float", "attained_value": "float",
                 "plan": {"solo": "[int]", "tie": "[int]"}, "witness": "[float]",
                 "witness_exact": "[str|int]", "witness_utility": "float", "epsilon_used": "float"})
@click.pass_context
def game_best_response(ctx, profile_path, player, epsilon):
    g, profile = load_profile(profile_path)
    res = br_mod.best_response_value(g, profile, player)
    wit = br_mod.best_response_witness(g, profile, player, parse_number(epsilon))
    _emit(
        ctx,
        {
            "player": player,
            "sup_value": float(res.sup_value),
            "sup_value_exact": number_to_json(res.sup_value),
            "attained_value": float(res.attained_value),
            "attained_value_exact": number_to_json(res.attained_value),
            "plan": {
                "solo": sorted(wit.plan.solo_set),
                "tie": sorted(wit.plan.tie_set),
            },
            "witness": [float(e) for e in wit.strategy.emphases],
            "witness_exact": [number_to_json(e) for e in wit.strategy.emphases],
            "witness_utility": float(wit.value),
            "epsilon_used": float(wit.epsilon_used),
        },
    )


def _trace_line(step):
    return {
        "step": step.index,
        "mover": step.mover,
        "moved": step.moved,
        "value": float(step.value),
        "value_exact": number_to_json(step.value),
        "profile": [[float(e) for e in v.emphases] for v in step.profile.strategies],
        "profile_exact": [
            [number_to_json(e) for e in v.emphases] for v in step.profile.strategies
        ],
    }


def _cycle_dict(cyc):
    if cyc is None:
        return None
    return {
        "first": cyc.first,
        "second": cyc.second,
        "equivalence": cyc.equivalence,
        "player_perm": list(cyc.player_perm) if cyc.player_perm else None,
        "query_perm": list(cyc.query_perm) if cyc.query_perm else None,
    }


@game.command("dynamics")
@click.option("--init", "init_path", type=click.Path(exists=True), default=None,
              help="Profile file: run best-response dynamics from this profile.")
@click.option("--replay", "replay_path", type=click.Path(exists=True), default=None,
              help="Explicit profile sequence to verify and scan for cycles.")
@click.option("--order", type=click.Choice(["round-robin", "random"]), default="round-robin")
@click.option("--seed", type=int, default=None)
@click.option("--max-rounds", type=int, default=100)
@click.option("--epsilon", default="1/1000")
@click.option("--cycle-mode", type=click.Choice(["symmetric", "exact"]), default="symmetric")
@_schema_option({"jsonl": "one step object per line, then an outcome object; replay mode"
                " emits step reports and a cycle object"})
@click.pass_context
def game_dynamics(ctx, init_path, replay_path, order, seed, max_rounds, epsilon, cycle_mode):
    if (init_path is None) == (replay_path is None):
        raise click.UsageError("provide exactly one of --init or --replay")
    if seed is None:
        seed = _env_seed()
    if replay_path:
        with open(replay_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        g = RankingGame.tent(int(data["n"]), int(data["m"]),
                             parse_number(data.get("peak_exact", data["peak"])))
        from .game import StrategyProfile

        profiles = [
            StrategyProfile([[parse_number(e) for e in row] for row in prof])
            for prof in data["profiles"]
        ]
        reports = dyn_mod.verify_trace(g, profiles)
        cyc = dyn_mod.detect_cycle(g, profiles, mode=cycle_mode)
        for rep in reports:
            click.echo(
                dump_json(
                    {
                        "step": rep.index,
                        "mover": rep.mover,
                        "value": float(rep.achieved),
                        "value_exact": number_to_json(rep.achieved),
                        "optimal_value": float(rep.optimal_value),
                        "optimal": rep.optimal,
                    }
                )
            )
        click.echo(dump_json({"cycle": _cycle_dict(cyc), "steps": len(reports)}))
        return
    g, initial = load_profile(init_path)
    trace = dyn_mod.run_dynamics(
        g,
        initial,
        order=order,
        seed=seed,
        max_rounds=max_rounds,
        epsilon=parse_number(epsilon),
        cycle_mode=cycle_mode,
    )
    for step in trace.steps:
        click.echo(dump_json(_trace_line(step)))
    click.echo(
        dump_json(
            {
                "outcome": trace.outcome.kind,
                "round": trace.outcome.round,
                "cycle": _cycle_dict(trace.outcome.cycle),
            }
        )
    )


@game.command("oracle")
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, required=True)
@click.option("--peak", required=True)
@click.option("--grid", "g_res", type=int, required=True)
@click.option("--mode", type=click.Choice(["exact", "grid"]), default="exact")
@click.option("--jobs", type=int, default=None)
@click.option("--budget", type=int, default=oracle_mod.DEFAULT_BUDGET)
@click.option("--no-symmetry", is_flag=True)
@_schema_option({"mode": "str", "profiles_checked": "int", "strategy_count": "int",
                 "equilibria": "[[[float]]]", "equilibria_exact": "[[[str|int]]]",
                 "count": "int", "notes": "[str]"})
@click.pass_context
def game_oracle(ctx, n, m, peak, g_res, mode, jobs, budget, no_symmetry):
    if jobs is None:
        jobs = _env_jobs()
    peak_value = parse_number(peak)
    spec = oracle_mod.GridSpec(
        g=g_res, n=n, m=m, peak=peak_value, budget=budget, symmetry=not no_symmetry
    )
    g = RankingGame.tent(n, m, peak_value)
    result = oracle_mod.grid_nash_search(g, spec, deviation_mode=mode, jobs=jobs)
    _emit(
        ctx,
        {
            "mode": result.mode,
            "profiles_checked": result.profiles_checked,
            "strategy_count": result.strategy_count,
            "count": len(result.equilibria),
            "equilibria": [
                [[float(e) for e in v.emphases] for v in prof.strategies]
                for prof in result.equilibria
            ],
            "equilibria_exact": [
                [[number_to_json(e) for e in v.emphases] for v in prof.strategies]
                for prof in result.equilibria
            ],
            "notes": list(result.notes),
        },
    )


# ----------------------------------------------------------------- features


@main.group()
def features():
    """Per-(document, query) features and ranking similarity."""


@features.command("extract")
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@_schema_option({"rows": "int", "out": "str", "columns": "[str]"})
@click.pass_context
def features_extract(ctx, log_path, out, stopwords_path):
    """One CSV row of the eight features per document x query."""
    import csv

    log = load_log(log_path)
    stops = load_stopwords(stopwords_path) if stopwords_path else DEFAULT_STOPWORDS
    columns = ["topic_id", "round_index", "query_index", "publisher"] + list(TEXT_FEATURE_NAMES)
    rows = 0
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for topic in log.topics:
            for rnd in topic.rounds:
                stats = CorpusStats.from_documents(
                    tokenize(topic.round(r).text_of(pub))
                    for r in range(1, rnd.round_index + 1)
                    for pub in sorted(topic.round(r).documents)
                )
                for q, query_text in enumerate(topic.queries):
                    query = tokenize(query_text)
                    for pub in sorted(rnd.documents):
                        feats = compute_features(
                            tokenize(rnd.text_of(pub)), query, stats, stops
                        )
                        writer.writerow(
                            [topic.topic_id, rnd.round_index, q, pub]
                            + [repr(v) for v in feats.as_tuple()]
                        )
                        rows += 1
    _emit(ctx, {"rows": rows, "out": out, "columns": columns})


@features.command("rbo")
@click.option("--a", "path_a", type=click.Path(exists=True), required=True)
@click.option("--b", "path_b", type=click.Path(exists=True), required=True)
@click.option("--p", "persistence", type=float, default=0.9)
@_schema_option({"rbo": "float", "persistence": "float"})
@click.pass_context
def features_rbo(ctx, path_a, path_b, persistence):
    """RBO between two JSON list files."""
    with open(path_a, "r", encoding="utf-8") as fh:
        a = json.load(fh)
    with open(path_b, "r", encoding="utf-8") as fh:
        b = json.load(fh)
    _emit(ctx, {"rbo": rbo(a, b, persistence), "persistence": persistence})


# ------------------------------------------------------------------- report


@main.group()
def report():
    """Aggregated views over a competition log."""


@report.command("win-spread")
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@_schema_option({"rows": [{"wins": "int", "doc_percent": "float",
                 "mean_nonwon_rank": "float|null"}], "observations": "int"})
@click.pass_context
def report_win_spread_cmd(ctx, log_path):
    data = report_win_spread(load_log(log_path))
    _emit(
        ctx,
        {
            "rows": [
                {
                    "wins": r.wins,
                    "doc_percent": r.doc_percent,
                    "mean_nonwon_rank": r.mean_nonwon_rank,
                }
                for r in data["rows"]
            ],
            "observations": data["observations"],
        },
    )


@report.command("rbo")
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--p", "persistence", type=float, default=0.9)
@_schema_option({"per_round": {"<round>": "float"}, "persistence": "float"})
@click.pass_context
def report_rbo_cmd(ctx, log_path, persistence):
    values = report_ranking_agreement(load_log(log_path), persistence)
    _emit(
        ctx,
        {"per_round": {str(k): v for k, v in values.items()}, "persistence": persistence},
    )


@report.command("trajectories")
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@_schema_option({"per_round": {"<round>": {"winner|loser": {"<feature>": "float"}}}})
@click.pass_context
def report_trajectories_cmd(ctx, log_path, stopwords_path):
    stops = load_stopwords(stopwords_path) if stopwords_path else DEFAULT_STOPWORDS
    data = report_feature_trajectories(load_log(log_path), stops)
    _emit(ctx, {"per_round": {str(k): v for k, v in data.items()}})


# ----------------------------------------------------------------- simulate


@main.group()
def simulate():
    """Synthetic data generation."""


@simulate.command("competition")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@_schema_option({"topics": "int", "rounds": "int", "publishers": "int", "out": "str"})
@click.pass_context
def simulate_competition(ctx, config_path, seed, out):
    if seed is None:
        seed = _env_seed()
    if seed is None:
        raise click.UsageError("--seed is required (or set RANKCOMP_SEED)")
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            config = SynthesisConfig.from_dict(json.load(fh))
    else:
        config = SynthesisConfig()
    log = synthesize(config, seed)
    save_log(out, log)
    _emit(
        ctx,
        {
            "topics": config.topics,
            "rounds": config.rounds,
            "publishers": config.publishers,
            "out": out,
        },
    )


# ------------------------------------------------------------------ predict


@main.group()
def predict():
    """Winner-prediction pipeline."""


@predict.command("build")
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@click.option("--normalize/--no-normalize", default=True,
              help="Apply per-query min-max normalization (default on).")
@click.option("--jobs", type=int, default=None)
@_schema_option({"instances": "int", "groups": "int", "out": "str"})
@click.pass_context
def predict_build(ctx, log_path, out, stopwords_path, normalize, jobs):
    if jobs is None:
        jobs = _env_jobs()
    log = load_log(log_path)
    stops = load_stopwords(stopwords_path) if stopwords_path else DEFAULT_STOPWORDS
    insts = build_instances_parallel(log, filter_for_prediction(log), stops, jobs=jobs)
    if normalize:
        insts = normalize_per_query(insts)
    instances_to_csv(out, insts)
    groups = len({inst.group_key for inst in insts})
    _emit(ctx, {"instances": len(insts), "groups": groups, "out": out})


@predict.command("cv")
@click.option("--instances", "instances_path", type=click.Path(exists=True), required=True)
@click.option("--params", default="1,10,50,100")
@click.option("--seed", type=int, default=None)
@click.option("--sections", default=None,
              help="Comma-separated feature sections to keep (ablation).")
@_schema_option({"folds": [{"test_round": "int", "selected_param": "float", "acc": "float",
                 "f1": "float"}], "mean_acc": "float", "mean_f1": "float"})
@click.pass_context
def predict_cv(ctx, instances_path, params, seed, sections):
    if seed is None:
        seed = _env_seed() or 0
    insts = instances_from_csv(instances_path)
    if sections:
        insts = mask_sections(insts, [s.strip() for s in sections.split(",") if s.strip()])
    grid = tuple(float(v) for v in params.split(","))
    report = cross_validate(insts, grid, seed=seed)
    _emit(
        ctx,
        {
            "folds": [
                {
                    "test_round": f.test_round,
                    "selected_param": f.selected_param,
                    "acc": f.acc,
                    "f1": f.f1,
                }
                for f in report.folds
            ],
            "mean_acc": report.mean_acc,
            "mean_f1": report.mean_f1,
            "params": list(report.params),
        },
    )


@predict.command("baselines")
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@_schema_option({"<baseline>": {"acc": "float", "f1": "float"}})
@click.pass_context
def predict_baselines(ctx, log_path, seed, stopwords_path):
    if seed is None:
        seed = _env_seed()
    if seed is None:
        raise click.UsageError("--seed is required (or set RANKCOMP_SEED)")
    log = load_log(log_path)
    stops = load_stopwords(stopwords_path) if stopwords_path else DEFAULT_STOPWORDS
    insts = normalize_per_query(build_instances(log, filter_for_prediction(log), stops))
    results = {}
    for name, preds in run_baselines(log, insts, seed).items():
        acc, f1 = evaluate(preds)
        results[name] = {"acc": acc, "f1": f1}
    _emit(ctx, results)


if __name__ == "__main__":
    main()
