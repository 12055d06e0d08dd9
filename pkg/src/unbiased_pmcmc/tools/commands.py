"""
Command implementations behind the CLI subcommands.

Each command takes a validated RunConfig, writes its output files and
returns a JSON-friendly summary; ``partial`` in the summary marks runs cut
short by the time budget.
"""

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import RunConfig
from ..models.data_models import CoupledRun, EstimateReport, TemperingSchedule
from ..models.error_handling import (
    ConfigurationError,
    DomainError,
    IncompleteRunError,
)
from ..samplers.adaptation import adapt
from ..samplers.estimator import (
    MIN_IACT_LENGTH,
    aggregate,
    choose_k,
    h_bar_k_l,
    iact,
    variance_time_curve,
)
from ..samplers.rng import RngStream
from ..samplers.smc import smc_estimate
from ..targets.base import Model
from ..targets.ggm import (
    GGMModel,
    edge_list,
    ggm_synthetic,
    median_probability_graph,
    run_ggm_chain,
)
from ..targets.registry import build_model
from . import io
from .runner import (
    ADAPT_STREAM,
    CHAIN_STREAM,
    SMC_STREAM,
    ReplicateSettings,
    run_replicates,
)

logger = logging.getLogger(__name__)

TAU_QUANTILES = (0.25, 0.5, 0.75, 0.9)


def _model(config: RunConfig) -> Model:
    return build_model(config.model.name, config.model.params, config.model.data)


def _load_schedule(config: RunConfig, path: Optional[str]) -> TemperingSchedule:
    schedule = io.read_schedule(path or config.outputs.resolve("schedule"))
    if schedule.model and schedule.model != config.model.name:
        raise ConfigurationError(
            f"schedule was adapted for model '{schedule.model}', "
            f"configuration names '{config.model.name}'"
        )
    return schedule


def cmd_adapt(config: RunConfig) -> Dict[str, Any]:
    """
    Build the tempering schedule and write the schedule JSON.

    Args:
        config: run configuration

    Returns:
        Summary of S, alpha_0 and the MCMC moves per stage
    """
    model = _model(config)
    schedule = adapt(
        model,
        config.adaptation.to_config(),
        RngStream(config.seed).child(ADAPT_STREAM),
        seed=config.seed,
    )
    path = io.write_schedule(schedule, config.outputs.resolve("schedule"))
    counts = schedule.mcmc_counts
    return {
        "schedule": str(path),
        "S": schedule.n_stages,
        "alpha0": schedule.alpha0,
        "m_total": sum(counts),
        "m_min": min(counts) if counts else None,
        "m_max": max(counts) if counts else None,
    }


def tau_summary(runs: Sequence[CoupledRun]) -> Dict[str, Any]:
    """Meeting-time summary over the completed runs."""
    taus = np.array([run.tau for run in runs if run.completed], dtype=int)
    summary: Dict[str, Any] = {
        "completed": int(taus.size),
        "incomplete": len(runs) - int(taus.size),
    }
    if taus.size == 0:
        return summary
    values, counts = np.unique(taus, return_counts=True)
    summary.update(
        {
            "tau_min": int(taus.min()),
            "tau_max": int(taus.max()),
            "tau_mean": float(taus.mean()),
            "tau_quantiles": {
                str(q): float(np.quantile(taus, q)) for q in TAU_QUANTILES
            },
            "tau_histogram": {str(v): int(c) for v, c in zip(values, counts)},
            "tau_equal_one": int(np.sum(taus == 1)),
        }
    )
    return summary


def cmd_run(config: RunConfig, schedule_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Run R coupled particle MCMC replicates in parallel and write the run store.

    Args:
        config: run configuration
        schedule_path: schedule file; defaults to the configured output path

    Returns:
        Meeting-time summary; partial is True when a replicate did not finish
    """
    model = _model(config)
    schedule = _load_schedule(config, schedule_path)
    settings = ReplicateSettings(
        n_particles=config.N,
        rho=config.rho,
        l=config.l,
        gamma=config.gamma,
        time_budget=config.time_budget_seconds,
        max_iterations=config.max_iterations,
    )
    runs = run_replicates(
        model, schedule, settings, config.replicates, config.seed, config.workers
    )
    path = io.write_run_store(runs, config.outputs.resolve("runs"))
    summary = tau_summary(runs)
    summary.update({"runs": str(path), "partial": summary["incomplete"] > 0})
    return summary


def _completed(runs: Sequence[CoupledRun]) -> List[CoupledRun]:
    completed = [run for run in runs if run.completed]
    if not completed:
        raise IncompleteRunError(
            f"none of the {len(runs)} stored run(s) completed; nothing to estimate"
        )
    return completed


def estimation_window(
    config: RunConfig, completed: Sequence[CoupledRun]
) -> Tuple[int, int]:
    """(k, l) for the time-averaged estimator.

    ``k = "auto"`` takes a high quantile of the meeting times; k is capped by
    l, and l by the shortest stored run.
    """
    shortest = min(run.T for run in completed)
    l = config.l
    if l > shortest:
        logger.warning(f"l={l} exceeds the shortest stored run; using l={shortest}")
        l = shortest
    if config.k == "auto":
        k = choose_k([run.tau for run in completed])
    else:
        k = int(config.k)
    if k > l:
        logger.warning(f"k={k} exceeds l={l}; using k=l")
        k = l
    return k, l


def _statistic_indices(config: RunConfig, names: Sequence[str]) -> List[int]:
    if config.statistic is None:
        return list(range(len(names)))
    if config.statistic not in names:
        raise ConfigurationError(
            f"unknown statistic '{config.statistic}'; stored: {', '.join(names)}"
        )
    return [list(names).index(config.statistic)]


def _statistic_names(run: CoupledRun) -> List[str]:
    return run.statistic_names or [f"h{j}" for j in range(run.n_statistics)]


def estimate_reports(
    runs: Sequence[CoupledRun], config: RunConfig
) -> Tuple[List[EstimateReport], int, int]:
    completed = _completed(runs)
    k, l = estimation_window(config, completed)
    names = _statistic_names(completed[0])
    reports = []
    for j in _statistic_indices(config, names):
        values = [h_bar_k_l(run, j, k, l) for run in completed]
        reports.append(
            aggregate(
                values,
                confidence=config.confidence,
                k=k,
                l=l,
                statistic=names[j],
                r_incomplete=len(runs) - len(completed),
                allow_single=True,
            )
        )
    return reports, k, l


def _write_edge_table(
    reports: Sequence[EstimateReport], model: GGMModel, config: RunConfig
) -> Dict[str, Any]:
    by_name = {report.statistic: report for report in reports}
    edges = edge_list(model.p)
    names = model.estimand_names()
    if any(name not in by_name for name in names):
        return {}
    probabilities = [by_name[name].estimate for name in names]
    std_errors = [by_name[name].std_error for name in names]
    path = io.write_edge_probabilities(
        edges, probabilities, std_errors, config.outputs.resolve("edges")
    )
    median_graph = median_probability_graph(model.p, np.array(probabilities))
    graph_path = path.with_name(path.stem + "_median_graph.csv")
    io.write_matrix_csv(median_graph.adjacency.astype(int), str(graph_path), "%d")
    return {"edges": str(path), "median_graph": str(graph_path)}


def cmd_estimate(
    config: RunConfig, runs_path: Optional[str] = None
) -> Dict[str, Any]:
    """
    Unbiased estimates and confidence intervals from the run store.

    Args:
        config: run configuration
        runs_path: run store; defaults to the configured output path

    Returns:
        Estimate reports and output file paths
    """
    runs = io.read_run_store(runs_path or config.outputs.resolve("runs"))
    reports, k, l = estimate_reports(runs, config)
    report_path = io.write_reports(reports, config.outputs.resolve("report"))
    completed = [run for run in runs if run.completed]
    statistic_index = _statistic_indices(config, _statistic_names(completed[0]))[0]
    curve = variance_time_curve(
        completed, statistic_index, config.l_grid or [l], config.k_grid
    )
    curve_path = io.write_curve(curve, config.outputs.resolve("curve"))
    summary: Dict[str, Any] = {
        "report": str(report_path),
        "curve": str(curve_path),
        "k": k,
        "l": l,
        "R_used": len(completed),
        "R_incomplete": len(runs) - len(completed),
        "estimates": {r.statistic: r.estimate for r in reports},
    }
    if config.model.name == GGMModel.name:
        model = _model(config)
        if isinstance(model, GGMModel):
            summary.update(_write_edge_table(reports, model, config))
    return summary


def iact_per_run(
    runs: Sequence[CoupledRun], statistic_index: int, l: int
) -> List[Optional[float]]:
    """IACT of each completed run's H series over t >= ceil(l / 2)."""
    start = math.ceil(l / 2)
    values: List[Optional[float]] = []
    for run in runs:
        series = run.H[start - 1 :, statistic_index]
        try:
            values.append(iact(series).value)
        except DomainError:
            values.append(None)
    return values


def cmd_diagnose(
    config: RunConfig, runs_path: Optional[str] = None
) -> Dict[str, Any]:
    """
    Meeting times, IACT and the variance x time curve.

    Args:
        config: run configuration
        runs_path: run store

    Returns:
        Diagnostics summary; also writes the diagnostics JSON and the curve CSV
    """
    runs = io.read_run_store(runs_path or config.outputs.resolve("runs"))
    completed = _completed(runs)
    names = _statistic_names(completed[0])
    j = _statistic_indices(config, names)[0]
    l = min(config.l, min(run.T for run in completed))
    start = math.ceil(l / 2)
    long_enough = [run for run in completed if run.T - start + 1 >= MIN_IACT_LENGTH]
    iacts = iact_per_run(long_enough, j, l)
    finite = [v for v in iacts if v is not None]
    curve = variance_time_curve(
        completed, j, config.l_grid or [l], config.k_grid
    )
    diagnostics = {
        "statistic": names[j],
        "meeting_times": tau_summary(runs),
        "log_tau": [math.log(run.tau) for run in completed],
        "iact": {
            "per_run": iacts,
            "mean": float(np.mean(finite)) if finite else None,
        },
        "variance_time": [
            dict(zip(row.header(), row.to_row())) for row in curve
        ],
    }
    path = io.write_json(diagnostics, config.outputs.resolve("diagnostics"))
    curve_path = io.write_curve(curve, config.outputs.resolve("curve"))
    summary = dict(diagnostics["meeting_times"])
    summary.update(
        {
            "diagnostics": str(path),
            "curve": str(curve_path),
            "iact_mean": diagnostics["iact"]["mean"],
        }
    )
    return summary


def cmd_synth_ggm(config: RunConfig) -> Dict[str, Any]:
    """
    Write synthetic GGM data: Y, the true adjacency and the precision matrix.

    Args:
        config: run configuration; model.params gives p, n, sparsity,
            data_seed and delta

    Returns:
        Output file paths and the edge count of the true graph
    """
    params = config.model.params
    Y, graph, K = ggm_synthetic(
        p=int(params.get("p", 5)),
        n=int(params.get("n", 50)),
        sparsity=float(params.get("sparsity", 0.3)),
        seed=int(params.get("data_seed", config.seed)),
        delta=float(params.get("delta", 3.0)),
    )
    out_dir = Path(config.outputs.out_dir).expanduser()
    y_path = io.write_matrix_csv(Y, str(out_dir / "ggm_Y.csv"))
    g_path = io.write_matrix_csv(
        graph.adjacency.astype(int), str(out_dir / "ggm_graph.csv"), "%d"
    )
    k_path = io.write_matrix_csv(K, str(out_dir / "ggm_K.csv"))
    return {
        "Y": str(y_path),
        "graph": str(g_path),
        "K": str(k_path),
        "n_edges": graph.n_edges,
    }


def cmd_smc(config: RunConfig, schedule_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Posterior estimates from one large SMC run.

    Args:
        config: run configuration; the particle count is smc_particles
        schedule_path: schedule file

    Returns:
        Posterior means, the log Z estimate and the final ESS
    """
    model = _model(config)
    schedule = _load_schedule(config, schedule_path)
    result = smc_estimate(
        model,
        schedule,
        config.smc_particles,
        config.gamma,
        RngStream(config.seed).child(SMC_STREAM),
    )
    summary = result.to_dict()
    summary["report"] = str(io.write_json(summary, config.outputs.resolve("report")))
    if config.outputs.trace is not None:
        summary["trace"] = str(
            io.write_trace(result.trace, config.outputs.resolve("trace"))
        )
    return summary


def cmd_ggm_chain(config: RunConfig) -> Dict[str, Any]:
    """
    Run the untempered single GGM chain for edge inclusion frequencies.

    Args:
        config: run configuration; chain_steps steps after chain_burn_in burn-in

    Returns:
        Acceptance rate and the edge frequency file path
    """
    model = _model(config)
    if not isinstance(model, GGMModel):
        raise ConfigurationError("ggm-chain requires model.name = 'ggm'")
    result = run_ggm_chain(
        model,
        config.chain_steps,
        RngStream(config.seed).child(CHAIN_STREAM),
        burn_in=config.chain_burn_in,
    )
    edges = edge_list(model.p)
    path = io.write_edge_probabilities(
        edges,
        result.edge_frequencies.tolist(),
        [None] * len(edges),
        config.outputs.resolve("edges"),
    )
    return {
        "edges": str(path),
        "acceptance_rate": result.acceptance_rate,
        "n_steps": result.n_steps,
        "burn_in": result.burn_in,
    }
