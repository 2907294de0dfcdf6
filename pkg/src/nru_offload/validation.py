"""Analytical-versus-oracle checks run by ``nru-offload validate``."""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from .cache import ContentionCache
from .chanstat import (
    Region,
    StateParams,
    mean_spectral_efficiency,
    sinr_cdf_closed_form,
    sinr_cdf_no_fading,
    sinr_cdf_with_fading,
)
from .config import ScenarioConfig
from .geometry import PropagationState, height_difference, mean_blockage_probability
from .lbt import (
    balance_residual,
    retry_distribution,
    solve_contention,
    transmission_probability,
    transmission_probability_closed_form,
)
from .oracle import (
    SimControl,
    chi_square_pvalue,
    erlang_b,
    exact_backoff_chain,
    exact_ctmc_resq,
    mc_demand_mean,
    mc_mean_blockage,
    mc_mean_spectral_efficiency,
    mc_sinr_cdf_no_fading,
    simulate_lbt,
    simulate_resq,
)
from .pipeline import CellModel, build_cell, collision_curve, evaluate_strategy, parameter_sweep
from .pmf import DiscretePmf
from .resq import (
    BASELINE,
    FAT,
    SLIM,
    QueueSpec,
    build_g_table,
    class_loss_probability,
    class_loss_probability_direct,
    make_strategy_split,
    offload_probability,
    offloaded_demand_pmf,
    offloaded_demand_pmf_stationary,
)

logger = logging.getLogger(__name__)

SIGMAS = 3.0
CHI_SQUARE_LEVEL = 0.01


@dataclass(frozen=True)
class CheckResult:
    """One comparison; informational checks never fail the run."""

    stage: str
    name: str
    analytical: float
    reference: float
    tolerance: float
    passed: bool
    gating: bool = True

    @property
    def difference(self) -> float:
        return abs(self.analytical - self.reference)


def _compare(stage: str, name: str, analytical: float, reference: float, tolerance: float) -> CheckResult:
    return CheckResult(
        stage, name, float(analytical), float(reference), float(tolerance),
        passed=bool(abs(analytical - reference) <= tolerance),
    )


@dataclass(frozen=True)
class ValidationReport:
    checks: Sequence[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if c.gating and not c.passed]

    def to_frame(self) -> pd.DataFrame:
        rows = [dataclasses.asdict(c) | {"difference": c.difference} for c in self.checks]
        return pd.DataFrame(rows, columns=[
            "stage", "name", "analytical", "reference", "difference", "tolerance", "passed", "gating",
        ])

    def render(self, console: Optional[Console] = None) -> None:
        table = Table(title="Validation")
        table.add_column("Stage", style="cyan")
        table.add_column("Check")
        table.add_column("Analytical", justify="right")
        table.add_column("Reference", justify="right")
        table.add_column("|diff|", justify="right")
        table.add_column("Tolerance", justify="right")
        table.add_column("Result")
        for c in self.checks:
            if not c.gating:
                verdict = "[yellow]info[/yellow]" if not c.passed else "[green]holds[/green]"
            else:
                verdict = "[green]pass[/green]" if c.passed else "[red]FAIL[/red]"
            table.add_row(
                c.stage, c.name, f"{c.analytical:.6g}", f"{c.reference:.6g}",
                f"{c.difference:.3g}", f"{c.tolerance:.3g}", verdict,
            )
        (console or Console()).print(table)


def geometry_checks(scenario: ScenarioConfig, cell: CellModel) -> List[CheckResult]:
    dep, val = scenario.deployment, scenario.validation
    analytical = mean_blockage_probability(cell.r_n, dep)
    sampled = mc_mean_blockage(cell.r_n, dep, samples=val.monte_carlo_samples, seed=val.seed)
    return [_compare(
        "geometry", "disk-averaged blockage", analytical, sampled.estimate, SIGMAS * sampled.std_error + 1e-12,
    )]


def chanstat_checks(scenario: ScenarioConfig, cell: CellModel) -> List[CheckResult]:
    dep, val, radio = scenario.deployment, scenario.validation, scenario.licensed
    dh = height_difference(dep)
    region = Region.disk(cell.r_n)
    checks: List[CheckResult] = []

    blocked = StateParams.for_state(radio, PropagationState.BLOCKED)
    low, high = blocked.support_db(region, dh)
    median = 0.5 * (low + high)
    sampled = mc_sinr_cdf_no_fading(median, region, blocked, dh, val.monte_carlo_samples, val.seed)
    checks.append(_compare(
        "chanstat", "no-fading SINR CDF at mid-support",
        sinr_cdf_no_fading(median, region, blocked, dh), sampled.estimate,
        SIGMAS * sampled.std_error + 1e-12,
    ))

    worst = 0.0
    for params in (blocked, StateParams.for_state(radio, PropagationState.LOS)):
        far, near = params.support_db(region, dh)
        for x in np.linspace(far - 2 * params.sigma_db, near + 2 * params.sigma_db, 9):
            gap = abs(
                sinr_cdf_with_fading(float(x), params.sigma_db, params, region, dh)
                - sinr_cdf_closed_form(float(x), params.sigma_db, params, region, dh)
            )
            worst = max(worst, gap)
    checks.append(CheckResult("chanstat", "faded CDF: quadrature vs error function", worst, 0.0, 1e-6, worst <= 1e-6))

    disk = Region.disk(cell.r_w)
    sampled = mc_demand_mean(
        disk, dep, radio, cell.licensed_mcs, scenario.traffic.min_rate,
        scenario.model.resource_unit_bw, cell.resources, val.monte_carlo_samples, val.seed,
    )
    checks.append(_compare(
        "chanstat", "mean demand of the offloadable disk", cell.disk_demand.pmf.mean(),
        sampled.estimate, SIGMAS * sampled.std_error + 1e-9,
    ))

    sampled = mc_mean_spectral_efficiency(
        cell.r_w, dep, scenario.unlicensed, dep.ap_height, val.monte_carlo_samples, val.seed,
    )
    checks.append(_compare(
        "chanstat", "mean unlicensed spectral efficiency",
        mean_spectral_efficiency(cell.r_w, dep, scenario.unlicensed, dep.ap_height),
        sampled.estimate, SIGMAS * sampled.std_error + 1e-9,
    ))
    return checks


def resq_checks(scenario: ScenarioConfig, cell: CellModel) -> List[CheckResult]:
    val = scenario.validation
    checks: List[CheckResult] = []

    unit = DiscretePmf.delta(1)
    worst = 0.0
    for servers in (1, 10, 50):
        for load in (0.1, 1.0, 10.0):
            g = build_g_table(QueueSpec(servers, servers, (load,), (unit,)))
            worst = max(worst, abs(class_loss_probability(g, unit) - erlang_b(servers, load)))
    checks.append(CheckResult("resq", "unit demand vs Erlang-B", worst, 0.0, 1e-12, worst <= 1e-12))

    split = make_strategy_split(
        BASELINE, cell.ring_demand.pmf, cell.disk_demand.pmf,
        cell.arrivals.ring, cell.arrivals.disk, scenario.traffic.service_rate,
    )
    g = build_g_table(split.queue_spec(cell.servers, cell.resources), split.licensed_pmf)
    checks.append(_compare(
        "resq", "G-table vs direct loss (default cell)",
        class_loss_probability(g, split.class2_pmf),
        class_loss_probability_direct(g, split.class2_pmf), 1e-10,
    ))

    small = QueueSpec(3, 4, (0.8, 1.3), (
        DiscretePmf.from_mapping({1: 0.6, 2: 0.4}),
        DiscretePmf.from_mapping({1: 0.2, 2: 0.5, 3: 0.3}),
    ))
    exact = exact_ctmc_resq(small)
    g_small = build_g_table(small)
    distance = exact.total_variation(g_small.terms / g_small.normalization)
    checks.append(CheckResult("resq", "product form vs exact chain", distance, 0.0, 1e-9, distance <= 1e-9))

    p1 = DiscretePmf.from_mapping({1: 1.0})
    p2 = DiscretePmf.from_mapping({1: 0.5, 2: 0.5})
    for strategy, threshold in ((BASELINE, None), (FAT, 1.0), (SLIM, 1.0)):
        small_split = make_strategy_split(strategy, p1, p2, 0.5, 1.0, 1.0, threshold)
        g_split = build_g_table(small_split.queue_spec(2, 2), small_split.licensed_pmf)
        direct = offloaded_demand_pmf(small_split, g_split)
        summed = offloaded_demand_pmf_stationary(small_split, g_split)
        size = max(len(direct), len(summed))
        gap = float(np.max(np.abs(direct.padded(size) - summed.padded(size))))
        checks.append(CheckResult("resq", f"{strategy}: offloaded pmf forms agree", gap, 0.0, 1e-9, gap <= 1e-9))

        ctl = SimControl(val.seed, val.event_budget, val.confidence, val.batch_count)
        simulated = simulate_resq(small_split, 0.5, 1.0, 2, 2, ctl)
        checks.append(_compare(
            "resq", f"{strategy}: class-1 loss vs simulation", class_loss_probability(g_split, p1),
            simulated.class1_loss.estimate, SIGMAS * simulated.class1_loss.std_error + 1e-12,
        ))
        checks.append(_compare(
            "resq", f"{strategy}: offload probability vs simulation", offload_probability(small_split, g_split),
            simulated.offload_probability.estimate,
            SIGMAS * simulated.offload_probability.std_error + 1e-12,
        ))
        pvalue = chi_square_pvalue(simulated.offloaded_histogram, direct)
        checks.append(CheckResult(
            "resq", f"{strategy}: offloaded histogram chi-square p-value", pvalue, CHI_SQUARE_LEVEL,
            CHI_SQUARE_LEVEL, pvalue >= CHI_SQUARE_LEVEL,
        ))
    return checks


def lbt_checks(scenario: ScenarioConfig, cell: CellModel) -> List[CheckResult]:
    val, cfg = scenario.validation, cell.contention
    checks: List[CheckResult] = []

    residual = 0.0
    agreement = 0.0
    for theta in np.linspace(0.05, 1.0, 20):
        q = retry_distribution(float(theta), cfg.max_retries)
        residual = max(residual, balance_residual(q, float(theta)))
        if abs(theta - 0.5) > 1e-3:
            direct = transmission_probability(float(theta), cfg.initial_cw_nru, cfg.max_retries)
            closed = transmission_probability_closed_form(float(theta), cfg.initial_cw_nru, cfg.max_retries)
            agreement = max(agreement, abs(direct - closed))
    checks.append(CheckResult("lbt", "retry chain balance residual", residual, 0.0, 1e-12, residual <= 1e-12))
    checks.append(CheckResult("lbt", "direct sum vs closed form", agreement, 0.0, 1e-9, agreement <= 1e-9))

    chain = exact_backoff_chain(2, 2)
    point = solve_contention(2, 0, dataclasses.replace(cfg, initial_cw_nru=2, max_retries=0, blockage_prob=0.0))
    checks.append(_compare("lbt", "two stations, W=2: exact counter chain", point.p_c or 0.0, chain.p_c, 1e-9))

    for n in val.populations:
        point = solve_contention(n, n, cfg)
        ctl = SimControl(val.seed + n, val.slot_budget, val.confidence, val.batch_count)
        simulated = simulate_lbt(n, n, cfg, ctl)
        analytical = point.p_c or 0.0
        label = f"collision probability ({n}, {n}) vs slot simulation"
        checks.append(_compare(
            "lbt", label, analytical, simulated.p_c.estimate, SIGMAS * simulated.p_c.std_error + 1e-12,
        ))
        gap = abs(analytical - simulated.p_c.estimate)
        checks.append(CheckResult(
            "lbt", f"{label}, model tolerance", analytical, simulated.p_c.estimate,
            val.lbt_model_tolerance, gap <= val.lbt_model_tolerance, gating=False,
        ))
    return checks


TREND_SLACK = 1e-12
BLOCKER_DENSITIES = (0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0)


def _trend(name: str, holds: bool, value: float, reference: float) -> CheckResult:
    return CheckResult("trend", name, value, reference, TREND_SLACK, holds)


def _ascending(values: Sequence[float]) -> bool:
    return all(b >= a - TREND_SLACK for a, b in zip(values, values[1:]))


def trend_checks(scenario: ScenarioConfig, cache: Optional[ContentionCache] = None) -> List[CheckResult]:
    """Strategy ordering, rate monotonicity and blockage response of the scenario."""
    checks: List[CheckResult] = []
    sweep = parameter_sweep(scenario, "bs_density", scenario.sweep.values, (BASELINE, FAT, SLIM), cache=cache)
    by_strategy = {s: [r.q_s for _, r in sweep.reports_for(s)] for s in (BASELINE, FAT, SLIM)}
    base, fat, slim = by_strategy[BASELINE], by_strategy[FAT], by_strategy[SLIM]
    checks.append(_trend(
        "baseline Q_s <= fat Q_s at every density",
        all(b <= f + TREND_SLACK for b, f in zip(base, fat)), max(base), max(fat),
    ))
    checks.append(_trend(
        "slim Q_s worst at every density",
        all(s >= max(b, f) - TREND_SLACK for s, b, f in zip(slim, base, fat)),
        min(slim), max(max(base), max(fat)),
    ))

    rates = parameter_sweep(scenario, "min_rate", (50e6, 75e6, 100e6), (BASELINE,), cache=cache)
    losses = [r.q_s for _, r in rates.points]
    checks.append(_trend("Q_s nondecreasing in minimum rate", _ascending(losses), losses[0], losses[-1]))

    curve = collision_curve(scenario, BLOCKER_DENSITIES, [(5, 5)])
    failure = [p.failure for p in curve]
    checks.append(_trend(
        "attempt failure nondecreasing in blocker density", _ascending(failure), failure[0], failure[-1],
    ))
    p_c = [p.p_c for p in curve]
    checks.append(_trend(
        "collision probability nonincreasing in blocker density", _ascending(p_c[::-1]), p_c[0], p_c[-1],
    ))
    return checks


def pipeline_checks(scenario: ScenarioConfig, cell: CellModel, cache: Optional[ContentionCache]) -> List[CheckResult]:
    base = evaluate_strategy(scenario, BASELINE, cell, cache=cache)
    inactive = scenario.with_values("strategies", fat_threshold=math.inf, slim_threshold=-1.0)
    checks = []
    for strategy in (FAT, SLIM):
        other = evaluate_strategy(inactive, strategy, cell, cache=cache)
        checks.append(_compare("pipeline", f"{strategy} with inactive threshold equals baseline Q_s", other.q_s, base.q_s, 1e-12))
    return checks


STAGES: Sequence[str] = ("geometry", "chanstat", "resq", "lbt", "pipeline", "trend")


def run_validation(
    scenario: ScenarioConfig,
    stages: Sequence[str] = STAGES,
    progress: Optional[Callable[[str], None]] = None,
) -> ValidationReport:
    """Run the selected stage checks against the scenario's cell."""
    cell = build_cell(scenario)
    cache = ContentionCache()
    runners = {
        "geometry": lambda: geometry_checks(scenario, cell),
        "chanstat": lambda: chanstat_checks(scenario, cell),
        "resq": lambda: resq_checks(scenario, cell),
        "lbt": lambda: lbt_checks(scenario, cell),
        "pipeline": lambda: pipeline_checks(scenario, cell, cache),
        "trend": lambda: trend_checks(scenario, cache),
    }
    checks: List[CheckResult] = []
    for name in stages:
        logger.info(f"Validating stage {name}")
        if progress:
            progress(name)
        checks.extend(runners[name]())
    report = ValidationReport(tuple(checks))
    logger.info(f"Validation: {len(report.failures)} of {sum(c.gating for c in checks)} gating checks failed")
    return report
