"""End-to-end evaluation of the offloading strategies.

A :class:`CellModel` gathers everything that does not depend on the strategy
(coverage, arrival split, demand pmfs, unlicensed efficiencies). Each strategy
is then evaluated on top of it and summarized in a :class:`StrategyReport`.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import pandas as pd
from tqdm import tqdm

from . import constants as C
from .cache import ContentionCache
from .chanstat import (
    DemandDistribution,
    McsTable,
    Region,
    SinrDistribution,
    b_min,
    demand_pmf,
    efficiency_map,
    load_mcs_table,
    mean_spectral_efficiency,
)
from .config import ContentionConfig, DeploymentConfig, ScenarioConfig, TrafficConfig
from .exceptions import ConfigError, DomainError, GeometryError, NruOffloadError
from .geometry import coverage, mean_blockage_probability
from .lbt import attained_rates, contention_mixture, qos_violation, solve_contention
from .pmf import DiscretePmf
from .resq import (
    BASELINE,
    FAT,
    SLIM,
    build_g_table,
    class_loss_probability,
    make_strategy_split,
    offload_probability,
    offloaded_demand_pmf,
)

logger = logging.getLogger(__name__)


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag engine errors escaping the block with the stage that raised them."""
    try:
        yield
    except NruOffloadError as e:
        if e.stage is None:
            e.stage = name
        raise


class Arrivals(NamedTuple):
    """Session intensities (sessions/s) of one cell."""

    total: float
    ring: float
    disk: float
    wigig: float


def split_arrivals(
    dep: DeploymentConfig, traffic: TrafficConfig, r_n: float, r_w: float
) -> Arrivals:
    """Split NR-U arrivals into the ring (type 1) and the offloadable disk (type 2).

    Raises:
        GeometryError: if the unlicensed radius exceeds the licensed one.
    """
    if r_w > r_n:
        raise GeometryError(f"Unlicensed radius {r_w:.3f} m exceeds licensed radius {r_n:.3f} m")
    if r_n <= 0 or r_w < 0:
        raise GeometryError("Coverage radii must be positive")
    total = dep.nru_ue_density * math.pi * r_n**2 * traffic.nru_active_prob * traffic.session_rate
    disk = total * (r_w / r_n) ** 2
    wigig = (
        dep.wigig_ue_density * math.pi * r_w**2 * traffic.wigig_active_prob * traffic.wigig_session_rate
    )
    return Arrivals(total=total, ring=total - disk, disk=disk, wigig=wigig)


@dataclass(frozen=True, eq=False)
class CellModel:
    """Strategy-independent quantities of one scenario."""

    r_sinr: float
    r_voronoi: float
    r_n: float
    r_w: float
    arrivals: Arrivals
    resources: int
    servers: int
    ring_demand: DemandDistribution
    disk_demand: DemandDistribution
    licensed_mcs: McsTable
    unlicensed_mcs: McsTable
    unlicensed_efficiency: float
    offload_b_min: int
    efficiencies: Dict[int, float]
    contention: ContentionConfig


def build_cell(scenario: ScenarioConfig) -> CellModel:
    dep, model = scenario.deployment, scenario.model

    with stage("geometry"):
        licensed_cov = coverage(dep, scenario.licensed)
        unlicensed_cov = coverage(dep, scenario.unlicensed, dep.ap_height)
        r_n = licensed_cov.r_cell
        r_w = min(unlicensed_cov.r_sinr, r_n)
        logger.info(f"Coverage radii: licensed {r_n:.2f} m, unlicensed {r_w:.2f} m")

    with stage("pipeline"):
        arrivals = split_arrivals(dep, scenario.traffic, r_n, r_w)

    with stage("chanstat"):
        resources = int(math.floor(scenario.licensed.bandwidth_hz / model.resource_unit_bw))
        if resources < 1:
            raise DomainError("Licensed bandwidth holds no resource unit")
        servers = model.servers or resources
        licensed_mcs = load_mcs_table(scenario.licensed, C.NR_MCS_TABLE)
        unlicensed_mcs = load_mcs_table(scenario.unlicensed, C.WIGIG_MCS_TABLE)
        min_rate = scenario.traffic.min_rate

        disk = Region.disk(r_w)
        disk_sinr = SinrDistribution.build(disk, dep, scenario.licensed, method=model.fading_method)
        disk_demand = demand_pmf(disk_sinr, licensed_mcs, min_rate, model.resource_unit_bw, resources)
        if r_w < r_n:
            ring = Region.annulus(r_w, r_n)
            ring_sinr = SinrDistribution.build(ring, dep, scenario.licensed, method=model.fading_method)
            ring_demand = demand_pmf(ring_sinr, licensed_mcs, min_rate, model.resource_unit_bw, resources)
        else:
            ring_demand = disk_demand

        unlicensed_efficiency = mean_spectral_efficiency(r_w, dep, scenario.unlicensed, dep.ap_height)
        if model.rate_map == "geometric":
            efficiencies = efficiency_map(
                disk_demand, licensed_mcs, unlicensed_mcs, disk, dep,
                scenario.licensed, scenario.unlicensed, dep.ap_height,
            )
        else:
            efficiencies = {j: unlicensed_efficiency for j in set(disk_demand.row_demands)}
        offload_b_min = b_min(min_rate, unlicensed_efficiency, model.resource_unit_bw)

    with stage("lbt"):
        contention = scenario.contention
        if contention.blockage_prob is None:
            p_b = mean_blockage_probability(r_w, dep, dep.ap_height)
            contention = dataclasses.replace(contention, blockage_prob=p_b)

    logger.info(
        f"Cell: λ={arrivals.total:.4g}/s (ring {arrivals.ring:.4g}, disk {arrivals.disk:.4g}), "
        f"R={resources}, K={servers}, p_b={contention.p_b:.4f}"
    )
    return CellModel(
        r_sinr=licensed_cov.r_sinr,
        r_voronoi=licensed_cov.r_voronoi,
        r_n=r_n,
        r_w=r_w,
        arrivals=arrivals,
        resources=resources,
        servers=servers,
        ring_demand=ring_demand,
        disk_demand=disk_demand,
        licensed_mcs=licensed_mcs,
        unlicensed_mcs=unlicensed_mcs,
        unlicensed_efficiency=unlicensed_efficiency,
        offload_b_min=offload_b_min,
        efficiencies=efficiencies,
        contention=contention,
    )


REPORT_COLUMNS: Tuple[str, ...] = (
    "strategy",
    "threshold",
    "bs_density",
    "min_rate",
    "r_sinr",
    "r_voronoi",
    "r_n",
    "r_w",
    "resources",
    "servers",
    "lambda_total",
    "lambda_ring",
    "lambda_disk",
    "lambda_wigig",
    "lambda_su",
    "mean_demand_ring",
    "mean_demand_disk",
    "infeasible_ring",
    "infeasible_disk",
    "pi_direct",
    "pi_sl",
    "pi_su",
    "blockage_prob",
    "rho_nru",
    "rho_wigig",
    "success_nru",
    "success_wigig",
    "mean_rate_su",
    "q_su",
    "q_s",
    "mean_efficiency_unlicensed",
    "b_min",
    "fixed_point_iterations",
    "truncation_mass",
)


@dataclass(frozen=True, eq=False)
class StrategyReport:
    """All intermediate and final results of one strategy in one scenario."""

    strategy: str
    threshold: Optional[float]
    bs_density: float
    min_rate: float
    r_sinr: float
    r_voronoi: float
    r_n: float
    r_w: float
    resources: int
    servers: int
    lambda_total: float
    lambda_ring: float
    lambda_disk: float
    lambda_wigig: float
    lambda_su: float
    mean_demand_ring: float
    mean_demand_disk: float
    infeasible_ring: float
    infeasible_disk: float
    pi_direct: float
    pi_sl: float
    pi_su: float
    blockage_prob: float
    rho_nru: float
    rho_wigig: float
    success_nru: float
    success_wigig: float
    mean_rate_su: float
    q_su: float
    q_s: float
    mean_efficiency_unlicensed: float
    b_min: int
    fixed_point_iterations: int
    truncation_mass: float
    offloaded_pmf: Optional[DiscretePmf] = None
    rates: Optional[Dict[int, float]] = None

    def to_row(self) -> Dict[str, object]:
        """Report values in :data:`REPORT_COLUMNS` order."""
        return {name: getattr(self, name) for name in REPORT_COLUMNS}


def resolve_threshold(strategy: str, scenario: ScenarioConfig, class2_pmf: DiscretePmf) -> Optional[float]:
    """Configured threshold, or the one derived from the mean offloadable demand.

    The derived thresholds tolerate ``CEIL_SLACK`` of rounding in the mean.
    """
    cfg = scenario.strategies
    mean = class2_pmf.mean()
    if strategy == FAT:
        if cfg.fat_threshold is not None:
            return cfg.fat_threshold
        return float(math.floor(mean + cfg.threshold_offset + C.CEIL_SLACK))
    if strategy == SLIM:
        if cfg.slim_threshold is not None:
            return cfg.slim_threshold
        return float(math.ceil(mean - cfg.threshold_offset - C.CEIL_SLACK) - 1)
    return None


def reported_threshold(strategy: str, threshold: Optional[float]) -> Optional[float]:
    """Threshold as written to results; None when it routes no session directly."""
    if threshold is None or not math.isfinite(threshold):
        return None
    if strategy == SLIM and threshold < 0:
        return None
    return threshold


def eventual_loss(
    arrivals: Arrivals, pi_sl: float, pi_su: float, q_su: float, weight: str = "printed"
) -> float:
    """Probability that a session misses its minimum rate in either band."""
    if arrivals.total <= 0:
        return 0.0
    if weight == "ring_only":
        licensed_share = arrivals.ring / arrivals.total
    else:
        licensed_share = (arrivals.ring + arrivals.disk * (1.0 - pi_su)) / arrivals.total
    value = licensed_share * pi_sl + (arrivals.disk * pi_su / arrivals.total) * q_su
    return min(max(value, 0.0), 1.0)


def evaluate_strategy(
    scenario: ScenarioConfig,
    strategy: str,
    cell: Optional[CellModel] = None,
    jobs: int = 1,
    cache: Optional[ContentionCache] = None,
) -> StrategyReport:
    """Run the full chain for one strategy.

    Raises:
        NruOffloadError: from any stage, with ``stage`` set to its name.
    """
    if strategy not in (BASELINE, FAT, SLIM):
        raise ConfigError(f"Unknown strategy: {strategy!r}")
    cell = cell or build_cell(scenario)
    traffic, model = scenario.traffic, scenario.model
    arrivals = cell.arrivals
    p1, p2 = cell.ring_demand.pmf, cell.disk_demand.pmf

    with stage("resq"):
        threshold = resolve_threshold(strategy, scenario, p2)
        split = make_strategy_split(
            strategy, p1, p2, arrivals.ring, arrivals.disk, traffic.service_rate,
            threshold, allow_full_offload=True,
        )
        g = build_g_table(split.queue_spec(cell.servers, cell.resources), split.licensed_pmf)
        pi_sl = class_loss_probability(g, p1)
        pi_su = offload_probability(split, g)
        offloaded = offloaded_demand_pmf(split, g) if pi_su > 0 else None

    lambda_su = arrivals.disk * pi_su
    rho_nru = lambda_su / traffic.service_rate
    rho_wigig = arrivals.wigig / traffic.wigig_service_rate

    with stage("lbt"):
        mix = contention_mixture(
            rho_nru, rho_wigig, cell.contention, model.truncation_mass, jobs, cache
        )
        if offloaded is not None:
            result = attained_rates(mix.nru, offloaded, cell.efficiencies, scenario.unlicensed.bandwidth_hz)
            rates: Optional[Dict[int, float]] = result.rates
            mean_rate = result.mean
            q_su = qos_violation(result.rates, offloaded, traffic.min_rate)
        else:
            rates, mean_rate, q_su = None, 0.0, 0.0

    with stage("pipeline"):
        ring_infeasible = cell.ring_demand.infeasible_mass
        pi_sl = ring_infeasible + (1.0 - ring_infeasible) * pi_sl
        if model.infeasible_in_qos:
            disk_infeasible = cell.disk_demand.infeasible_mass
            offloaded_feasible = (1.0 - disk_infeasible) * pi_su
            pi_su = disk_infeasible + offloaded_feasible
            if pi_su > 0:
                q_su = (disk_infeasible + offloaded_feasible * q_su) / pi_su
        q_s = eventual_loss(arrivals, pi_sl, pi_su, q_su, model.loss_weight)

    logger.info(
        f"{strategy}: π_sL={pi_sl:.4g}, π_sU={pi_su:.4g}, Π_N={mix.nru:.4g}, "
        f"Q_sU={q_su:.4g}, Q_s={q_s:.4g}"
    )
    return StrategyReport(
        strategy=strategy,
        threshold=reported_threshold(strategy, threshold),
        bs_density=scenario.deployment.bs_density,
        min_rate=traffic.min_rate,
        r_sinr=cell.r_sinr,
        r_voronoi=cell.r_voronoi,
        r_n=cell.r_n,
        r_w=cell.r_w,
        resources=cell.resources,
        servers=cell.servers,
        lambda_total=arrivals.total,
        lambda_ring=arrivals.ring,
        lambda_disk=arrivals.disk,
        lambda_wigig=arrivals.wigig,
        lambda_su=lambda_su,
        mean_demand_ring=p1.mean(),
        mean_demand_disk=p2.mean(),
        infeasible_ring=cell.ring_demand.infeasible_mass,
        infeasible_disk=cell.disk_demand.infeasible_mass,
        pi_direct=split.pi_direct,
        pi_sl=pi_sl,
        pi_su=pi_su,
        blockage_prob=cell.contention.p_b,
        rho_nru=rho_nru,
        rho_wigig=rho_wigig,
        success_nru=mix.nru,
        success_wigig=mix.wigig,
        mean_rate_su=mean_rate,
        q_su=q_su,
        q_s=q_s,
        mean_efficiency_unlicensed=cell.unlicensed_efficiency,
        b_min=cell.offload_b_min,
        fixed_point_iterations=mix.max_iterations,
        truncation_mass=mix.truncation_mass,
        offloaded_pmf=offloaded,
        rates=rates,
    )


def evaluate_point(
    scenario: ScenarioConfig,
    strategies: Optional[Sequence[str]] = None,
    jobs: int = 1,
    cache: Optional[ContentionCache] = None,
) -> List[StrategyReport]:
    """Evaluate several strategies on one shared cell model."""
    cell = build_cell(scenario)
    chosen = strategies or scenario.strategies.evaluate
    return [evaluate_strategy(scenario, s, cell, jobs, cache) for s in chosen]


def reports_frame(reports: Sequence[StrategyReport], extra: Optional[Dict[str, Sequence[object]]] = None) -> pd.DataFrame:
    """Reports as a DataFrame with the fixed column order, optional leading columns first."""
    frame = pd.DataFrame([r.to_row() for r in reports], columns=list(REPORT_COLUMNS))
    for position, (name, values) in enumerate((extra or {}).items()):
        frame.insert(position, name, list(values))
    return frame


_SWEEP_SECTIONS = {
    "bs_density": ("deployment", float),
    "blocker_density": ("deployment", float),
    "min_rate": ("traffic", float),
    "initial_cw_nru": ("contention", int),
    "max_retries": ("contention", int),
}


def scenario_at(scenario: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    """Copy of ``scenario`` with one sweep parameter replaced."""
    if parameter not in _SWEEP_SECTIONS:
        raise ConfigError(f"Cannot sweep over {parameter!r}")
    section, kind = _SWEEP_SECTIONS[parameter]
    if kind is int and float(value) != int(value):
        raise ConfigError(f"{parameter} takes integer values, got {value}")
    return scenario.with_values(section, **{parameter: kind(value)}).validate()


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    points: Tuple[Tuple[float, StrategyReport], ...]

    def reports_for(self, strategy: str) -> List[Tuple[float, StrategyReport]]:
        return [(v, r) for v, r in self.points if r.strategy == strategy]

    def to_frame(self) -> pd.DataFrame:
        return reports_frame(
            [r for _, r in self.points],
            {"parameter": [self.parameter] * len(self.points), "value": [v for v, _ in self.points]},
        )


def parameter_sweep(
    scenario: ScenarioConfig,
    parameter: str,
    values: Sequence[float],
    strategies: Optional[Sequence[str]] = None,
    jobs: int = 1,
    cache: Optional[ContentionCache] = None,
    progress: bool = False,
) -> SweepResult:
    """Evaluate the strategies at every value of one parameter.

    Points run in up to ``jobs`` threads; results keep the order of ``values``.

    Raises:
        ConfigError: for an empty or non-ascending grid.
    """
    if not values:
        raise ConfigError("Sweep grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("Sweep grid must be strictly ascending")
    chosen = tuple(strategies or scenario.strategies.evaluate)
    shared = cache or ContentionCache()

    def run(value: float) -> List[StrategyReport]:
        return evaluate_point(scenario_at(scenario, parameter, value), chosen, 1, shared)

    logger.info(f"Sweeping {parameter} over {len(values)} points for {', '.join(chosen)}")
    with tqdm(total=len(values), desc=f"Sweeping {parameter}", unit="points",
              leave=False, disable=not progress) as pbar:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run, v) for v in values]
                results = []
                for future in futures:
                    results.append(future.result())
                    pbar.update(1)
        else:
            results = []
            for value in values:
                results.append(run(value))
                pbar.update(1)

    points = tuple((float(v), report) for v, reports in zip(values, results) for report in reports)
    return SweepResult(parameter=parameter, points=points)


@dataclass(frozen=True)
class DensitySweepResult:
    sweep: SweepResult
    target_loss: float
    minimal_density: Dict[str, Optional[float]]


def minimal_density(sweep: SweepResult, strategy: str, target_loss: float) -> Optional[float]:
    """Smallest swept density whose eventual loss meets ``target_loss``; None if unattained."""
    for value, report in sweep.reports_for(strategy):
        if report.q_s <= target_loss:
            return value
    return None


def density_sweep(
    scenario: ScenarioConfig,
    densities: Optional[Sequence[float]] = None,
    strategies: Optional[Sequence[str]] = None,
    target_loss: Optional[float] = None,
    jobs: int = 1,
    cache: Optional[ContentionCache] = None,
    progress: bool = False,
) -> DensitySweepResult:
    grid = tuple(densities if densities is not None else scenario.sweep.values)
    target = scenario.sweep.target_loss if target_loss is None else target_loss
    sweep = parameter_sweep(scenario, "bs_density", grid, strategies, jobs, cache, progress)
    chosen = strategies or scenario.strategies.evaluate
    found = {s: minimal_density(sweep, s, target) for s in chosen}
    for s, density in found.items():
        if density is None:
            logger.info(f"{s}: target Q_s <= {target} unattained on the grid")
        else:
            logger.info(f"{s}: target Q_s <= {target} first met at density {density:.4g}")
    return DensitySweepResult(sweep=sweep, target_loss=target, minimal_density=found)


@dataclass(frozen=True)
class CollisionPoint:
    blocker_density: float
    n_nru: int
    n_wigig: int
    blockage_prob: float
    p_c: float
    failure: float
    pi_n: float


def collision_curve(
    scenario: ScenarioConfig,
    blocker_densities: Sequence[float],
    populations: Sequence[Tuple[int, int]],
) -> List[CollisionPoint]:
    """Collision probability of a tagged NR-U station versus blocker density.

    ``failure`` is 1 − θ, the chance that an attempt fails for either reason.
    """
    curve: List[CollisionPoint] = []
    for density in blocker_densities:
        local = scenario_at(scenario, "blocker_density", density)
        with stage("geometry"):
            r_n = coverage(local.deployment, local.licensed).r_cell
            r_w = min(coverage(local.deployment, local.unlicensed, local.deployment.ap_height).r_sinr, r_n)
            p_b = mean_blockage_probability(r_w, local.deployment, local.deployment.ap_height)
        cfg = dataclasses.replace(local.contention, blockage_prob=p_b)
        for n_nru, n_wigig in populations:
            if n_nru < 1:
                raise DomainError("Collision curve needs at least one NR-U station")
            with stage("lbt"):
                point = solve_contention(n_nru, n_wigig, cfg)
            assert point.p_c is not None and point.theta is not None and point.pi_n is not None
            curve.append(CollisionPoint(
                blocker_density=float(density),
                n_nru=n_nru,
                n_wigig=n_wigig,
                blockage_prob=p_b,
                p_c=point.p_c,
                failure=1.0 - point.theta,
                pi_n=point.pi_n,
            ))
    return curve


def unlicensed_mean_rates(
    rho_n: float,
    rho_w: float,
    cfg: ContentionConfig,
    nru_efficiency: float,
    wigig_efficiency: float,
    bandwidth: float,
    truncation_mass: float = C.POISSON_TRUNCATION_MASS,
    cache: Optional[ContentionCache] = None,
) -> Tuple[float, float]:
    """Mean unlicensed rates (bit/s) of a tagged NR-U and a tagged WiGig station."""
    mix = contention_mixture(rho_n, rho_w, cfg, truncation_mass, cache=cache)
    return mix.nru * bandwidth * nru_efficiency, mix.wigig * bandwidth * wigig_efficiency


def search_initial_cw(
    rate_gap: Callable[[int], float],
    initial: int,
    tolerance: float,
    max_cw: int = C.MAX_CW_SEARCH,
) -> int:
    """Integer bisection for the NR-U initial CW that balances both mean rates.

    ``rate_gap(w)`` is the NR-U minus the WiGig mean rate at initial CW ``w``
    and decreases in ``w``. Returns the first CW within ``tolerance`` or the
    evaluated CW with the smallest gap.
    """
    if tolerance <= 0:
        raise DomainError("Rate tolerance must be > 0")
    if not 1 <= initial <= max_cw:
        raise DomainError(f"Initial CW must lie in [1, {max_cw}]")
    evaluated: Dict[int, float] = {}

    def gap(w: int) -> float:
        if w not in evaluated:
            evaluated[w] = rate_gap(w)
            logger.debug(f"CW {w}: rate gap {evaluated[w]:.6g} bit/s")
        return evaluated[w]

    if math.isinf(tolerance) or abs(gap(initial)) <= tolerance:
        return initial
    lo, hi = (initial, max_cw) if gap(initial) > 0 else (1, initial)

    if gap(lo) > 0 > gap(hi):
        while hi - lo > 1:
            mid = (lo + hi) // 2
            value = gap(mid)
            if abs(value) <= tolerance:
                return mid
            if value > 0:
                lo = mid
            else:
                hi = mid
    for w in (lo, hi):
        if abs(gap(w)) <= tolerance:
            return w
    return min(evaluated, key=lambda w: (abs(evaluated[w]), w))


def fair_initial_cw(
    rho_n: float,
    rho_w: float,
    cfg: ContentionConfig,
    nru_efficiency: float,
    wigig_efficiency: float,
    bandwidth: float,
    rate_tolerance: float,
    truncation_mass: float = C.POISSON_TRUNCATION_MASS,
    cache: Optional[ContentionCache] = None,
) -> int:
    """NR-U initial CW that equalizes the mean unlicensed rates at the given loads."""

    def rate_gap(w: int) -> float:
        local = dataclasses.replace(cfg, initial_cw_nru=w)
        nru, wigig = unlicensed_mean_rates(
            rho_n, rho_w, local, nru_efficiency, wigig_efficiency, bandwidth, truncation_mass, cache,
        )
        return nru - wigig

    return search_initial_cw(rate_gap, cfg.initial_cw_nru, rate_tolerance)


def fairness_search(
    scenario: ScenarioConfig,
    rate_tolerance: float,
    cell: Optional[CellModel] = None,
    cache: Optional[ContentionCache] = None,
) -> int:
    """NR-U initial CW that equalizes NR-U and WiGig mean unlicensed rates.

    Loads come from the baseline strategy; the WiGig initial CW stays fixed.
    """
    cell = cell or build_cell(scenario)
    report = evaluate_strategy(scenario, BASELINE, cell, cache=cache)
    pmf = report.offloaded_pmf or cell.disk_demand.pmf
    nru_efficiency = sum(p * cell.efficiencies.get(j, 0.0) for j, p in pmf.to_dict().items())

    with stage("lbt"):
        chosen = fair_initial_cw(
            report.rho_nru, report.rho_wigig, cell.contention, nru_efficiency, cell.unlicensed_efficiency,
            scenario.unlicensed.bandwidth_hz, rate_tolerance, scenario.model.truncation_mass, cache,
        )
    logger.info(f"Fair NR-U initial CW: {chosen} (WiGig {cell.contention.initial_cw_wigig})")
    return chosen
