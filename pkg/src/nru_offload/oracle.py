"""Independent simulators and exact chains that cross-check the analytical stages.

Random streams come from ``numpy.random.Philox`` seeded with
``SeedSequence([seed, stage_id])``, so every stage has its own reproducible
stream for a given seed.
"""

import itertools
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse, stats
from scipy.sparse import linalg as sparse_linalg

from . import constants as C
from .chanstat import McsTable, Region, StateParams, resource_demand
from .config import ContentionConfig, DeploymentConfig, RadioConfig
from .exceptions import DomainError, SimulationControlError, SimulationInvariantError, StateSpaceError
from .geometry import PropagationState, blockage_probability, mean_blockage_probability, mean_sinr
from .pmf import DiscretePmf
from .resq import QueueSpec, StrategySplit

logger = logging.getLogger(__name__)

STAGE_RESQ = 1
STAGE_LBT = 2
STAGE_BLOCKAGE = 3
STAGE_SINR = 4
STAGE_DEMAND = 5
STAGE_EFFICIENCY = 6


@dataclass(frozen=True)
class SimControl:
    """Seed, budget and batching of one simulation run.

    ``budget`` counts events for the queue simulator and slots for the
    contention simulator.
    """

    seed: int = C.DEFAULT_SEED
    budget: int = C.DEFAULT_EVENT_BUDGET
    confidence: float = C.DEFAULT_CONFIDENCE
    batch_count: int = C.DEFAULT_BATCH_COUNT

    def __post_init__(self) -> None:
        if self.budget <= 0:
            raise SimulationControlError("Simulation budget must be > 0")
        if not 0 < self.confidence < 1:
            raise SimulationControlError("Confidence level must lie in (0, 1)")
        if self.batch_count < 2:
            raise SimulationControlError("At least two batches are needed for a confidence interval")
        if self.budget < 10 * self.batch_count:
            raise SimulationControlError(
                f"Budget {self.budget} is too small for {self.batch_count} batches"
            )

    @property
    def batch_size(self) -> int:
        return self.budget // self.batch_count

    def generator(self, stage_id: int) -> np.random.Generator:
        return make_generator(self.seed, stage_id)


def make_generator(seed: int, stage_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stage_id])))


@dataclass(frozen=True)
class EstimateWithCI:
    estimate: float
    half_width: float
    batches: int
    std_error: float = 0.0

    @property
    def lower(self) -> float:
        return self.estimate - self.half_width

    @property
    def upper(self) -> float:
        return self.estimate + self.half_width

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return abs(value - self.estimate) <= self.half_width + slack

    @classmethod
    def exact(cls, value: float, batches: int = 0) -> "EstimateWithCI":
        return cls(value, 0.0, batches)


def batch_means(values: Sequence[float], confidence: float) -> EstimateWithCI:
    """Student-t confidence interval over independent batch (or sample) values."""
    data = np.asarray(values, dtype=float)
    if data.size < 2:
        raise SimulationControlError("Need at least two batches")
    mean = float(data.mean())
    spread = float(data.std(ddof=1)) / math.sqrt(data.size)
    quantile = float(stats.t.ppf(0.5 + confidence / 2.0, data.size - 1))
    return EstimateWithCI(mean, quantile * spread, int(data.size), spread)


def erlang_b(servers: int, load: float) -> float:
    """Erlang-B blocking probability by the stable recursion."""
    if servers < 0 or load < 0:
        raise DomainError("Erlang-B needs servers >= 0 and load >= 0")
    blocking = 1.0
    for k in range(1, servers + 1):
        blocking = load * blocking / (k + load * blocking)
    return blocking


@dataclass(frozen=True)
class ResqSimulation:
    """Per-class licensed loss, class-2 offload probability and offloaded demands."""

    class1_loss: EstimateWithCI
    class2_loss: EstimateWithCI
    offload_probability: EstimateWithCI
    offloaded_histogram: Dict[int, int]
    events: int


def _ratio(hits: np.ndarray, trials: np.ndarray) -> np.ndarray:
    if np.any(trials == 0):
        raise SimulationControlError("A batch saw no arrivals of a loaded class; raise the budget")
    return hits / trials


def simulate_resq(
    split: StrategySplit,
    rho1: float,
    rho2: float,
    servers: int,
    resources: int,
    ctl: SimControl,
) -> ResqSimulation:
    """Jump-chain simulation of the licensed loss queue under one strategy.

    Service is exponential with unit rate, so loads act as arrival rates. A
    class-2 arrival whose demand goes direct under ``split`` is offloaded on
    arrival; any other arrival is admitted iff a server and its units are free.
    Blocked class-2 arrivals are offloaded, blocked class-1 arrivals are lost.

    Raises:
        SimulationInvariantError: if occupancy ever exceeds the queue limits.
    """
    if rho1 < 0 or rho2 < 0:
        raise DomainError("Offered loads must be non-negative")
    rng = ctl.generator(STAGE_RESQ)
    total_rate = rho1 + rho2
    warmup = ctl.budget // 10
    steps = warmup + ctl.batch_size * ctl.batch_count

    def draws(pmf: DiscretePmf) -> np.ndarray:
        probabilities = pmf.probabilities / pmf.probabilities.sum()
        return rng.choice(probabilities.size, size=steps, p=probabilities)

    demand1 = draws(split.class1_pmf)
    demand2 = draws(split.class2_pmf)
    uniforms = rng.random((steps, 2))

    in_service: List[int] = []
    used = 0
    arrivals = np.zeros((ctl.batch_count, 2))
    blocked = np.zeros((ctl.batch_count, 2))
    offloaded = np.zeros(ctl.batch_count)
    histogram: Counter = Counter()

    for step in range(steps):
        n = len(in_service)
        event_rate = total_rate + n
        if event_rate == 0:
            break
        u_event, u_pick = uniforms[step]
        batch = (step - warmup) // ctl.batch_size if step >= warmup else -1

        if u_event * event_rate < total_rate:
            is_class2 = u_event * event_rate >= rho1
            j = int(demand2[step] if is_class2 else demand1[step])
            column = 1 if is_class2 else 0
            direct = is_class2 and split.goes_direct(j)
            admitted = False
            if not direct and n < servers and used + j <= resources:
                in_service.append(j)
                used += j
                admitted = True
                if used > resources or len(in_service) > servers:
                    raise SimulationInvariantError(
                        f"Occupancy {len(in_service)} sessions / {used} units exceeds "
                        f"{servers} / {resources}"
                    )
            if batch >= 0:
                arrivals[batch, column] += 1
                if not admitted:
                    if not direct:
                        blocked[batch, column] += 1
                    if is_class2:
                        offloaded[batch] += 1
                        histogram[j] += 1
        else:
            leaving = in_service.pop(min(int(u_pick * n), n - 1))
            used -= leaving

    def estimate(load: float, hits: np.ndarray, trials: np.ndarray) -> EstimateWithCI:
        if load == 0:
            return EstimateWithCI.exact(0.0, ctl.batch_count)
        return batch_means(_ratio(hits, trials), ctl.confidence)

    licensed2 = arrivals[:, 1] - (offloaded - blocked[:, 1])
    if rho2 > 0 and split.pi_direct < 1.0 and np.any(licensed2 == 0):
        raise SimulationControlError("A batch saw no licensed class-2 arrivals; raise the budget")
    class2_loss = (
        EstimateWithCI.exact(0.0, ctl.batch_count)
        if rho2 == 0 or split.pi_direct >= 1.0
        else batch_means(blocked[:, 1] / licensed2, ctl.confidence)
    )
    result = ResqSimulation(
        class1_loss=estimate(rho1, blocked[:, 0], arrivals[:, 0]),
        class2_loss=class2_loss,
        offload_probability=estimate(rho2, offloaded, arrivals[:, 1]),
        offloaded_histogram=dict(sorted(histogram.items())),
        events=steps,
    )
    logger.debug(
        f"Queue simulation: {steps} events, class-1 loss {result.class1_loss.estimate:.4g}, "
        f"offload {result.offload_probability.estimate:.4g}"
    )
    return result


def chi_square_pvalue(counts: Mapping[int, int], pmf: DiscretePmf, min_expected: float = 5.0) -> float:
    """p-value of observed counts against ``pmf``; sparse cells are pooled."""
    total = sum(counts.values())
    if total == 0:
        raise SimulationControlError("No observations to test")
    observed: List[float] = []
    expected: List[float] = []
    pooled_obs = pooled_exp = 0.0
    for j in sorted(set(pmf.to_dict()) | set(counts)):
        obs, exp = float(counts.get(j, 0)), total * pmf[j]
        if exp < min_expected:
            pooled_obs += obs
            pooled_exp += exp
        else:
            observed.append(obs)
            expected.append(exp)
    if pooled_exp > 0 or pooled_obs > 0:
        observed.append(pooled_obs)
        expected.append(pooled_exp)
    if len(observed) < 2:
        return 1.0
    expected_arr = np.asarray(expected)
    expected_arr *= sum(observed) / expected_arr.sum()
    return float(stats.chisquare(observed, expected_arr).pvalue)


@dataclass(frozen=True)
class LbtSimulation:
    """Slot-level contention estimates; WiGig fields are None without WiGig stations."""

    p_c: EstimateWithCI
    pi_n: EstimateWithCI
    theta: EstimateWithCI
    p_c_w: Optional[EstimateWithCI]
    pi_w: Optional[EstimateWithCI]
    theta_w: Optional[EstimateWithCI]
    slots: int


def simulate_lbt(n_nru: int, n_wigig: int, cfg: ContentionConfig, ctl: SimControl) -> LbtSimulation:
    """Slot-synchronous simulation of saturated listen-before-talk stations.

    A station in stage s draws its counter uniformly from {0, ..., 2^s·W − 1}
    and transmits when it reaches zero. A failed attempt (collision, or
    blockage with probability p_b) moves to the next stage; success or a
    failure in the last stage returns to stage 0.
    """
    if n_nru < 1 or n_wigig < 0:
        raise DomainError("Need at least one NR-U station and a non-negative WiGig count")
    rng = ctl.generator(STAGE_LBT)
    n = n_nru + n_wigig
    initial = np.array([cfg.initial_cw_nru] * n_nru + [cfg.initial_cw_wigig] * n_wigig)
    is_nru = np.arange(n) < n_nru
    stage = np.zeros(n, dtype=int)
    counter = rng.integers(0, initial)

    batch_slots = ctl.batch_size
    attempts = np.zeros((ctl.batch_count, 2))
    collisions = np.zeros((ctl.batch_count, 2))
    successes = np.zeros((ctl.batch_count, 2))
    slots = 0
    limit = batch_slots * ctl.batch_count

    while slots < limit:
        idle = int(counter.min())
        counter -= idle
        slots += idle + 1
        batch = min((slots - 1) // batch_slots, ctl.batch_count - 1)

        transmitting = counter == 0
        counter[~transmitting] -= 1
        senders = np.flatnonzero(transmitting)
        collided = senders.size > 1
        blocked = rng.random(senders.size) < cfg.p_b
        for k, station in enumerate(senders):
            column = 0 if is_nru[station] else 1
            attempts[batch, column] += 1
            ok = not collided and not blocked[k]
            if collided:
                collisions[batch, column] += 1
            if ok:
                successes[batch, column] += 1
            if ok or stage[station] == cfg.max_retries:
                stage[station] = 0
            else:
                stage[station] += 1
            counter[station] = rng.integers(0, initial[station] * 2 ** stage[station])

    per_station = np.array([n_nru, max(n_wigig, 1)], dtype=float)

    def summarize(column: int) -> Tuple[EstimateWithCI, EstimateWithCI, EstimateWithCI]:
        tries = attempts[:, column]
        return (
            batch_means(_ratio(collisions[:, column], tries), ctl.confidence),
            batch_means(tries / (batch_slots * per_station[column]), ctl.confidence),
            batch_means(_ratio(successes[:, column], tries), ctl.confidence),
        )

    p_c, pi_n, theta = summarize(0)
    p_c_w = pi_w = theta_w = None
    if n_wigig:
        p_c_w, pi_w, theta_w = summarize(1)
    logger.debug(f"Contention simulation ({n_nru}, {n_wigig}): {slots} slots, p_c={p_c.estimate:.4f}")
    return LbtSimulation(p_c, pi_n, theta, p_c_w, pi_w, theta_w, slots)


@dataclass(frozen=True)
class BackoffChainResult:
    p_c: float
    pi: float
    states: int


def exact_backoff_chain(n_stations: int, initial_cw: int) -> BackoffChainResult:
    """Exact counter-level chain of identical stations without retries or blockage.

    Every counter is redrawn uniformly from {0, ..., W − 1} after a transmission.

    Raises:
        StateSpaceError: if W^n exceeds the state guard.
    """
    if n_stations < 1 or initial_cw < 1:
        raise DomainError("Need at least one station and W >= 1")
    size = initial_cw**n_stations
    if size > C.CTMC_STATE_GUARD:
        raise StateSpaceError(f"{size} counter states exceed {C.CTMC_STATE_GUARD}")

    states = list(itertools.product(range(initial_cw), repeat=n_stations))
    index = {s: k for k, s in enumerate(states)}
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    redraw = 1.0 / initial_cw
    for s in states:
        options = [range(initial_cw) if c == 0 else (c - 1,) for c in s]
        count = sum(1 for c in s if c == 0)
        weight = redraw**count
        for target in itertools.product(*options):
            rows.append(index[s])
            cols.append(index[target])
            vals.append(weight)

    transition = sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
    stationary = _stationary(transition.T - sparse.identity(size, format="csr"))

    tagged = np.array([s[0] == 0 for s in states])
    busy = np.array([s[0] == 0 and any(c == 0 for c in s[1:]) for s in states])
    pi = float(stationary[tagged].sum())
    return BackoffChainResult(p_c=float(stationary[busy].sum()) / pi, pi=pi, states=size)


def _stationary(balance: sparse.spmatrix) -> np.ndarray:
    """Solve balance·x = 0 with Σx = 1 by replacing the first equation."""
    size = balance.shape[0]
    system = sparse.lil_matrix(balance)
    system[0, :] = np.ones(size)
    rhs = np.zeros(size)
    rhs[0] = 1.0
    solution = sparse_linalg.spsolve(sparse.csc_matrix(system), rhs)
    solution = np.clip(np.asarray(solution, dtype=float), 0.0, None)
    return solution / solution.sum()


@dataclass(frozen=True, eq=False)
class ExactQueueSolution:
    """Stationary law of the multiset chain and its (sessions, units) marginal."""

    states: Tuple[Tuple[int, ...], ...]
    probabilities: np.ndarray
    occupancy: np.ndarray = field(repr=False)

    def total_variation(self, other: np.ndarray) -> float:
        return 0.5 * float(np.abs(self.occupancy - other).sum())


def exact_ctmc_resq(spec: QueueSpec) -> ExactQueueSolution:
    """Build the full generator over demand multisets and solve it.

    Raises:
        StateSpaceError: if the reachable state space exceeds the guard.
    """
    K, R = spec.servers, spec.resources
    occupancy = np.zeros((K + 1, R + 1))
    empty: Tuple[int, ...] = ()
    if spec.total_load == 0:
        occupancy[0, 0] = 1.0
        return ExactQueueSolution((empty,), np.ones(1), occupancy)

    rates: Dict[int, float] = {}
    for load, pmf in zip(spec.loads, spec.class_pmfs):
        for j, p in pmf.to_dict().items():
            if 1 <= j <= R and load * p > 0:
                rates[j] = rates.get(j, 0.0) + load * p

    index: Dict[Tuple[int, ...], int] = {empty: 0}
    order: List[Tuple[int, ...]] = [empty]
    queue = deque([empty])
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []

    def target(state: Tuple[int, ...]) -> int:
        if state not in index:
            if len(index) >= C.CTMC_STATE_GUARD:
                raise StateSpaceError(f"Queue chain exceeds {C.CTMC_STATE_GUARD} states")
            index[state] = len(order)
            order.append(state)
            queue.append(state)
        return index[state]

    while queue:
        state = queue.popleft()
        here = index[state]
        used = sum(state)
        if len(state) < K:
            for j, rate in rates.items():
                if used + j <= R:
                    rows.append(here)
                    cols.append(target(tuple(sorted(state + (j,)))))
                    vals.append(rate)
        for j, count in Counter(state).items():
            reduced = list(state)
            reduced.remove(j)
            rows.append(here)
            cols.append(target(tuple(reduced)))
            vals.append(float(count))

    size = len(order)
    generator = sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
    generator = generator - sparse.diags(np.asarray(generator.sum(axis=1)).ravel())
    stationary = _stationary(generator.T.tocsr())
    for state, p in zip(order, stationary):
        occupancy[len(state), sum(state)] += p
    logger.debug(f"Exact queue chain solved over {size} states")
    return ExactQueueSolution(tuple(order), stationary, occupancy)


def _sample_radii(region: Region, rng: np.random.Generator, samples: int) -> np.ndarray:
    return np.sqrt(rng.uniform(region.inner_radius**2, region.outer_radius**2, samples))


def _sample_ci(values: np.ndarray, confidence: float) -> EstimateWithCI:
    """Interval for the mean of i.i.d. samples."""
    return batch_means(values, confidence)


def mc_mean_blockage(
    radius: float,
    dep: DeploymentConfig,
    receiver_height: Optional[float] = None,
    samples: int = 100_000,
    seed: int = C.DEFAULT_SEED,
    confidence: float = C.DEFAULT_CONFIDENCE,
) -> EstimateWithCI:
    rng = make_generator(seed, STAGE_BLOCKAGE)
    r = _sample_radii(Region.disk(radius), rng, samples)
    return _sample_ci(np.asarray(blockage_probability(r, dep, receiver_height)), confidence)


def mc_sinr_cdf_no_fading(
    x: float,
    region: Region,
    params: StateParams,
    dh: float,
    samples: int = 100_000,
    seed: int = C.DEFAULT_SEED,
    confidence: float = C.DEFAULT_CONFIDENCE,
) -> EstimateWithCI:
    rng = make_generator(seed, STAGE_SINR)
    r = _sample_radii(region, rng, samples)
    y = np.sqrt(r * r + dh * dh)
    sinr_db = 10.0 * math.log10(params.link_constant) - 10.0 * params.exponent * np.log10(y)
    return _sample_ci((sinr_db <= x).astype(float), confidence)


def mc_demand_mean(
    region: Region,
    dep: DeploymentConfig,
    radio: RadioConfig,
    mcs: McsTable,
    min_rate: float,
    resource_unit_bw: float,
    r_cap: int,
    samples: int = 100_000,
    seed: int = C.DEFAULT_SEED,
    confidence: float = C.DEFAULT_CONFIDENCE,
) -> EstimateWithCI:
    """Mean feasible resource demand from sampled positions, blockage and shadowing.

    The blockage state is drawn with the region-averaged blockage probability.
    """
    rng = make_generator(seed, STAGE_DEMAND)
    dh = dep.bs_height - dep.ue_height
    r = _sample_radii(region, rng, samples)
    y = np.sqrt(r * r + dh * dh)
    p_b = mean_blockage_probability(region.outer_radius, dep, dep.bs_height, region.inner_radius)
    blocked = rng.random(samples) < p_b
    los = StateParams.for_state(radio, PropagationState.LOS)
    nlos = StateParams.for_state(radio, PropagationState.BLOCKED)
    exponent = np.where(blocked, nlos.exponent, los.exponent)
    sigma = np.where(blocked, nlos.sigma_db, los.sigma_db)
    sinr_db = (
        10.0 * math.log10(los.link_constant)
        - 10.0 * exponent * np.log10(y)
        + sigma * rng.standard_normal(samples)
    )

    demands = np.array(
        [resource_demand(min_rate, e, resource_unit_bw) for e in mcs.efficiencies]
    )
    row = np.searchsorted(mcs.thresholds_db, sinr_db, side="right") - 1
    feasible = row >= 0
    values = demands[np.clip(row, 0, None)]
    feasible &= values <= r_cap
    return _sample_ci(values[feasible].astype(float), confidence)


def mc_mean_spectral_efficiency(
    radius: float,
    dep: DeploymentConfig,
    radio: RadioConfig,
    tx_height: Optional[float] = None,
    samples: int = 100_000,
    seed: int = C.DEFAULT_SEED,
    confidence: float = C.DEFAULT_CONFIDENCE,
) -> EstimateWithCI:
    rng = make_generator(seed, STAGE_EFFICIENCY)
    dh = (dep.bs_height if tx_height is None else tx_height) - dep.ue_height
    r = _sample_radii(Region.disk(radius), rng, samples)
    y = np.maximum(np.sqrt(r * r + dh * dh), C.MIN_PATHLOSS_DISTANCE)
    sinr = np.asarray(mean_sinr(y, dep, radio, tx_height))
    return _sample_ci(np.log2(1.0 + sinr), confidence)
