"""Listen-before-talk contention in the unlicensed band.

Each saturated station runs a retry chain of T+1 backoff stages; the
contention window doubles per stage. Transmission and collision
probabilities of both technologies are found as a damped fixed point, then
mixed over Poisson numbers of contenders.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy import stats
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
)

from . import constants as C
from .cache import ContentionCache
from .config import ContentionConfig
from .exceptions import ConvergenceError, DomainError, MappingError
from .pmf import DiscretePmf

logger = logging.getLogger(__name__)

default_cache = ContentionCache()


def retry_distribution(theta: float, max_retries: int) -> np.ndarray:
    """Stationary distribution of the retry stage for success probability ``theta``.

    Raises:
        DomainError: if ``theta`` is outside (0, 1] (no successful exit at 0).
    """
    if not 0 < theta <= 1:
        raise DomainError(f"Success probability must lie in (0, 1], got {theta}")
    if max_retries < 0:
        raise DomainError("Retry limit must be >= 0")
    stages = np.arange(max_retries + 1)
    if theta == 1.0:
        q = np.zeros(max_retries + 1)
        q[0] = 1.0
        return q
    log_fail = math.log1p(-theta)
    norm = -math.expm1((max_retries + 1) * log_fail)
    return theta * np.exp(stages * log_fail) / norm


def balance_residual(q: np.ndarray, theta: float) -> float:
    """Largest violation of the retry-chain balance equations and normalization."""
    last = q.size - 1
    residuals = [q[0] - (theta * q[:last].sum() + q[last]), q.sum() - 1.0]
    residuals += [q[i] - q[i - 1] * (1.0 - theta) for i in range(1, q.size)]
    return float(np.max(np.abs(residuals)))


def mean_backoff_slots(stage: int, initial_cw: int) -> float:
    """Mean number of slots spent per attempt in backoff stage ``stage``."""
    return (2**stage * initial_cw + 1) / 2


def transmission_probability(theta: float, initial_cw: int, max_retries: int) -> float:
    """Per-slot transmission probability of a saturated station."""
    q = retry_distribution(theta, max_retries)
    slots = sum(q[j] * mean_backoff_slots(j, initial_cw) for j in range(max_retries + 1))
    return 1.0 / slots


def transmission_probability_closed_form(
    theta: float, initial_cw: int, max_retries: int
) -> float:
    """Closed form of :func:`transmission_probability`; singular at theta = 1/2."""
    if theta == 0.5:
        raise DomainError("Closed form is singular at theta = 0.5")
    fail = (1.0 - theta) ** (max_retries + 1)
    doubled = 2.0 ** (max_retries + 1) * fail
    tail = (1.0 - doubled) * theta * initial_cw / (2.0 * (2.0 * theta - 1.0) * (1.0 - fail))
    return 1.0 / (0.5 + tail)


@dataclass(frozen=True)
class ContentionPoint:
    """Fixed point for ``n_nru`` NR-U and ``n_wigig`` WiGig saturated stations.

    Fields of a technology without stations are None. ``theta``, ``p_c`` and
    ``q`` describe a tagged NR-U station, the ``_w`` variants a tagged WiGig one.
    """

    n_nru: int
    n_wigig: int
    pi_n: Optional[float]
    pi_w: Optional[float]
    theta: Optional[float]
    p_c: Optional[float]
    q: Optional[Tuple[float, ...]]
    theta_w: Optional[float]
    p_c_w: Optional[float]
    q_w: Optional[Tuple[float, ...]]
    iterations: int

    @property
    def nru_success(self) -> float:
        """π_N·θ, the per-slot success probability of a tagged NR-U station."""
        if self.pi_n is None or self.theta is None:
            return 0.0
        return self.pi_n * self.theta

    @property
    def wigig_success(self) -> float:
        if self.pi_w is None or self.theta_w is None:
            return 0.0
        return self.pi_w * self.theta_w


def _collisions(
    n_nru: int, n_wigig: int, pi_n: float, pi_w: float, literal: bool
) -> Tuple[float, float]:
    if literal:
        p_c = 1.0 - (1.0 - pi_w) ** n_wigig * (1.0 - pi_n) ** n_nru
        return p_c, p_c
    p_c_n = 1.0 - (1.0 - pi_n) ** max(n_nru - 1, 0) * (1.0 - pi_w) ** n_wigig
    p_c_w = 1.0 - (1.0 - pi_n) ** n_nru * (1.0 - pi_w) ** max(n_wigig - 1, 0)
    return p_c_n, p_c_w


def _success(p_c: float, p_b: float) -> float:
    return max((1.0 - p_c) * (1.0 - p_b), C.MIN_SUCCESS_PROBABILITY)


def _iterate(n_nru: int, n_wigig: int, cfg: ContentionConfig, damping: float) -> ContentionPoint:
    p_b, T = cfg.p_b, cfg.max_retries
    pi_n = C.FIXED_POINT_START if n_nru > 0 else 0.0
    pi_w = C.FIXED_POINT_START if n_wigig > 0 else 0.0

    residual = math.inf
    for iteration in range(1, cfg.max_iterations + 1):
        p_c_n, p_c_w = _collisions(n_nru, n_wigig, pi_n, pi_w, cfg.shared_collision)
        new_n = transmission_probability(_success(p_c_n, p_b), cfg.initial_cw_nru, T) if n_nru else 0.0
        new_w = transmission_probability(_success(p_c_w, p_b), cfg.initial_cw_wigig, T) if n_wigig else 0.0
        residual = max(abs(new_n - pi_n), abs(new_w - pi_w))
        if residual < cfg.tolerance:
            pi_n, pi_w = new_n, new_w
            break
        pi_n = (1.0 - damping) * pi_n + damping * new_n
        pi_w = (1.0 - damping) * pi_w + damping * new_w
    else:
        raise ConvergenceError(
            f"Contention ({n_nru}, {n_wigig}) did not converge in {cfg.max_iterations} "
            f"iterations at damping {damping}",
            residual=residual,
        )

    p_c_n, p_c_w = _collisions(n_nru, n_wigig, pi_n, pi_w, cfg.shared_collision)
    theta_n, theta_w = _success(p_c_n, p_b), _success(p_c_w, p_b)
    return ContentionPoint(
        n_nru=n_nru,
        n_wigig=n_wigig,
        pi_n=pi_n if n_nru else None,
        pi_w=pi_w if n_wigig else None,
        theta=theta_n if n_nru else None,
        p_c=p_c_n if n_nru else None,
        q=tuple(retry_distribution(theta_n, T)) if n_nru else None,
        theta_w=theta_w if n_wigig else None,
        p_c_w=p_c_w if n_wigig else None,
        q_w=tuple(retry_distribution(theta_w, T)) if n_wigig else None,
        iterations=iteration,
    )


def solve_contention(n_nru: int, n_wigig: int, cfg: ContentionConfig) -> ContentionPoint:
    """Fixed point of transmission and collision probabilities.

    A non-converging iteration is retried with halved damping up to
    ``cfg.max_attempts`` times.

    Raises:
        ConvergenceError: with the last residual if every attempt fails.
    """
    if n_nru < 0 or n_wigig < 0:
        raise DomainError("Station counts must be non-negative")
    attempt = itertools.count()

    def run() -> ContentionPoint:
        damping = cfg.damping / 2 ** next(attempt)
        return _iterate(n_nru, n_wigig, cfg, damping)

    retrying = Retrying(
        stop=stop_after_attempt(cfg.max_attempts),
        retry=retry_if_exception_type(ConvergenceError),
        before_sleep=before_sleep_log(logger, logging.DEBUG),
        reraise=True,
    )
    return retrying(run)


def solve_contention_cached(
    n_nru: int,
    n_wigig: int,
    cfg: ContentionConfig,
    cache: Optional[ContentionCache] = None,
) -> ContentionPoint:
    store = default_cache if cache is None else cache
    key = (n_nru, n_wigig, cfg)
    point = store.get(key)
    if point is None:
        point = solve_contention(n_nru, n_wigig, cfg)
        store.set(key, point)
    return point


def _poisson_weights(load: float, truncation_mass: float) -> np.ndarray:
    if load < 0:
        raise DomainError("Offered load must be non-negative")
    if load == 0:
        return np.ones(1)
    upper = int(stats.poisson.isf(truncation_mass / 2.0, load))
    return stats.poisson.pmf(np.arange(upper + 1), load)


@dataclass(frozen=True)
class MixtureResult:
    """Poisson-mixed success probabilities of tagged NR-U and WiGig stations."""

    nru: float
    wigig: float
    grid: Tuple[int, int]
    max_iterations: int
    truncation_mass: float


def contention_mixture(
    rho_n: float,
    rho_w: float,
    cfg: ContentionConfig,
    truncation_mass: float = C.POISSON_TRUNCATION_MASS,
    jobs: int = 1,
    cache: Optional[ContentionCache] = None,
) -> MixtureResult:
    """Mix fixed points over Poisson(ρ_N) other NR-U and Poisson(ρ_W) WiGig contenders.

    The NR-U value tags one NR-U station on top of the ``i`` others, the WiGig
    value tags one WiGig station on top of the ``j`` others. Grid points may be
    solved in parallel; the reduction order is fixed.
    """
    if not 0 < truncation_mass <= 1e-6:
        raise DomainError("Truncation mass must lie in (0, 1e-6]")
    w_n = _poisson_weights(rho_n, truncation_mass)
    w_w = _poisson_weights(rho_w, truncation_mass)

    needed = sorted(
        {(i + 1, j) for i in range(w_n.size) for j in range(w_w.size)}
        | {(i, j + 1) for i in range(w_n.size) for j in range(w_w.size)}
    )
    points: Dict[Tuple[int, int], ContentionPoint]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            solved = list(pool.map(lambda nm: solve_contention_cached(nm[0], nm[1], cfg, cache), needed))
        points = dict(zip(needed, solved))
    else:
        points = {nm: solve_contention_cached(nm[0], nm[1], cfg, cache) for nm in needed}

    nru = 0.0
    wigig = 0.0
    for i in range(w_n.size):
        for j in range(w_w.size):
            weight = float(w_n[i] * w_w[j])
            nru += weight * points[(i + 1, j)].nru_success
            wigig += weight * points[(i, j + 1)].wigig_success

    logger.debug(f"Contention mixture over {w_n.size}x{w_w.size} grid: Π_N={nru:.6g}, Π_W={wigig:.6g}")
    return MixtureResult(
        nru=min(max(nru, 0.0), 1.0),
        wigig=min(max(wigig, 0.0), 1.0),
        grid=(int(w_n.size), int(w_w.size)),
        max_iterations=max(p.iterations for p in points.values()),
        truncation_mass=truncation_mass,
    )


def success_probability(
    rho_n: float,
    rho_w: float,
    cfg: ContentionConfig,
    truncation_mass: float = C.POISSON_TRUNCATION_MASS,
    jobs: int = 1,
    cache: Optional[ContentionCache] = None,
) -> float:
    """Π_N, the per-slot success probability of a tagged NR-U station."""
    return contention_mixture(rho_n, rho_w, cfg, truncation_mass, jobs, cache).nru


@dataclass(frozen=True)
class RateResult:
    """Per-class unlicensed rates (bit/s) and their pmf-weighted mean."""

    rates: Dict[int, float]
    mean: float


def attained_rates(
    success: float,
    offloaded_pmf: DiscretePmf,
    efficiencies: Mapping[int, float],
    bandwidth: float,
) -> RateResult:
    """Rate Π_N·B_U·m_j of every offloaded demand class j.

    Raises:
        MappingError: if a class in the pmf support has no efficiency.
    """
    rates: Dict[int, float] = {}
    missing: List[int] = []
    for j in offloaded_pmf.support():
        j = int(j)
        if j not in efficiencies:
            missing.append(j)
            continue
        rates[j] = success * bandwidth * efficiencies[j]
    if missing:
        raise MappingError(f"No unlicensed efficiency for demand classes {missing}")
    mean = sum(offloaded_pmf[j] * rate for j, rate in rates.items())
    return RateResult(rates=rates, mean=mean)


def qos_violation(rates: Mapping[int, float], offloaded_pmf: DiscretePmf, min_rate: float) -> float:
    """Probability that an offloaded session gets less than ``min_rate``."""
    violated = sum(offloaded_pmf[j] for j, rate in rates.items() if rate < min_rate)
    return min(max(violated, 0.0), 1.0)
