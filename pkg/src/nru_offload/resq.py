"""Multi-server resource-loss queue of the licensed band.

Sessions arrive in Poisson flows, hold a server and a random number of
resource units for an exponential time, and are lost (or offloaded) when
either is missing. The normalization table G(n, r) gives every loss
probability without enumerating the state space.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import special

from .constants import STATIONARY_SIZE_GUARD
from .exceptions import (
    CapacityError,
    DegenerateThresholdError,
    DomainError,
    NoOffloadError,
    NumericalError,
)
from .pmf import DiscretePmf, mixture

logger = logging.getLogger(__name__)

BASELINE = "baseline"
FAT = "fat"
SLIM = "slim"


def convolve(a: DiscretePmf, b: DiscretePmf, cap: Optional[int] = None) -> DiscretePmf:
    """Distribution of the sum, truncated at ``cap`` with the excess kept as deficit."""
    full = np.convolve(a.probabilities, b.probabilities)
    if cap is None or full.size <= cap + 1:
        kept = full
    else:
        kept = full[: cap + 1]
    return DiscretePmf(kept, deficit=max(0.0, 1.0 - float(kept.sum())))


def k_fold(pmf: DiscretePmf, k: int, cap: Optional[int] = None) -> DiscretePmf:
    """k-fold convolution of ``pmf`` with itself; ``k = 0`` gives unit mass at 0."""
    if k < 0:
        raise DomainError(f"Convolution power must be >= 0, got {k}")
    result = DiscretePmf.delta(0)
    for _ in range(k):
        result = convolve(result, pmf, cap)
    return result


@dataclass(frozen=True)
class QueueSpec:
    """K servers, R resource units and per-class offered loads with demand pmfs."""

    servers: int
    resources: int
    loads: Tuple[float, ...]
    class_pmfs: Tuple[DiscretePmf, ...]

    def __post_init__(self) -> None:
        if self.servers < 1 or self.resources < 1:
            raise DomainError("A queue needs at least one server and one resource unit")
        if len(self.loads) != len(self.class_pmfs) or not self.loads:
            raise DomainError("Each class needs one load and one demand pmf")
        if any(rho < 0 for rho in self.loads):
            raise DomainError("Offered loads must be non-negative")

    @property
    def total_load(self) -> float:
        return float(sum(self.loads))

    def aggregated_pmf(self) -> DiscretePmf:
        """Load-weighted demand pmf of the merged arrival flow."""
        if self.total_load == 0:
            return self.class_pmfs[0]
        return mixture(zip(self.loads, self.class_pmfs))


@dataclass(frozen=True, eq=False)
class GTable:
    """G(n, r) = Σ_{i≤n} ρ^i/i! Σ_{j≤r} p^(i)_j for n ≤ K, r ≤ R.

    ``terms[i, r]`` holds ρ^i/i!·p^(i)_r, the unnormalized stationary
    probability of i sessions occupying r units. Every term carries the
    common factor exp(-log_scale); only ratios of table entries are used.
    """

    servers: int
    resources: int
    load: float
    pmf: DiscretePmf
    terms: np.ndarray
    values: np.ndarray
    log_scale: float = 0.0
    blocked_mass: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def g(self, n: int, r: int) -> float:
        if n < 0 or r < 0:
            return 0.0
        return float(self.values[min(n, self.servers), min(r, self.resources)])

    @property
    def normalization(self) -> float:
        return float(self.values[self.servers, self.resources])

    @property
    def p0(self) -> float:
        return float(self.terms[0, 0]) / self.normalization

    def blocking(self, j: int) -> float:
        """Probability that a session needing ``j`` units finds no room."""
        if j > self.resources:
            return 1.0
        return min(float(self.blocked_mass[j]) / self.normalization, 1.0)

    def acceptance(self, j: int) -> float:
        """Probability that a session needing ``j`` units finds room."""
        if j > self.resources:
            return 0.0
        return self.g(self.servers - 1, self.resources - j) / self.normalization


def _blocked_mass(terms: np.ndarray) -> np.ndarray:
    """Mass of the states that refuse a j-unit session, for j = 0..R.

    Either all K servers are busy, or fewer are busy but more than R - j
    units are held.
    """
    K = terms.shape[0] - 1
    full = float(terms[K].sum())
    held = terms[:K].sum(axis=0)
    # above[m] = Σ_{r ≥ m} held[r]
    above = np.append(np.cumsum(held[::-1])[::-1], 0.0)
    R = held.size - 1
    return np.array([full + above[R - j + 1] for j in range(R + 1)])


def build_g_table(spec: QueueSpec, aggregated_pmf: Optional[DiscretePmf] = None) -> GTable:
    """Normalization table of the queue, built from max-rescaled log weights."""
    pmf = aggregated_pmf if aggregated_pmf is not None else spec.aggregated_pmf()
    rho = spec.total_load
    K, R = spec.servers, spec.resources

    n_rows = K + 1 if rho > 0 else 1
    i = np.arange(n_rows)
    log_weights = np.zeros(n_rows)
    if rho > 0:
        log_weights = i * math.log(rho) - special.gammaln(i + 1)
    log_scale = float(log_weights.max())
    weights = np.exp(log_weights - log_scale)

    kernel = pmf.probabilities[: R + 1]
    terms = np.zeros((K + 1, R + 1))
    power = np.zeros(R + 1)
    power[0] = 1.0
    for row in range(n_rows):
        terms[row] = weights[row] * power
        power = np.convolve(power, kernel)[: R + 1]

    values = terms.cumsum(axis=0).cumsum(axis=1)
    if not np.all(np.isfinite(values)) or values[K, R] <= 0:
        raise NumericalError(f"Normalization constants degenerate at load {rho:.3g}")
    logger.debug(
        f"G table built: K={K}, R={R}, rho={rho:.4g}, log G(K,R)={math.log(values[K, R]) + log_scale:.6g}"
    )
    return GTable(K, R, rho, pmf, terms, values, log_scale, _blocked_mass(terms))


def stationary_distribution(spec: QueueSpec, g: Optional[GTable] = None) -> np.ndarray:
    """P[k, r]: probability of k sessions in service holding r units."""
    if spec.servers * spec.resources > STATIONARY_SIZE_GUARD:
        raise CapacityError(
            f"K·R = {spec.servers * spec.resources} exceeds {STATIONARY_SIZE_GUARD}; "
            "use the G-table losses instead"
        )
    table = g if g is not None else build_g_table(spec)
    return table.terms / table.normalization


def class_loss_probability(g: GTable, class_pmf: DiscretePmf) -> float:
    """Loss probability of a class with the given demand pmf.

    Truncated demand mass counts as lost.
    """
    blocked = sum(p * g.blocking(j) for j, p in class_pmf.to_dict().items())
    return min(max(blocked + class_pmf.deficit, 0.0), 1.0)


def class_loss_probability_direct(g: GTable, class_pmf: DiscretePmf) -> float:
    """Loss probability summed over the stationary states that refuse the session."""
    R = g.resources
    states = g.terms / g.normalization
    padded = class_pmf.padded(max(len(class_pmf), R + 2))
    # exceeds[r] = P(demand > R - r)
    tail = np.cumsum(padded[::-1])[::-1]
    exceeds = np.array([float(tail[R - r + 1]) for r in range(R + 1)])
    blocked = float(states[g.servers].sum()) + float((states[: g.servers] * exceeds).sum())
    return min(max(blocked + class_pmf.deficit, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class StrategySplit:
    """Routing of class-2 (offloadable) sessions under one strategy.

    ``direct_cut`` separates the demands sent straight to the unlicensed band:
    above it for fat, at or below it for slim.
    """

    strategy: str
    threshold: Optional[float]
    pi_direct: float
    class1_pmf: DiscretePmf
    class2_pmf: DiscretePmf
    licensed_class2_pmf: DiscretePmf
    licensed_loads: Tuple[float, float]
    licensed_pmf: DiscretePmf
    direct_cut: Optional[int] = None

    def queue_spec(self, servers: int, resources: int) -> QueueSpec:
        return QueueSpec(
            servers=servers,
            resources=resources,
            loads=self.licensed_loads,
            class_pmfs=(self.class1_pmf, self.licensed_class2_pmf),
        )

    def goes_direct(self, j: int) -> bool:
        if self.direct_cut is None:
            return False
        if self.strategy == FAT:
            return j > self.direct_cut
        return j <= self.direct_cut


def make_strategy_split(
    strategy: str,
    p1: DiscretePmf,
    p2: DiscretePmf,
    lambda1: float,
    lambda2: float,
    mu: float,
    threshold: Optional[float] = None,
    allow_full_offload: bool = False,
) -> StrategySplit:
    """Split class-2 sessions between direct offload and the licensed queue.

    Raises:
        DegenerateThresholdError: for an inadmissible threshold, or when the
            threshold leaves no class-2 mass in the licensed band and
            ``allow_full_offload`` is false.
    """
    if mu <= 0:
        raise DomainError("Service rate must be > 0")
    rho1, rho2 = lambda1 / mu, lambda2 / mu

    cut: Optional[int] = None
    pi_direct = 0.0
    retained = 1.0
    if strategy == FAT:
        limit = math.inf if threshold is None else threshold
        if limit < 0:
            raise DegenerateThresholdError(f"Fat threshold must be >= 0, got {threshold}")
        if math.isfinite(limit):
            cut = int(math.floor(limit))
            pi_direct = p2.mass_between(cut + 1)
            retained = p2.mass_between(0, cut)
    elif strategy == SLIM:
        limit = -1 if threshold is None else threshold
        if limit < -1:
            raise DegenerateThresholdError(f"Slim threshold must be >= -1, got {threshold}")
        cut = int(math.floor(limit))
        pi_direct = p2.mass_between(0, cut)
        retained = p2.mass_between(cut + 1)
    elif strategy != BASELINE:
        raise DomainError(f"Unknown strategy: {strategy!r}")

    if pi_direct == 0.0:
        licensed2, rho_s2 = p2, rho2
    elif retained <= 0.0:
        if not allow_full_offload:
            raise DegenerateThresholdError(
                f"{strategy} threshold {threshold} leaves no class-2 mass in the licensed band"
            )
        licensed2, rho_s2, pi_direct = p2, 0.0, 1.0
    else:
        if strategy == FAT:
            licensed2, _ = p2.restricted(0, cut)
        else:
            licensed2, _ = p2.restricted(cut + 1 if cut is not None else 0)
        rho_s2 = rho2 * (1.0 - pi_direct)

    if rho1 + rho_s2 > 0:
        licensed = mixture([(rho1, p1), (rho_s2, licensed2)])
    else:
        licensed = licensed2

    return StrategySplit(
        strategy=strategy,
        threshold=threshold if strategy != BASELINE else None,
        pi_direct=pi_direct,
        class1_pmf=p1,
        class2_pmf=p2,
        licensed_class2_pmf=licensed2,
        licensed_loads=(rho1, rho_s2),
        licensed_pmf=licensed,
        direct_cut=cut,
    )


def offload_probability(split: StrategySplit, g: GTable) -> float:
    """Probability that a class-2 session ends up in the unlicensed band."""
    blocked = class_loss_probability(g, split.licensed_class2_pmf)
    return min(split.pi_direct + (1.0 - split.pi_direct) * blocked, 1.0)


def _offloaded_weights(split: StrategySplit, blocked_share: np.ndarray) -> np.ndarray:
    size = max(len(split.class2_pmf), len(split.licensed_class2_pmf))
    licensed = split.licensed_class2_pmf.padded(size)
    weights = (1.0 - split.pi_direct) * licensed * blocked_share[:size]
    for j in split.class2_pmf.support():
        if split.goes_direct(int(j)):
            weights[j] += split.class2_pmf[int(j)]
    return weights


def _blocked_shares(g: GTable, size: int) -> np.ndarray:
    return np.array([g.blocking(j) for j in range(size)])


def offloaded_demand_pmf(split: StrategySplit, g: GTable) -> DiscretePmf:
    """Demand pmf of sessions that end up in the unlicensed band.

    Raises:
        NoOffloadError: if nothing is offloaded.
    """
    pi_offload = offload_probability(split, g)
    if pi_offload <= 0:
        raise NoOffloadError(f"{split.strategy}: offload probability is zero")
    size = max(len(split.class2_pmf), len(split.licensed_class2_pmf))
    weights = _offloaded_weights(split, _blocked_shares(g, size))
    return DiscretePmf.from_weights(weights)


def offloaded_demand_pmf_stationary(split: StrategySplit, g: GTable) -> DiscretePmf:
    """Same pmf as :func:`offloaded_demand_pmf`, summed over stationary states."""
    pi_offload = offload_probability(split, g)
    if pi_offload <= 0:
        raise NoOffloadError(f"{split.strategy}: offload probability is zero")
    K, R = g.servers, g.resources
    states = g.terms / g.normalization
    no_server = float(states[K].sum())
    size = max(len(split.class2_pmf), len(split.licensed_class2_pmf))
    shares = np.ones(size)
    for j in range(min(size, R + 1)):
        shares[j] = no_server + float(states[:K, R - j + 1:].sum())
    weights = _offloaded_weights(split, shares)
    return DiscretePmf.from_weights(weights)
