"""SINR distributions, MCS discretization and spectral-efficiency summaries."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize, special

from . import constants as C
from .config import DeploymentConfig, RadioConfig
from .exceptions import ConfigError, DegenerateCellError, DomainError
from .geometry import (
    PropagationState,
    height_difference,
    linear_to_db,
    link_constant,
    mean_blockage_probability,
    mean_sinr,
)
from .pmf import DiscretePmf

logger = logging.getLogger(__name__)

__all__ = [
    "DemandDistribution",
    "DiscretePmf",
    "McsTable",
    "Region",
    "RegionKind",
    "SinrDistribution",
    "StateParams",
    "b_min",
    "demand_pmf",
    "distance_cdf_3d",
    "efficiency_map",
    "load_mcs_table",
    "mean_spectral_efficiency",
    "sinr_cdf_closed_form",
    "sinr_cdf_mixture",
    "sinr_cdf_no_fading",
    "sinr_cdf_with_fading",
]


class RegionKind(Enum):
    DISK = "disk"
    ANNULUS = "annulus"


@dataclass(frozen=True)
class Region:
    """Disk or annulus of UE positions around the base station (2D radii in m)."""

    inner_radius: float
    outer_radius: float

    def __post_init__(self) -> None:
        if not 0 <= self.inner_radius < self.outer_radius:
            raise DomainError(
                f"Region needs 0 <= inner < outer, got {self.inner_radius}, {self.outer_radius}"
            )

    @classmethod
    def disk(cls, radius: float) -> "Region":
        return cls(0.0, radius)

    @classmethod
    def annulus(cls, inner: float, outer: float) -> "Region":
        return cls(inner, outer)

    @property
    def kind(self) -> RegionKind:
        return RegionKind.DISK if self.inner_radius == 0 else RegionKind.ANNULUS

    @property
    def area_factor(self) -> float:
        """outer² − inner², the normalizer of the uniform radial density."""
        return self.outer_radius**2 - self.inner_radius**2

    def distance_bounds(self, dh: float) -> Tuple[float, float]:
        """Support of the 3D distance for a height difference ``dh``."""
        return (
            math.hypot(self.inner_radius, dh),
            math.hypot(self.outer_radius, dh),
        )


def distance_cdf_3d(x: float, region: Region, dh: float) -> float:
    """CDF of the 3D distance of a uniform position in ``region``."""
    value = (x * x - dh * dh - region.inner_radius**2) / region.area_factor
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class StateParams:
    """Path-loss and shadowing parameters of one propagation state."""

    link_constant: float
    exponent: float
    sigma_db: float

    @classmethod
    def for_state(cls, radio: RadioConfig, state: PropagationState) -> "StateParams":
        if state is PropagationState.LOS:
            return cls(link_constant(radio), radio.pathloss_exponent_los, radio.shadow_sigma_los_db)
        return cls(
            link_constant(radio), radio.pathloss_exponent_blocked, radio.shadow_sigma_blocked_db
        )

    def support_db(self, region: Region, dh: float) -> Tuple[float, float]:
        """SINR (dB) at the far and near edges of ``region``."""
        near, far = region.distance_bounds(dh)
        base = 10.0 * math.log10(self.link_constant)
        return base - 10.0 * self.exponent * math.log10(far), base - 10.0 * self.exponent * math.log10(near)


def sinr_cdf_no_fading(x: float, region: Region, params: StateParams, dh: float) -> float:
    """CDF of the SINR in dB when the only randomness is the UE position."""
    zeta = params.exponent
    log_distance_sq = (2.0 / zeta) * math.log(params.link_constant) - x * math.log(10.0) / (5.0 * zeta)
    if log_distance_sq > 700.0:
        return 0.0
    distance_sq = math.exp(log_distance_sq)
    value = 1.0 - (distance_sq - dh * dh - region.inner_radius**2) / region.area_factor
    return min(max(value, 0.0), 1.0)


def _gaussian(u: float, sigma: float) -> float:
    return math.exp(-0.5 * (u / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))


def sinr_cdf_with_fading(
    x: float, sigma: float, params: StateParams, region: Region, dh: float
) -> float:
    """Position CDF convolved with log-normal shadowing of ``sigma`` dB."""
    if sigma <= 0:
        raise DomainError(f"Shadowing sigma must be > 0, got {sigma}")
    span = C.FADING_SPAN_SIGMAS * sigma
    low, high = params.support_db(region, dh)
    kinks = [edge - x for edge in (low, high) if -span < edge - x < span]
    value, _ = integrate.quad(
        lambda u: sinr_cdf_no_fading(x + u, region, params, dh) * _gaussian(u, sigma),
        -span,
        span,
        points=kinks or None,
        epsabs=C.QUAD_ABS_TOLERANCE,
        limit=C.QUAD_SUBDIVISIONS,
    )
    return min(max(value, 0.0), 1.0)


def sinr_cdf_closed_form(
    x: float, sigma: float, params: StateParams, region: Region, dh: float
) -> float:
    """Error-function form of :func:`sinr_cdf_with_fading`."""
    if sigma <= 0:
        raise DomainError(f"Shadowing sigma must be > 0, got {sigma}")
    zeta = params.exponent
    k = math.log(10.0) / (5.0 * zeta)
    a = params.link_constant ** (2.0 / zeta)
    low, high = params.support_db(region, dh)
    offset = (dh * dh + region.inner_radius**2) / region.area_factor

    phi_high = special.ndtr((high - x) / sigma)
    phi_low = special.ndtr((low - x) / sigma)
    shifted = special.ndtr((high - x + k * sigma**2) / sigma) - special.ndtr(
        (low - x + k * sigma**2) / sigma
    )
    exponential = math.exp(-k * x + 0.5 * (k * sigma) ** 2)
    value = (
        (1.0 - phi_high)
        + (1.0 + offset) * (phi_high - phi_low)
        - (a / region.area_factor) * exponential * shifted
    )
    return min(max(float(value), 0.0), 1.0)


def mix_branches(p_blocked: float, blocked: float, los: float) -> float:
    return p_blocked * blocked + (1.0 - p_blocked) * los


@dataclass(frozen=True)
class SinrDistribution:
    """SINR distribution of UEs uniformly placed in a region, both states mixed."""

    region: Region
    blockage: float
    los: StateParams
    blocked: StateParams
    dh: float
    method: str = "quadrature"

    @classmethod
    def build(
        cls,
        region: Region,
        dep: DeploymentConfig,
        radio: RadioConfig,
        tx_height: Optional[float] = None,
        method: str = "quadrature",
    ) -> "SinrDistribution":
        dh = height_difference(dep, tx_height)
        blockage = mean_blockage_probability(
            region.outer_radius, dep, dep.ue_height + dh, region.inner_radius
        )
        return cls(
            region=region,
            blockage=blockage,
            los=StateParams.for_state(radio, PropagationState.LOS),
            blocked=StateParams.for_state(radio, PropagationState.BLOCKED),
            dh=dh,
            method=method,
        )

    def state_cdf(self, x: float, params: StateParams) -> float:
        if self.method == "closed_form":
            return sinr_cdf_closed_form(x, params.sigma_db, params, self.region, self.dh)
        return sinr_cdf_with_fading(x, params.sigma_db, params, self.region, self.dh)

    def cdf(self, x: float) -> float:
        if math.isinf(x):
            return 1.0 if x > 0 else 0.0
        return mix_branches(
            self.blockage, self.state_cdf(x, self.blocked), self.state_cdf(x, self.los)
        )


def sinr_cdf_mixture(
    x: float,
    region: Region,
    dep: DeploymentConfig,
    radio: RadioConfig,
    tx_height: Optional[float] = None,
) -> float:
    """Blockage-weighted mixture of the per-state faded SINR CDFs."""
    return SinrDistribution.build(region, dep, radio, tx_height).cdf(x)


@dataclass(frozen=True)
class McsTable:
    """SINR thresholds (dB) and spectral efficiencies (bit/s/Hz) of one band."""

    thresholds_db: Tuple[float, ...]
    efficiencies: Tuple[float, ...]
    name: str = ""

    def __post_init__(self) -> None:
        if not self.thresholds_db or len(self.thresholds_db) != len(self.efficiencies):
            raise ConfigError(f"MCS table {self.name!r} needs matching, non-empty columns")
        if any(b <= a for a, b in zip(self.thresholds_db, self.thresholds_db[1:])):
            raise ConfigError(f"MCS table {self.name!r}: thresholds must strictly increase")
        if any(b <= a for a, b in zip(self.efficiencies, self.efficiencies[1:])):
            raise ConfigError(f"MCS table {self.name!r}: efficiencies must strictly increase")
        if self.efficiencies[0] <= 0:
            raise ConfigError(f"MCS table {self.name!r}: efficiencies must be positive")

    @classmethod
    def from_text(cls, text: str, name: str = "") -> "McsTable":
        thresholds: List[float] = []
        efficiencies: List[float] = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            columns = line.split()
            if len(columns) != 2:
                raise ConfigError(f"MCS table {name!r} line {number}: expected two columns")
            try:
                thresholds.append(float(columns[0]))
                efficiencies.append(float(columns[1]))
            except ValueError:
                raise ConfigError(f"MCS table {name!r} line {number}: not a number") from None
        return cls(tuple(thresholds), tuple(efficiencies), name)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "McsTable":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read MCS table {path}: {e}") from e
        return cls.from_text(text, name=path.name)

    def to_text(self) -> str:
        lines = [f"# {self.name}" if self.name else "# MCS table", "# threshold_db efficiency"]
        lines += [f"{t:g} {e:g}" for t, e in self.rows]
        return "\n".join(lines) + "\n"

    @property
    def rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.thresholds_db, self.efficiencies))

    def check_outage_threshold(self, outage_sinr_db: float, tolerance: float = 1e-9) -> None:
        if abs(self.thresholds_db[0] - outage_sinr_db) > tolerance:
            raise ConfigError(
                f"MCS table {self.name!r} starts at {self.thresholds_db[0]} dB but the "
                f"outage threshold is {outage_sinr_db} dB"
            )

    def efficiency_at(self, sinr_db: float) -> float:
        """Efficiency of the highest MCS whose threshold is met; 0 below the first."""
        index = int(np.searchsorted(self.thresholds_db, sinr_db, side="right")) - 1
        return self.efficiencies[index] if index >= 0 else 0.0


def load_mcs_table(radio: RadioConfig, default_path: Path) -> McsTable:
    """MCS table configured for a band, or the bundled one."""
    table = McsTable.from_file(radio.mcs_table or default_path)
    table.check_outage_threshold(radio.outage_sinr_db)
    return table


@dataclass(frozen=True)
class DemandDistribution:
    """Resource demand of feasible sessions plus the infeasible share.

    ``row_demands[k]`` is the demand of sessions served with MCS row ``k``.
    """

    pmf: DiscretePmf
    infeasible_mass: float
    row_demands: Tuple[int, ...]


def resource_demand(min_rate: float, efficiency: float, resource_unit_bw: float) -> int:
    return max(1, math.ceil(min_rate / (efficiency * resource_unit_bw) - C.CEIL_SLACK))


def demand_pmf(
    distribution: Union[SinrDistribution, Callable[[float], float]],
    mcs: McsTable,
    min_rate: float,
    resource_unit_bw: float,
    r_cap: int,
) -> DemandDistribution:
    """Discretize an SINR CDF into a resource-demand pmf.

    ``distribution`` is a :class:`SinrDistribution` or any SINR CDF in dB.
    Mass below the first threshold, or needing more than ``r_cap`` units, is
    reported as infeasible and excluded from the normalized pmf.

    Raises:
        DegenerateCellError: if no mass is feasible.
    """
    if min_rate <= 0:
        raise DomainError("Minimum rate must be > 0")
    if r_cap < 1:
        raise DomainError("Resource cap must be >= 1")
    cdf = distribution.cdf if isinstance(distribution, SinrDistribution) else distribution

    edges = [cdf(t) for t in mcs.thresholds_db] + [1.0]
    demands = tuple(resource_demand(min_rate, e, resource_unit_bw) for e in mcs.efficiencies)
    weights = np.zeros(r_cap + 1)
    infeasible = edges[0]
    for k, j in enumerate(demands):
        mass = max(edges[k + 1] - edges[k], 0.0)
        if j > r_cap:
            infeasible += mass
        else:
            weights[j] += mass

    if weights.sum() <= 0:
        raise DegenerateCellError(
            f"No feasible demand: all SINR mass is below {mcs.thresholds_db[0]} dB "
            f"or needs more than {r_cap} units"
        )
    pmf = DiscretePmf.from_weights(weights)
    logger.debug(f"Demand pmf mean {pmf.mean():.3f} units, infeasible mass {infeasible:.3e}")
    return DemandDistribution(pmf=pmf, infeasible_mass=min(infeasible, 1.0), row_demands=demands)


def mean_spectral_efficiency(
    radius: float,
    dep: DeploymentConfig,
    radio: RadioConfig,
    tx_height: Optional[float] = None,
    sinr: Optional[Callable[[float], float]] = None,
) -> float:
    """Mean Shannon efficiency log2(1+S) over a uniformly occupied disk.

    ``sinr`` overrides the SINR as a function of 3D distance; it defaults to
    :func:`nru_offload.geometry.mean_sinr` of the band.
    """
    if radius <= 0:
        raise DomainError(f"Radius must be > 0, got {radius}")
    dh = height_difference(dep, tx_height)
    sinr_at = sinr or (lambda y: mean_sinr(y, dep, radio, tx_height))

    def integrand(x: float) -> float:
        y = max(math.hypot(x, dh), C.MIN_PATHLOSS_DISTANCE)
        return 2.0 * x / radius**2 * math.log2(1.0 + sinr_at(y))

    value, _ = integrate.quad(
        integrand, 0.0, radius, epsrel=C.QUAD_REL_TOLERANCE, limit=C.QUAD_SUBDIVISIONS
    )
    return value


def b_min(min_rate: float, mean_efficiency: float, resource_unit_bw: float) -> int:
    """Resource units an offloaded session needs at the mean efficiency."""
    if mean_efficiency <= 0:
        raise DomainError("Mean spectral efficiency must be > 0")
    return math.ceil(min_rate / (mean_efficiency * resource_unit_bw) - C.CEIL_SLACK)


def _distance_at_sinr(
    threshold_db: float,
    bounds: Tuple[float, float],
    dep: DeploymentConfig,
    radio: RadioConfig,
    tx_height: Optional[float],
) -> float:
    near, far = bounds

    def gap(y: float) -> float:
        return float(linear_to_db(mean_sinr(y, dep, radio, tx_height))) - threshold_db

    if gap(near) <= 0:
        return near
    if gap(far) >= 0:
        return far
    return float(optimize.brentq(gap, near, far, xtol=1e-9))


def efficiency_map(
    demand: DemandDistribution,
    licensed_mcs: McsTable,
    unlicensed_mcs: McsTable,
    region: Region,
    dep: DeploymentConfig,
    licensed: RadioConfig,
    unlicensed: RadioConfig,
    unlicensed_height: Optional[float] = None,
) -> Dict[int, float]:
    """Unlicensed spectral efficiency m_j for every licensed demand class j.

    Class ``j`` covers the licensed SINR interval of the MCS rows that need
    ``j`` units. Its distance pre-image is mapped to its midpoint and the
    unlicensed MCS table is read at the unlicensed SINR of that position.
    """
    dh = height_difference(dep)
    dh_unlicensed = height_difference(dep, unlicensed_height)
    bounds = region.distance_bounds(dh)
    thresholds: Sequence[float] = licensed_mcs.thresholds_db

    mapping: Dict[int, float] = {}
    for j in sorted(set(demand.row_demands)):
        rows = [k for k, d in enumerate(demand.row_demands) if d == j]
        weakest = thresholds[rows[0]]
        strongest = thresholds[rows[-1] + 1] if rows[-1] + 1 < len(thresholds) else None
        far = _distance_at_sinr(weakest, bounds, dep, licensed, None)
        near = bounds[0] if strongest is None else _distance_at_sinr(
            strongest, bounds, dep, licensed, None
        )
        midpoint = 0.5 * (near + far)
        r_mid = math.sqrt(max(midpoint**2 - dh**2, 0.0))
        y_unlicensed = max(math.hypot(r_mid, dh_unlicensed), C.MIN_PATHLOSS_DISTANCE)
        sinr_db = float(linear_to_db(mean_sinr(y_unlicensed, dep, unlicensed, unlicensed_height)))
        mapping[j] = unlicensed_mcs.efficiency_at(sinr_db)
    return mapping
