"""Deployment geometry, blockage, propagation and coverage radii.

All functions are pure. Quantities cross the dB/linear boundary only through
:func:`db_to_linear` and :func:`linear_to_db`; everything in between is linear.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate, special

from . import constants as C
from .config import DeploymentConfig, RadioConfig
from .exceptions import CoverageInfeasibleError, DomainError, GeometryError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class PropagationState(Enum):
    """Line-of-sight state of a link."""

    LOS = "los"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class CoverageResult:
    """Coverage radii of one cell in metres."""

    r_sinr: float
    r_voronoi: float
    r_cell: float

    @classmethod
    def from_radii(cls, r_sinr: float, r_voronoi: float) -> "CoverageResult":
        return cls(r_sinr=r_sinr, r_voronoi=r_voronoi, r_cell=min(r_sinr, r_voronoi))


def _scalar(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def db_to_linear(value_db: ArrayLike) -> ArrayLike:
    return _scalar(np.power(10.0, np.asarray(value_db, dtype=float) / 10.0))


def linear_to_db(value: ArrayLike) -> ArrayLike:
    return _scalar(10.0 * np.log10(np.asarray(value, dtype=float)))


def height_difference(dep: DeploymentConfig, tx_height: Optional[float] = None) -> float:
    """Vertical distance between a transmitter and the UE plane."""
    height = dep.bs_height if tx_height is None else tx_height
    if height <= dep.ue_height:
        raise GeometryError(
            f"Transmitter height {height} m must exceed UE height {dep.ue_height} m"
        )
    return height - dep.ue_height


def blockage_probability(
    r: ArrayLike, dep: DeploymentConfig, receiver_height: Optional[float] = None
) -> ArrayLike:
    """Probability that human bodies block the LoS path at 2D distance ``r``.

    ``receiver_height`` is the height of the far end of the link (the BS or
    AP); it defaults to the BS height.

    Raises:
        GeometryError: if the far end is not above the UE.
        DomainError: for negative distances.
    """
    height = dep.bs_height if receiver_height is None else receiver_height
    if height <= dep.ue_height:
        raise GeometryError(
            f"Receiver height {height} m must exceed UE height {dep.ue_height} m"
        )
    distance = np.asarray(r, dtype=float)
    if np.any(distance < 0):
        raise DomainError("2D distance must be non-negative")

    slope = (dep.blocker_height - dep.ue_height) / (height - dep.ue_height)
    exponent = 2.0 * dep.blocker_density * dep.blocker_radius * (
        distance * slope + dep.blocker_radius
    )
    return _scalar(-np.expm1(-exponent))


def mean_blockage_probability(
    radius: float,
    dep: DeploymentConfig,
    receiver_height: Optional[float] = None,
    inner_radius: float = 0.0,
) -> float:
    """Blockage probability averaged over a uniformly occupied disk or annulus."""
    if radius <= 0:
        raise DomainError(f"Averaging radius must be > 0, got {radius}")
    if not 0 <= inner_radius < radius:
        raise DomainError(f"Inner radius {inner_radius} must lie in [0, {radius})")
    if dep.blocker_density == 0:
        return 0.0

    area = radius**2 - inner_radius**2
    value, _ = integrate.quad(
        lambda r: blockage_probability(r, dep, receiver_height) * 2.0 * r / area,
        inner_radius,
        radius,
        epsabs=1e-14,
        epsrel=C.QUAD_REL_TOLERANCE,
        limit=C.QUAD_SUBDIVISIONS,
    )
    return min(max(value, 0.0), 1.0)


def path_loss_db(y: float, state: PropagationState, carrier_freq_ghz: float) -> float:
    """UMi street-canyon path loss at 3D distance ``y`` (m), carrier in GHz."""
    if y < C.MIN_PATHLOSS_DISTANCE:
        raise DomainError(f"Path loss model is invalid below 1 m (y={y})")
    slope = 21.0 if state is PropagationState.LOS else 31.9
    return C.PATHLOSS_INTERCEPT_DB + slope * math.log10(y) + 20.0 * math.log10(carrier_freq_ghz)


def hpbw(n: int) -> float:
    """Half-power beamwidth of an ``n``-element linear array in degrees."""
    if n < 1:
        raise DomainError(f"Element count must be >= 1, got {n}")
    return C.HPBW_NUMERATOR_DEG / n


def _array_factor(theta: float, n: int) -> float:
    x = math.pi * math.cos(theta) / 2.0
    denominator = math.sin(x)
    if abs(denominator) < 1e-12:
        return float(n)
    return math.sin(n * x) / denominator


@lru_cache(maxsize=None)
def antenna_gain(n: int) -> float:
    """Mean array-factor gain over the main lobe of an ``n``-element array."""
    half_width = math.radians(hpbw(n)) / 2.0
    lower, upper = math.pi / 2.0 - half_width, math.pi / 2.0 + half_width
    value, _ = integrate.quad(
        _array_factor,
        lower,
        upper,
        args=(n,),
        epsabs=C.ANTENNA_QUAD_ABS_TOLERANCE,
        limit=C.QUAD_SUBDIVISIONS,
    )
    return value / (upper - lower)


def array_gain(elements: Sequence[int]) -> float:
    """Gain of a planar array as the product of its per-plane gains."""
    gain = 1.0
    for n in elements:
        gain *= antenna_gain(int(n))
    return gain


def fading_margin(sigma_db: float, edge_outage_prob: float) -> float:
    """Linear shadow-fading margin that leaves ``edge_outage_prob`` outage at the edge."""
    margin_db = math.sqrt(2.0) * sigma_db * float(special.erfcinv(2.0 * edge_outage_prob))
    return db_to_linear(margin_db)


def link_constant(radio: RadioConfig) -> float:
    """Linear constant C of the SINR: P·G_tx·G_rx / ((N0·W ⊕ M_I)·A).

    The noise power N0·W (dBm) and the interference margin M_I (dB) combine in
    the dB domain before conversion.
    """
    noise_dbm = (
        radio.noise_psd_dbm_hz
        + 10.0 * math.log10(radio.bandwidth_hz)
        + radio.interference_margin_db
    )
    gains = array_gain(radio.tx_elements) * array_gain(radio.rx_elements)
    return db_to_linear(radio.tx_power_dbm - noise_dbm) * gains / radio.path_loss_constant


def state_sinr(y: ArrayLike, state: PropagationState, radio: RadioConfig) -> ArrayLike:
    """SINR without fading margin in a fixed propagation state."""
    exponent = (
        radio.pathloss_exponent_los
        if state is PropagationState.LOS
        else radio.pathloss_exponent_blocked
    )
    return link_constant(radio) * np.power(y, -exponent)


def mean_sinr(
    y: ArrayLike,
    dep: DeploymentConfig,
    radio: RadioConfig,
    tx_height: Optional[float] = None,
) -> ArrayLike:
    """Blockage-weighted SINR at 3D distance ``y`` with fading margins applied."""
    distance = np.asarray(y, dtype=float)
    if np.any(distance < C.MIN_PATHLOSS_DISTANCE):
        raise DomainError(f"SINR model is invalid below 1 m (y={y})")
    dh = height_difference(dep, tx_height)
    r = np.sqrt(np.maximum(distance * distance - dh * dh, 0.0))
    p_b = blockage_probability(r, dep, dep.ue_height + dh)

    c = link_constant(radio)
    margin_los = fading_margin(radio.shadow_sigma_los_db, radio.edge_outage_prob)
    margin_blocked = fading_margin(radio.shadow_sigma_blocked_db, radio.edge_outage_prob)
    return _scalar(
        c * distance ** (-radio.pathloss_exponent_los) * (1.0 - p_b) / margin_los
        + c * distance ** (-radio.pathloss_exponent_blocked) * p_b / margin_blocked
    )


def coverage_radius_sinr(
    dep: DeploymentConfig, radio: RadioConfig, tx_height: Optional[float] = None
) -> float:
    """2D radius at which the blocked-state SINR with margin equals the outage threshold.

    Raises:
        CoverageInfeasibleError: if even the UE directly below misses the threshold.
    """
    dh = height_difference(dep, tx_height)
    threshold = db_to_linear(radio.outage_sinr_db)
    margin = fading_margin(radio.shadow_sigma_blocked_db, radio.edge_outage_prob)
    ratio = link_constant(radio) / (threshold * margin)
    radicand = ratio ** (2.0 / radio.pathloss_exponent_blocked) - dh * dh
    if radicand <= 0:
        raise CoverageInfeasibleError(
            f"Outage threshold {radio.outage_sinr_db} dB unreachable at {radio.carrier_freq_ghz} GHz"
        )
    return math.sqrt(radicand)


def voronoi_radius(bs_density: float) -> float:
    """Radius of the circle whose area equals the mean Voronoi cell area."""
    if bs_density <= 0:
        raise DomainError(f"BS density must be > 0, got {bs_density}")
    return math.sqrt(1.0 / (math.pi * bs_density))


def coverage(
    dep: DeploymentConfig, radio: RadioConfig, tx_height: Optional[float] = None
) -> CoverageResult:
    result = CoverageResult.from_radii(
        coverage_radius_sinr(dep, radio, tx_height), voronoi_radius(dep.bs_density)
    )
    logger.debug(
        f"Coverage at {radio.carrier_freq_ghz} GHz: r_sinr={result.r_sinr:.2f} m, "
        f"r_voronoi={result.r_voronoi:.2f} m"
    )
    return result
