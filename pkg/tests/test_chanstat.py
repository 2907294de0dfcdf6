"""Tests for SINR distributions, MCS tables and demand discretization."""

import math

import numpy as np
import pytest

from nru_offload import constants as C
from nru_offload.chanstat import (
    McsTable,
    Region,
    RegionKind,
    SinrDistribution,
    StateParams,
    b_min,
    demand_pmf,
    distance_cdf_3d,
    efficiency_map,
    load_mcs_table,
    mean_spectral_efficiency,
    resource_demand,
    sinr_cdf_closed_form,
    sinr_cdf_no_fading,
    sinr_cdf_with_fading,
)
from nru_offload.config import DeploymentConfig, RadioConfig
from nru_offload.exceptions import ConfigError, DegenerateCellError, DomainError
from nru_offload.geometry import PropagationState, height_difference


@pytest.fixture
def deployment():
    """Default deployment."""
    return DeploymentConfig()


@pytest.fixture
def licensed():
    """Default licensed radio."""
    return RadioConfig.licensed_default()


@pytest.fixture
def blocked_params(licensed):
    """Blocked-state parameters of the licensed band."""
    return StateParams.for_state(licensed, PropagationState.BLOCKED)


@pytest.fixture
def toy_table():
    """Two-row MCS table."""
    return McsTable((0.0, 10.0), (1.0, 2.0), name="toy")


def linear_cdf(x):
    """SINR uniform on [-10, 30] dB."""
    return min(max((x + 10.0) / 40.0, 0.0), 1.0)


class TestRegion:
    """Tests for the Region class."""

    def test_kinds(self):
        """Test disk and annulus construction."""
        assert Region.disk(10.0).kind is RegionKind.DISK
        assert Region.annulus(5.0, 10.0).kind is RegionKind.ANNULUS
        assert Region.annulus(5.0, 10.0).area_factor == pytest.approx(75.0)

    @pytest.mark.parametrize("inner, outer", [(-1.0, 5.0), (5.0, 5.0), (6.0, 5.0)])
    def test_invalid(self, inner, outer):
        """Test that inner must be below outer."""
        with pytest.raises(DomainError):
            Region(inner, outer)

    def test_distance_cdf(self):
        """Test the 3D distance CDF at the support edges."""
        region = Region.disk(10.0)
        assert distance_cdf_3d(3.0, region, 3.0) == 0.0
        assert distance_cdf_3d(math.hypot(10.0, 3.0), region, 3.0) == pytest.approx(1.0)


class TestSinrCdf:
    """Tests for the SINR CDFs."""

    def test_no_fading_support(self, blocked_params, deployment):
        """Test the no-fading CDF is 0 below and 1 above its support."""
        region = Region.disk(50.0)
        dh = height_difference(deployment)
        low, high = blocked_params.support_db(region, dh)
        assert sinr_cdf_no_fading(low - 1.0, region, blocked_params, dh) == 0.0
        assert sinr_cdf_no_fading(low, region, blocked_params, dh) == pytest.approx(0.0, abs=1e-9)
        assert sinr_cdf_no_fading(high, region, blocked_params, dh) == pytest.approx(1.0, abs=1e-9)
        assert sinr_cdf_no_fading(high + 1.0, region, blocked_params, dh) == 1.0

    def test_no_fading_monotone(self, blocked_params, deployment):
        """Test the no-fading CDF is nondecreasing."""
        region = Region.annulus(20.0, 50.0)
        dh = height_difference(deployment)
        low, high = blocked_params.support_db(region, dh)
        values = [sinr_cdf_no_fading(x, region, blocked_params, dh) for x in np.linspace(low, high, 25)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("offset", [-15.0, -5.0, 0.0, 5.0, 15.0])
    def test_closed_form_matches_quadrature(self, blocked_params, deployment, offset):
        """Test the error-function form against numerical convolution."""
        region = Region.annulus(10.0, 60.0)
        dh = height_difference(deployment)
        low, high = blocked_params.support_db(region, dh)
        x = 0.5 * (low + high) + offset
        sigma = blocked_params.sigma_db
        quadrature = sinr_cdf_with_fading(x, sigma, blocked_params, region, dh)
        closed = sinr_cdf_closed_form(x, sigma, blocked_params, region, dh)
        assert closed == pytest.approx(quadrature, abs=1e-6)

    def test_nonpositive_sigma(self, blocked_params):
        """Test shadowing sigma must be positive."""
        with pytest.raises(DomainError):
            sinr_cdf_with_fading(0.0, 0.0, blocked_params, Region.disk(10.0), 8.5)
        with pytest.raises(DomainError):
            sinr_cdf_closed_form(0.0, -1.0, blocked_params, Region.disk(10.0), 8.5)

    def test_mixture_distribution(self, deployment, licensed):
        """Test the blockage-mixed distribution and its limits."""
        dist = SinrDistribution.build(Region.disk(50.0), deployment, licensed)
        assert 0 < dist.blockage < 1
        assert dist.cdf(math.inf) == 1.0
        assert dist.cdf(-math.inf) == 0.0
        assert 0.0 <= dist.cdf(-60.0) < dist.cdf(40.0) < dist.cdf(60.0) < 1.0

    def test_methods_agree(self, deployment, licensed):
        """Test the two fading methods give the same mixture CDF."""
        region = Region.disk(40.0)
        quadrature = SinrDistribution.build(region, deployment, licensed)
        closed = SinrDistribution.build(region, deployment, licensed, method="closed_form")
        for x in (-5.0, 10.0, 25.0):
            assert closed.cdf(x) == pytest.approx(quadrature.cdf(x), abs=1e-6)


class TestMcsTable:
    """Tests for the McsTable class."""

    def test_from_text(self):
        """Test parsing with comments and blank lines."""
        table = McsTable.from_text("# header\n-5 0.5\n\n0 1.0  # row\n", name="t")
        assert table.rows == [(-5.0, 0.5), (0.0, 1.0)]

    def test_to_text_reparses(self, toy_table):
        """Test the text form parses back to the same rows."""
        assert McsTable.from_text(toy_table.to_text()).rows == toy_table.rows

    @pytest.mark.parametrize(
        "text",
        ["", "1 2 3\n", "a b\n", "0 1\n0 2\n", "0 2\n1 1\n", "0 0\n"],
    )
    def test_invalid(self, text):
        """Test malformed tables raise ConfigError."""
        with pytest.raises(ConfigError):
            McsTable.from_text(text)

    def test_efficiency_at(self, toy_table):
        """Test the efficiency lookup."""
        assert toy_table.efficiency_at(-1.0) == 0.0
        assert toy_table.efficiency_at(0.0) == 1.0
        assert toy_table.efficiency_at(9.9) == 1.0
        assert toy_table.efficiency_at(40.0) == 2.0

    def test_bundled_tables(self):
        """Test bundled tables start at the default outage thresholds."""
        nr = load_mcs_table(RadioConfig.licensed_default(), C.NR_MCS_TABLE)
        wigig = load_mcs_table(RadioConfig.unlicensed_default(), C.WIGIG_MCS_TABLE)
        assert nr.thresholds_db[0] == pytest.approx(C.NR_OUTAGE_SINR_DB)
        assert wigig.thresholds_db[0] == pytest.approx(C.WIGIG_OUTAGE_SINR_DB)

    def test_outage_mismatch(self, tmp_path):
        """Test a table that does not start at the outage threshold."""
        path = tmp_path / "custom.mcs"
        path.write_text("-3 0.5\n0 1.0\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="outage threshold"):
            load_mcs_table(RadioConfig(mcs_table=str(path)), C.NR_MCS_TABLE)

    def test_missing_file(self, tmp_path):
        """Test an unreadable table file."""
        with pytest.raises(ConfigError, match="Cannot read"):
            McsTable.from_file(tmp_path / "absent.mcs")


class TestDemand:
    """Tests for resource demands and their pmf."""

    def test_resource_demand(self):
        """Test demand rounding."""
        assert resource_demand(1e6, 1.0, 1e6) == 1
        assert resource_demand(2.5e6, 1.0, 1e6) == 3
        assert resource_demand(3e6, 1.0, 1e6) == 3
        assert resource_demand(1.0, 10.0, 1e6) == 1
        assert resource_demand(50e6, 0.1523, 1.44e6) == 228

    def test_demand_pmf(self, toy_table):
        """Test discretization of a known CDF."""
        demand = demand_pmf(linear_cdf, toy_table, 4e6, 1e6, 10)
        assert demand.row_demands == (4, 2)
        assert demand.infeasible_mass == pytest.approx(0.25)
        assert demand.pmf.to_dict() == pytest.approx({2: 2 / 3, 4: 1 / 3})

    def test_demand_cap(self, toy_table):
        """Test demand above the cap counts as infeasible."""
        demand = demand_pmf(linear_cdf, toy_table, 4e6, 1e6, 3)
        assert demand.infeasible_mass == pytest.approx(0.5)
        assert demand.pmf.to_dict() == pytest.approx({2: 1.0})

    def test_degenerate(self, toy_table):
        """Test a cap below every demand."""
        with pytest.raises(DegenerateCellError):
            demand_pmf(linear_cdf, toy_table, 4e6, 1e6, 1)

    def test_invalid_arguments(self, toy_table):
        """Test rate and cap guards."""
        with pytest.raises(DomainError):
            demand_pmf(linear_cdf, toy_table, 0.0, 1e6, 10)
        with pytest.raises(DomainError):
            demand_pmf(linear_cdf, toy_table, 1e6, 1e6, 0)

    def test_b_min(self):
        """Test the offloaded-session unit count."""
        assert b_min(5e6, 2.0, 1e6) == 3
        assert b_min(4e6, 2.0, 1e6) == 2
        with pytest.raises(DomainError):
            b_min(4e6, 0.0, 1e6)


class TestEfficiency:
    """Tests for spectral-efficiency summaries."""

    def test_constant_sinr(self, deployment, licensed):
        """Test the disk average of a constant SINR."""
        value = mean_spectral_efficiency(30.0, deployment, licensed, sinr=lambda y: 3.0)
        assert value == pytest.approx(2.0)

    def test_default_sinr_positive(self, deployment):
        """Test the unlicensed mean efficiency is positive."""
        radio = RadioConfig.unlicensed_default()
        assert mean_spectral_efficiency(20.0, deployment, radio, deployment.ap_height) > 0
        with pytest.raises(DomainError):
            mean_spectral_efficiency(0.0, deployment, radio)

    def test_efficiency_map(self, deployment, licensed):
        """Test every demand class gets an efficiency, nonincreasing in demand."""
        unlicensed = RadioConfig.unlicensed_default()
        nr = load_mcs_table(licensed, C.NR_MCS_TABLE)
        wigig = load_mcs_table(unlicensed, C.WIGIG_MCS_TABLE)
        region = Region.disk(30.0)
        dist = SinrDistribution.build(region, deployment, licensed)
        demand = demand_pmf(dist, nr, 50e6, C.RESOURCE_UNIT_BW_HZ, 277)

        mapping = efficiency_map(
            demand, nr, wigig, region, deployment, licensed, unlicensed, deployment.ap_height
        )
        assert set(mapping) == set(demand.row_demands)
        values = [mapping[j] for j in sorted(mapping)]
        assert all(v >= 0 for v in values)
        assert all(b <= a for a, b in zip(values, values[1:]))
