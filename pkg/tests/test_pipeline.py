"""Tests for the end-to-end strategy evaluation."""

import math
from pathlib import Path

import pytest

from nru_offload.cache import ContentionCache
from nru_offload.config import (
    ContentionConfig,
    DeploymentConfig,
    ScenarioConfig,
    TrafficConfig,
    ValidationConfig,
    parse_scenario_text,
)
from nru_offload.exceptions import ConfigError, DomainError, GeometryError, NruOffloadError
from nru_offload.export import write_csv
from nru_offload.pipeline import (
    REPORT_COLUMNS,
    Arrivals,
    build_cell,
    collision_curve,
    density_sweep,
    evaluate_point,
    evaluate_strategy,
    eventual_loss,
    fair_initial_cw,
    fairness_search,
    minimal_density,
    parameter_sweep,
    reported_threshold,
    reports_frame,
    resolve_threshold,
    scenario_at,
    search_initial_cw,
    split_arrivals,
    stage,
    unlicensed_mean_rates,
)
from nru_offload.pmf import DiscretePmf

DEFAULT_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "default.toml"


@pytest.fixture(scope="module")
def scenario():
    """Default scenario."""
    return ScenarioConfig().validate()


@pytest.fixture(scope="module")
def cell(scenario):
    """Cell model of the default scenario."""
    return build_cell(scenario)


@pytest.fixture(scope="module")
def cache():
    """Contention cache shared by the module."""
    return ContentionCache()


@pytest.fixture(scope="module")
def reports(scenario, cell, cache):
    """Reports of all three strategies at the default scenario."""
    return {s: evaluate_strategy(scenario, s, cell, cache=cache) for s in ("baseline", "fat", "slim")}


class TestArrivals:
    """Tests for the arrival split."""

    def test_split(self):
        """Test ring and disk intensities."""
        dep, traffic = DeploymentConfig(), TrafficConfig()
        arrivals = split_arrivals(dep, traffic, 100.0, 50.0)
        expected = dep.nru_ue_density * math.pi * 100.0**2 * traffic.nru_active_prob * traffic.session_rate
        assert arrivals.total == pytest.approx(expected)
        assert arrivals.disk == pytest.approx(expected / 4)
        assert arrivals.ring == pytest.approx(expected * 3 / 4)
        assert arrivals.wigig == pytest.approx(
            dep.wigig_ue_density * math.pi * 50.0**2 * traffic.wigig_active_prob * traffic.wigig_session_rate
        )

    def test_equal_radii(self):
        """Test an unlicensed disk covering the whole cell."""
        arrivals = split_arrivals(DeploymentConfig(), TrafficConfig(), 40.0, 40.0)
        assert arrivals.ring == 0.0

    def test_unlicensed_larger(self):
        """Test the unlicensed radius may not exceed the licensed one."""
        with pytest.raises(GeometryError):
            split_arrivals(DeploymentConfig(), TrafficConfig(), 40.0, 50.0)


class TestEventualLoss:
    """Tests for the eventual loss probability."""

    def test_printed_weight(self):
        """Test the default weighting."""
        arrivals = Arrivals(total=1.0, ring=0.5, disk=0.5, wigig=0.0)
        assert eventual_loss(arrivals, 0.2, 0.4, 0.5) == pytest.approx(0.26)

    def test_ring_only_weight(self):
        """Test the ring-only weighting."""
        arrivals = Arrivals(total=1.0, ring=0.5, disk=0.5, wigig=0.0)
        assert eventual_loss(arrivals, 0.2, 0.4, 0.5, "ring_only") == pytest.approx(0.2)

    def test_no_arrivals(self):
        """Test a cell without sessions loses nothing."""
        assert eventual_loss(Arrivals(0.0, 0.0, 0.0, 0.0), 0.5, 0.5, 0.5) == 0.0


class TestThresholds:
    """Tests for threshold resolution."""

    @pytest.fixture
    def disk_pmf(self):
        """Offloadable demand with mean 2.5."""
        return DiscretePmf.from_mapping({2: 0.5, 3: 0.5})

    def test_derived(self, scenario, disk_pmf):
        """Test thresholds derived from the mean demand."""
        assert resolve_threshold("fat", scenario, disk_pmf) == 2.0
        assert resolve_threshold("slim", scenario, disk_pmf) == 2.0
        assert resolve_threshold("baseline", scenario, disk_pmf) is None

    def test_offset(self, scenario, disk_pmf):
        """Test the offset widens both thresholds."""
        shifted = scenario.with_values("strategies", threshold_offset=1.0)
        assert resolve_threshold("fat", shifted, disk_pmf) == 3.0
        assert resolve_threshold("slim", shifted, disk_pmf) == 1.0

    def test_configured(self, scenario, disk_pmf):
        """Test configured thresholds win."""
        fixed = scenario.with_values("strategies", fat_threshold=7.0, slim_threshold=0.0)
        assert resolve_threshold("fat", fixed, disk_pmf) == 7.0
        assert resolve_threshold("slim", fixed, disk_pmf) == 0.0

    def test_integral_mean(self, scenario):
        """Test an integral mean demand gives adjacent fat and slim thresholds."""
        centred = DiscretePmf.from_mapping({2: 0.1, 3: 0.8, 4: 0.1})
        assert resolve_threshold("fat", scenario, centred) == 3.0
        assert resolve_threshold("slim", scenario, centred) == 2.0


class TestReportedThreshold:
    """Tests for the threshold column of the results."""

    def test_inactive_thresholds_are_empty(self):
        """Test thresholds that route nothing directly are reported as missing."""
        assert reported_threshold("baseline", None) is None
        assert reported_threshold("fat", math.inf) is None
        assert reported_threshold("slim", -1.0) is None
        assert reported_threshold("fat", 12.0) == 12.0
        assert reported_threshold("slim", 0.0) == 0.0

    def test_csv_cells(self, scenario, cell, cache, reports, tmp_path):
        """Test baseline and an inactive fat threshold share one CSV representation."""
        inactive = scenario.with_values("strategies", fat_threshold=math.inf)
        fat = evaluate_strategy(inactive, "fat", cell, cache=cache)
        assert fat.threshold is None
        frame = reports_frame([reports["baseline"], fat])
        assert frame["threshold"].isna().all()
        lines = write_csv(frame, tmp_path / "results.csv").read_text().splitlines()
        assert lines[1].startswith("baseline,,")
        assert lines[2].startswith("fat,,")
        assert "inf" not in lines[2]


class TestStage:
    """Tests for stage tagging of errors."""

    def test_tags_untagged(self):
        """Test an untagged error gets the stage name."""
        with pytest.raises(NruOffloadError) as exc_info, stage("lbt"):
            raise DomainError("bad")
        assert exc_info.value.stage == "lbt"
        assert str(exc_info.value) == "[lbt] bad"

    def test_keeps_inner_tag(self):
        """Test the innermost stage wins."""
        with pytest.raises(NruOffloadError) as exc_info, stage("pipeline"), stage("resq"):
            raise DomainError("bad")
        assert exc_info.value.stage == "resq"


class TestCell:
    """Tests for the strategy-independent cell model."""

    def test_radii(self, cell):
        """Test the cell radii are ordered."""
        assert 0 < cell.r_w <= cell.r_n <= cell.r_voronoi
        assert cell.r_n == min(cell.r_sinr, cell.r_voronoi)

    def test_resources(self, cell):
        """Test the resource and server counts."""
        assert cell.resources == 277
        assert cell.servers == cell.resources

    def test_derived_blockage(self, cell):
        """Test the contention blockage is filled in from the geometry."""
        assert cell.contention.blockage_prob is not None
        assert 0 < cell.contention.p_b < 1

    def test_efficiencies_cover_support(self, cell):
        """Test every offloadable class has an unlicensed efficiency."""
        assert set(cell.disk_demand.pmf.to_dict()) <= set(cell.efficiencies)
        assert cell.offload_b_min >= 1

    def test_configured_servers(self, scenario):
        """Test a configured server count."""
        assert build_cell(scenario.with_values("model", servers=10)).servers == 10

    def test_mean_rate_map(self, scenario):
        """Test the mean rate map assigns one efficiency to every class."""
        cell = build_cell(scenario.with_values("model", rate_map="mean"))
        assert set(cell.efficiencies.values()) == {cell.unlicensed_efficiency}


class TestEvaluateStrategy:
    """Tests for strategy reports."""

    def test_probabilities_bounded(self, reports):
        """Test every probability lies in [0, 1]."""
        for report in reports.values():
            for name in ("pi_direct", "pi_sl", "pi_su", "success_nru", "q_su", "q_s"):
                assert 0.0 <= getattr(report, name) <= 1.0

    def test_offloaded_flow(self, reports):
        """Test the offloaded intensity follows the offload probability."""
        for report in reports.values():
            assert report.lambda_su == pytest.approx(report.lambda_disk * report.pi_su)
            assert report.rho_nru == pytest.approx(report.lambda_su / 0.1)

    def test_baseline_has_no_direct_offload(self, reports):
        """Test baseline offloads only blocked sessions."""
        assert reports["baseline"].pi_direct == 0.0
        assert reports["baseline"].threshold is None

    def test_shared_cell(self, reports):
        """Test strategies share the cell quantities."""
        radii = {(r.r_n, r.r_w, r.lambda_total) for r in reports.values()}
        assert len(radii) == 1

    def test_row_columns(self, reports):
        """Test rows follow the fixed column order."""
        assert tuple(reports["fat"].to_row()) == REPORT_COLUMNS

    def test_inactive_thresholds_equal_baseline(self, scenario, cell, cache, reports):
        """Test thresholds outside the support reproduce every baseline field."""
        inactive = scenario.with_values("strategies", fat_threshold=math.inf, slim_threshold=-1.0)
        baseline = reports["baseline"].to_row()
        for strategy in ("fat", "slim"):
            row = evaluate_strategy(inactive, strategy, cell, cache=cache).to_row()
            for name in REPORT_COLUMNS[1:]:
                assert row[name] == baseline[name], f"{strategy}: {name}"

    def test_strategy_ordering(self, reports):
        """Test baseline loses the least and slim the most."""
        baseline, fat, slim = (reports[s].q_s for s in ("baseline", "fat", "slim"))
        assert reports["baseline"].pi_su > 0
        assert baseline <= fat + 1e-12
        assert fat <= slim + 1e-12

    def test_default_file(self, cache):
        """Test the shipped configuration file evaluates every strategy."""
        loaded = parse_scenario_text(DEFAULT_CONFIG.read_text(encoding="utf-8")).validate()
        assert loaded.deployment == DeploymentConfig()
        assert loaded.traffic == TrafficConfig()
        assert loaded.validation == ValidationConfig()
        for report in evaluate_point(loaded, ("baseline", "fat", "slim"), cache=cache):
            assert 0.0 <= report.q_s <= 1.0
            assert report.offloaded_pmf is not None
            pmf = report.offloaded_pmf
            assert pmf.probabilities.sum() + pmf.deficit == pytest.approx(1.0, abs=1e-12)

    def test_unknown_strategy(self, scenario, cell):
        """Test an unknown strategy name."""
        with pytest.raises(ConfigError):
            evaluate_strategy(scenario, "medium", cell)

    def test_evaluate_point(self, scenario, cache, reports):
        """Test the point evaluation matches per-strategy runs."""
        point = evaluate_point(scenario, ("baseline", "slim"), cache=cache)
        assert [r.strategy for r in point] == ["baseline", "slim"]
        assert point[1].q_s == pytest.approx(reports["slim"].q_s)

    def test_reports_frame(self, reports):
        """Test the DataFrame layout with leading columns."""
        frame = reports_frame(list(reports.values()), {"run": [1, 2, 3]})
        assert list(frame.columns) == ["run", *REPORT_COLUMNS]
        assert list(frame["strategy"]) == ["baseline", "fat", "slim"]


class TestSweeps:
    """Tests for parameter and density sweeps."""

    def test_scenario_at(self, scenario):
        """Test replacing one sweep parameter."""
        assert scenario_at(scenario, "initial_cw_nru", 32.0).contention.initial_cw_nru == 32
        with pytest.raises(ConfigError):
            scenario_at(scenario, "initial_cw_nru", 2.5)
        with pytest.raises(ConfigError):
            scenario_at(scenario, "bs_height", 5.0)

    @pytest.mark.parametrize("values", [[], [2e-4, 1e-4], [1e-4, 1e-4]])
    def test_invalid_grid(self, scenario, values):
        """Test empty and non-ascending grids."""
        with pytest.raises(ConfigError):
            parameter_sweep(scenario, "bs_density", values)

    def test_min_rate_sweep(self, scenario, cache):
        """Test a sweep keeps the grid order and strategies."""
        result = parameter_sweep(scenario, "min_rate", [50e6, 100e6], ("baseline",), cache=cache)
        frame = result.to_frame()
        assert list(frame["value"]) == [50e6, 100e6]
        assert list(frame["min_rate"]) == [50e6, 100e6]
        assert list(frame.columns[:2]) == ["parameter", "value"]
        assert result.reports_for("fat") == []

    def test_loss_nondecreasing_in_min_rate(self, scenario, cache):
        """Test a stricter minimum rate never lowers the eventual loss."""
        result = parameter_sweep(scenario, "min_rate", [50e6, 75e6, 100e6], ("baseline", "fat"), cache=cache)
        for strategy in ("baseline", "fat"):
            losses = [r.q_s for _, r in result.reports_for(strategy)]
            assert all(b >= a - 1e-12 for a, b in zip(losses, losses[1:]))

    def test_parallel_sweep(self, scenario, cache):
        """Test threaded sweeps give the serial results."""
        serial = parameter_sweep(scenario, "max_retries", [1, 3], ("baseline",), cache=cache)
        parallel = parameter_sweep(scenario, "max_retries", [1, 3], ("baseline",), jobs=2, cache=cache)
        assert [r.q_s for _, r in serial.points] == [r.q_s for _, r in parallel.points]

    def test_density_sweep(self, scenario, cache):
        """Test the minimal density report."""
        result = density_sweep(scenario, [5e-5, 1e-4], ("baseline",), target_loss=1.0, cache=cache)
        assert result.minimal_density == {"baseline": 5e-5}
        assert minimal_density(result.sweep, "baseline", -1.0) is None


class TestContentionAnalyses:
    """Tests for collision curves and the fairness search."""

    def test_collision_curve(self, scenario):
        """Test failures grow with blocker density."""
        curve = collision_curve(scenario, [0.1, 0.5], [(1, 0), (2, 1)])
        assert len(curve) == 4
        lone = [p for p in curve if p.n_nru == 1]
        assert all(p.p_c == 0.0 for p in lone)
        assert all(p.failure == pytest.approx(p.blockage_prob) for p in lone)
        assert lone[1].blockage_prob > lone[0].blockage_prob
        crowded = [p for p in curve if p.n_nru == 2]
        assert crowded[1].failure > crowded[0].failure

    def test_collision_curve_needs_nru(self, scenario):
        """Test a population without NR-U stations."""
        with pytest.raises(DomainError):
            collision_curve(scenario, [0.1], [(0, 2)])

    def test_unlicensed_mean_rates(self):
        """Test rates of lone tagged stations."""
        cfg = ContentionConfig(blockage_prob=0.0)
        nru, wigig = unlicensed_mean_rates(0.0, 0.0, cfg, 2.0, 1.0, 1e9, cache=ContentionCache())
        assert nru == pytest.approx(2e9 / 8.5)
        assert wigig == pytest.approx(1e9 / 8.5)

    def test_search_bisects(self):
        """Test integer bisection finds the zero of the gap."""
        assert search_initial_cw(lambda w: 100.0 - w, 16, 0.5) == 100
        assert search_initial_cw(lambda w: 10.0 - w, 16, 0.5) == 10

    def test_search_within_tolerance(self):
        """Test an initial CW within tolerance is kept."""
        assert search_initial_cw(lambda w: 100.0 - w, 16, math.inf) == 16
        assert search_initial_cw(lambda w: 16.5 - w, 16, 1.0) == 16

    def test_search_without_sign_change(self):
        """Test the smallest gap is returned when no root exists."""
        assert search_initial_cw(lambda w: 1000.0 / w, 16, 0.01) == 1024

    def test_search_invalid(self):
        """Test tolerance and CW guards."""
        with pytest.raises(DomainError):
            search_initial_cw(lambda w: 0.0, 16, 0.0)
        with pytest.raises(DomainError):
            search_initial_cw(lambda w: 0.0, 0, 1.0)

    def test_fair_cw_symmetric(self):
        """Test equal efficiencies keep the common initial CW at any load split."""
        cfg = ContentionConfig(blockage_prob=0.1)
        cache = ContentionCache()
        assert fair_initial_cw(1.0, 1.0, cfg, 1.0, 1.0, 1.0, 1e-7, cache=cache) == 16
        assert fair_initial_cw(1.0, 4.0, cfg, 1.0, 1.0, 1.0, 1e-7, cache=cache) == 16

    def test_fair_cw_grows_with_efficiency(self):
        """Test a more efficient NR-U link is given a larger initial CW."""
        cfg = ContentionConfig(blockage_prob=0.1)
        cache = ContentionCache()
        doubled = fair_initial_cw(1.0, 1.0, cfg, 2.0, 1.0, 1.0, 1e-7, cache=cache)
        quadrupled = fair_initial_cw(1.0, 1.0, cfg, 4.0, 1.0, 1.0, 1e-7, cache=cache)
        assert 16 < doubled <= quadrupled

    @pytest.mark.slow
    def test_fairness_search(self, scenario, cell, cache):
        """Test the fair CW lies within the search range."""
        chosen = fairness_search(scenario, 1e6, cell, cache)
        assert 1 <= chosen <= 1024
