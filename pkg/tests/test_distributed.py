"""Tests for the distributed price/power iteration"""
import math
import time

import numpy as np
import pytest

from config.presets import get_preset
from engine.distributed import (
    DistributedEngine,
    compute_metrics,
    dl_power_step,
    init,
    price_step,
    run,
    target_rates,
    ul_power_step,
)
from engine.stability import StabilityMonitor, period_two_oscillation
from experiments.convergence import iterations_to_settle
from models.errors import ConfigError, MissingMetricError
from models.scenario import PowerAllocation, make_scenario
from models.state import AlgoParams, AlgoState, RunStatus, TraceRecord
from models.units import db_to_linear
from models.utility import UtilitySet
from solver.oracle import solve_centralized


def cell(g_ul=(1e-6,), g_dl=(2.512e-6,), G_I=None, M=128, N0=1e-3, P_ul_max=1.0, P_dl_tot=31.62):
    G_I = np.full((len(g_ul), len(g_dl)), 1e-6) if G_I is None else G_I
    return make_scenario(M=M, g_ul=list(g_ul), g_dl=list(g_dl), G_I=G_I, N0=N0, P_ul_max=P_ul_max,
                         P_dl_tot=P_dl_tot, neighbor_threshold=1e-10,
                         P0_ul=np.full(len(g_ul), 1e-6), P0_dl=np.full(len(g_dl), 1e-6))


def state_for(s, q_ul, q_dl, p_ul, p_dl, in_j=None):
    return AlgoState(
        t=0,
        q_ul=np.asarray(q_ul, dtype=float),
        q_dl=np.asarray(q_dl, dtype=float),
        p_hat_ul=np.log(np.asarray(p_ul, dtype=float)),
        p_hat_dl=np.log(np.asarray(p_dl, dtype=float)),
        in_j=np.full(s.K_dl, s.N0) if in_j is None else np.asarray(in_j, dtype=float),
        r_ul=np.zeros(s.K_ul),
        r_dl=np.zeros(s.K_dl),
    )


def sweep_cell(g_i_db):
    return get_preset("fig2-pf").build_scenario().with_interference(np.array([[db_to_linear(g_i_db)]]))


@pytest.mark.unit
class TestAlgoParams:
    """Test parameter validation and serialization"""

    def test_defaults(self):
        """Test the documented defaults"""
        params = AlgoParams()
        assert (params.gamma, params.max_iters, params.stop_window) == (0.05, 5000, 50)
        assert params.q_min == 1e-8
        assert params.r_max == 50.0

    @pytest.mark.parametrize("field,value", [("gamma", 0.0), ("gamma", -1.0), ("gamma", math.inf),
                                             ("q_min", 0.0), ("max_iters", 0), ("stop_window", 1)])
    def test_invalid(self, field, value):
        """Test unusable values raise ConfigError"""
        with pytest.raises(ConfigError):
            AlgoParams(**{field: value}).validate()

    def test_dict_round_trip(self):
        """Test to_dict and from_dict agree"""
        params = AlgoParams(gamma=0.02, max_iters=100, measurement_noise=0.1)
        assert AlgoParams.from_dict(params.to_dict()) == params


@pytest.mark.unit
class TestInit:
    """Test round-0 state"""

    def test_even_downlink_split(self):
        """Test K_dl = 4 with 31.62 W gives 7.905 W each"""
        s = cell(g_ul=(1e-6,), g_dl=(2.5e-6,) * 4)
        state = init(s)
        np.testing.assert_allclose(state.p_dl, 7.905, rtol=1e-12)
        assert state.p_dl.sum() == pytest.approx(31.62, rel=1e-12)

    def test_prices_floored(self):
        """Test prices start at q_min and powers at the uplink cap"""
        s = cell()
        state = init(s, AlgoParams(q_min=1e-7))
        np.testing.assert_array_equal(state.q_ul, [1e-7])
        np.testing.assert_array_equal(state.q_dl, [1e-7])
        assert state.p_ul[0] == pytest.approx(s.P_ul_max)
        np.testing.assert_array_equal(state.in_j, [s.N0])
        assert state.t == 0


@pytest.mark.unit
class TestDownlinkStep:
    """Test the downlink power update"""

    def test_floored_prices_barely_move(self):
        """Test q = q_min leaves powers within 1e-9"""
        s = cell(g_dl=(2.5e-6,) * 4)
        state = init(s)
        new = dl_power_step(state, s, AlgoParams())
        np.testing.assert_allclose(np.exp(new), state.p_dl, atol=1e-9)

    def test_one_user_grows_budget_tight(self):
        """Test a single positive price moves power to that user and keeps the budget"""
        s = cell(g_dl=(2.5e-6,) * 4)
        state = init(s)
        state.q_dl = np.array([1.0, 0.0, 0.0, 0.0])
        new = np.exp(dl_power_step(state, s, AlgoParams(gamma=0.1)))
        assert new.sum() == pytest.approx(s.P_dl_tot, rel=1e-12)
        assert new[0] > 7.905
        assert np.all(new[1:] < 7.905)

    def test_single_user_pinned(self):
        """Test one downlink user stays at the budget"""
        s = cell()
        state = state_for(s, [0.1], [2.0], [0.5], [31.62])
        assert math.exp(dl_power_step(state, s, AlgoParams())[0]) == pytest.approx(31.62, rel=1e-12)


@pytest.mark.unit
class TestUplinkStep:
    """Test the uplink power update"""

    def test_hand_value(self):
        """Test q=1, m=5, P=0.3 W, gamma=0.1 moves log power by -0.05"""
        s = cell()
        state = state_for(s, [1.0], [0.1], [0.3], [31.62])
        new = ul_power_step(state, s, AlgoParams(gamma=0.1), np.array([[5.0]]))
        assert new[0] - math.log(0.3) == pytest.approx(-0.05, abs=1e-12)

    def test_no_neighbors_rises_to_cap(self):
        """Test pure ascent ends clipped at P_max"""
        s = cell(G_I=np.zeros((1, 1)))
        state = state_for(s, [5.0], [0.1], [0.9], [31.62])
        new = ul_power_step(state, s, AlgoParams(gamma=0.1), compute_metrics(s, state.q_dl, state.in_j))
        assert new[0] == pytest.approx(math.log(s.P_ul_max))

    def test_zero_gradient(self):
        """Test a balanced price leaves the power unchanged"""
        s = cell()
        state = state_for(s, [1.5], [0.1], [0.3], [31.62])
        new = ul_power_step(state, s, AlgoParams(gamma=0.1), np.array([[5.0]]))
        assert new[0] == pytest.approx(math.log(0.3), abs=1e-15)

    def test_missing_metric(self):
        """Test a NaN metric for a neighbor raises"""
        s = cell()
        state = state_for(s, [1.0], [0.1], [0.3], [31.62])
        with pytest.raises(MissingMetricError) as info:
            ul_power_step(state, s, AlgoParams(), np.full((1, 1), np.nan))
        assert (info.value.uplink, info.value.downlink) == (0, 0)

    def test_metrics_only_on_neighbors(self):
        """Test non-neighbor pairs carry NaN"""
        s = cell(g_ul=(1e-6, 1e-6), G_I=np.array([[1e-6], [0.0]]))
        m = compute_metrics(s, np.array([2.0]), np.array([2e-3]))
        assert m[0, 0] == pytest.approx(1e-3)
        assert np.isnan(m[1, 0])


@pytest.mark.unit
class TestPriceStep:
    """Test the price update"""

    def test_hand_value(self):
        """Test q=0.5, gamma=0.01, r=3, log SINR=2 gives 0.51"""
        s = cell(M=1, g_ul=(1.0,), N0=1.0, P_ul_max=10.0, G_I=np.zeros((1, 1)))
        utils = UtilitySet.uniform("log:w=1.5", "log:w=1", 1, 1)
        state = state_for(s, [0.5], [0.5], [math.exp(2.0)], [31.62])
        q_ul, _, r_ul, _ = price_step(state, s, utils, AlgoParams(gamma=0.01))
        assert r_ul[0] == pytest.approx(3.0)
        assert q_ul[0] == pytest.approx(0.51)

    def test_equilibrium(self):
        """Test r equal to log SINR leaves the price unchanged"""
        s = cell(M=1, g_ul=(1.0,), N0=1.0, P_ul_max=10.0, G_I=np.zeros((1, 1)))
        utils = UtilitySet.uniform("log:w=1", "log:w=1", 1, 1)
        state = state_for(s, [0.5], [0.5], [math.exp(2.0)], [31.62])
        q_ul, _, _, _ = price_step(state, s, utils, AlgoParams(gamma=0.01))
        assert q_ul[0] == pytest.approx(0.5, abs=1e-15)

    def test_floor(self):
        """Test a negative update is floored at q_min"""
        s = cell(M=1, g_ul=(1.0,), N0=1.0, P_ul_max=10.0, G_I=np.zeros((1, 1)))
        utils = UtilitySet.uniform("log:w=1", "log:w=1", 1, 1)
        state = state_for(s, [1.0], [0.5], [math.exp(2.0)], [31.62])
        q_ul, _, _, _ = price_step(state, s, utils, AlgoParams(gamma=10.0, q_min=1e-8))
        assert q_ul[0] == 1e-8

    def test_rate_cap(self):
        """Test target rates never exceed r_max"""
        utils = UtilitySet.uniform("log:w=1", "log:w=1", 1, 1)
        r_ul, r_dl = target_rates(utils, np.array([1e-8]), np.array([1.0]), AlgoParams(r_max=50.0))
        assert r_ul[0] == 50.0
        assert r_dl[0] == 1.0


@pytest.mark.unit
class TestStabilityMonitor:
    """Test the convergence and instability detector"""

    def test_period_two(self):
        """Test a sustained alternation is flagged"""
        history = np.array([[0.0, float(k % 2)] for k in range(101)])
        assert period_two_oscillation(history) == 1

    def test_decaying_alternation(self):
        """Test a decaying alternation is not flagged"""
        history = np.array([[(-0.9) ** k] for k in range(101)])
        assert period_two_oscillation(history) is None

    def test_short_history(self):
        """Test fewer rows than the window never flag"""
        assert period_two_oscillation(np.zeros((10, 2))) is None

    def test_settles(self):
        """Test a constant window converges"""
        monitor = StabilityMonitor(AlgoParams(stop_window=5))
        results = [monitor.observe(1.0, np.ones(2), np.zeros(2)) for _ in range(5)]
        assert [r[0] for r in results[:4]] == [None] * 4
        assert results[4][0] == RunStatus.CONVERGED

    def test_settles_while_prices_drift(self):
        """Test a flat utility converges even if prices still move"""
        monitor = StabilityMonitor(AlgoParams(stop_window=5))
        results = [monitor.observe(1.0, np.full(2, 1.0 + 0.1 * k), np.zeros(2)) for k in range(5)]
        assert results[-1][0] == RunStatus.CONVERGED

    def test_above_optimum(self):
        """Test exceeding the oracle value is an instability naming gamma"""
        monitor = StabilityMonitor(AlgoParams(gamma=0.3), utility_star=10.0)
        status, reason = monitor.observe(10.1, np.ones(2), np.zeros(2))
        assert status == RunStatus.UNSTABLE
        assert "gamma=0.3" in reason

    def test_non_finite(self):
        """Test NaN prices are an instability"""
        monitor = StabilityMonitor(AlgoParams())
        status, _ = monitor.observe(1.0, np.array([np.nan]), np.zeros(1))
        assert status == RunStatus.UNSTABLE


@pytest.mark.unit
class TestTrace:
    """Test trace records"""

    def test_header_matches_row(self):
        """Test header and row widths agree"""
        rec = TraceRecord(3, 1.5, None, np.ones(2), np.ones(4), np.ones(2), np.ones(4))
        assert len(TraceRecord.header(2, 4)) == len(rec.to_row())
        assert rec.to_row()[2] == ""


@pytest.mark.integration
class TestRun:
    """Test complete distributed runs"""

    def test_decoupled_cell(self):
        """Test G_I = 0 converges to full power on both links"""
        s = sweep_cell(-60.0).with_interference(np.zeros((1, 1)))
        utils = UtilitySet.uniform("log:w=1", "log:w=2", 1, 1)
        state = run(s, utils, AlgoParams())
        assert state.status == RunStatus.CONVERGED
        assert state.p_ul[0] == pytest.approx(s.P_ul_max)
        assert state.p_dl[0] == pytest.approx(s.P_dl_tot)

    def test_feasible_every_round(self):
        """Test bounds and budget hold after every recorded round"""
        preset = get_preset("fig3-pf")
        s = preset.build_scenario()
        state = run(s, preset.build_utilities(s), preset.build_params(max_iters=300))
        assert len(state.trace) == state.t + 1
        for rec in state.trace:
            ok, why = PowerAllocation(rec.p_ul, rec.p_dl).check_feasible(s)
            assert ok, why

    def test_trace_eps(self):
        """Test eps is recorded only when an oracle value is given"""
        preset = get_preset("fig3-pf")
        s = preset.build_scenario()
        utils = preset.build_utilities(s)
        blind = run(s, utils, preset.build_params(max_iters=20))
        assert np.all(np.isnan(blind.eps_series()))
        known = run(s, utils, preset.build_params(max_iters=20), utility_star=100.0)
        np.testing.assert_allclose(known.eps_series(), np.abs(known.utility_series() - 100.0))

    def test_step_reads_previous_round(self):
        """Test IN of the new state follows the new uplink powers"""
        preset = get_preset("fig3-pf")
        s = preset.build_scenario()
        engine = DistributedEngine(s, preset.build_utilities(s), preset.build_params())
        state = engine.step()
        expected = s.N0 + state.p_ul @ s.interference
        np.testing.assert_allclose(state.in_j, expected, rtol=1e-12)
        assert state.t == 1

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["fig3-pf", "fig3-mpd"])
    def test_preset_converges_in_time(self, name):
        """Test each convergence preset settles near the oracle in under five seconds"""
        preset = get_preset(name)
        s = preset.build_scenario()
        utils = preset.build_utilities(s)
        oracle = solve_centralized(s, utils)
        start = time.perf_counter()
        state = run(s, utils, preset.build_params(), utility_star=oracle.utility_star)
        elapsed = time.perf_counter() - start
        assert state.status == RunStatus.CONVERGED, state.message
        assert elapsed < 5.0
        assert abs(state.final_utility - oracle.utility_star) <= 1e-2 * abs(oracle.utility_star)
        assert iterations_to_settle(state.utility_series()) <= 500

    @pytest.mark.slow
    def test_scaled_utilities_same_powers(self):
        """Test scaling every utility leaves the converged powers in place"""
        s = sweep_cell(-50.0)
        utils = UtilitySet.uniform("log:w=1", "log:w=2", 1, 1)
        params = AlgoParams(gamma=0.02, max_iters=20000)
        base = run(s, utils, params)
        scaled = run(s, utils.scaled(1.5), params)
        assert base.status == scaled.status == RunStatus.CONVERGED
        np.testing.assert_allclose(scaled.p_ul, base.p_ul, rtol=1e-3)
        np.testing.assert_allclose(scaled.p_dl, base.p_dl, rtol=1e-3)

