"""Unit tests for SINR, rate and sum-utility formulas"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.channel import (
    RateMode,
    downlink_sinr,
    downlink_sinr_from_in,
    downlink_sinrs,
    interference_plus_noise,
    interference_plus_noise_all,
    rate,
    rate_exact,
    rate_hs,
    sum_utility,
    uplink_sinr,
    uplink_sinrs,
)
from models.errors import UtilityDomainError
from models.scenario import PowerAllocation, make_scenario
from models.utility import UtilitySet


def cell(M=128, g_ul=1e-6, g_dl=None, G_I=None, N0=1e-3, P_ul_max=0.199526, P_dl_tot=31.62, **kw):
    g_dl = [2.512e-6] if g_dl is None else g_dl
    K_dl = len(g_dl)
    g_ul = np.atleast_1d(g_ul)
    G_I = np.zeros((len(g_ul), K_dl)) if G_I is None else G_I
    # explicit bounds keep these hand-arithmetic cells valid regardless of SINR margins
    return make_scenario(M=M, g_ul=g_ul, g_dl=g_dl, G_I=G_I, N0=N0, P_ul_max=P_ul_max, P_dl_tot=P_dl_tot,
                         P0_ul=np.full(len(g_ul), 1e-9), P0_dl=np.full(K_dl, 1e-9), **kw)


@pytest.mark.unit
class TestUplinkSinr:
    """Test uplink SINR"""

    def test_all_ones(self):
        """Test M=1, p=1, g=1, N0=1"""
        s = cell(M=1, g_ul=1.0, N0=1.0, P_ul_max=2.0)
        assert uplink_sinr(s, 1.0, 0) == 1.0

    def test_zero_power(self):
        """Test zero power gives zero SINR"""
        assert uplink_sinr(cell(), 0.0, 0) == 0.0

    def test_published_parameters(self):
        """Test M=128, p=0.199526, g=1e-6, N0=1e-3"""
        assert uplink_sinr(cell(), 0.199526, 0) == pytest.approx(0.0255394, rel=1e-5)

    def test_index_out_of_range(self):
        """Test a bad user index raises IndexError"""
        with pytest.raises(IndexError):
            uplink_sinr(cell(), 0.1, 3)

    @settings(max_examples=50, deadline=None)
    @given(p=st.floats(min_value=1e-6, max_value=0.1), c=st.floats(min_value=0.1, max_value=2.0))
    def test_linear_in_power(self, p, c):
        """Test SINR scales linearly with power"""
        s = cell()
        assert uplink_sinr(s, c * p, 0) == pytest.approx(c * uplink_sinr(s, p, 0), rel=1e-12)


@pytest.mark.unit
class TestInterferencePlusNoise:
    """Test IN and downlink SINR"""

    def test_no_interferers(self):
        """Test an empty neighborhood gives N0"""
        assert interference_plus_noise(cell(), np.array([0.2]), 0) == 1e-3

    def test_two_neighbors(self):
        """Test g=1e-6 from two neighbors at 0.1 W each"""
        s = cell(g_ul=[1e-6, 1e-6], G_I=np.full((2, 1), 1e-6), neighbor_threshold=1e-10)
        assert interference_plus_noise(s, np.array([0.1, 0.1]), 0) == pytest.approx(1.0002e-3, rel=1e-12)

    def test_zero_gain_neighbor(self):
        """Test a zero-gain neighbor adds nothing"""
        s = cell(G_I=np.zeros((1, 1)), neighbor_threshold=0.0)
        assert s.nbr_of_dl[0] == (0,)
        assert interference_plus_noise(s, np.array([0.2]), 0) == 1e-3

    def test_downlink_sinr_hand_value(self):
        """Test M=128, p=1, g=2.512e-6, IN=1e-3"""
        assert downlink_sinr_from_in(cell(), 1.0, 1e-3, 0) == pytest.approx(0.321536, rel=1e-12)

    def test_downlink_zero_power(self):
        """Test zero downlink power"""
        assert downlink_sinr(cell(), 0.0, np.array([0.1]), 0) == 0.0

    def test_vectorised_forms_agree(self):
        """Test per-user and vectorised formulas agree"""
        G = np.array([[1e-6, 0.0], [2e-6, 5e-7]])
        s = cell(g_ul=[1e-6, 2e-6], g_dl=[2e-6, 3e-6], G_I=G, neighbor_threshold=1e-10)
        p_ul = np.array([0.1, 0.05])
        p_dl = np.array([3.0, 4.0])
        np.testing.assert_allclose(
            interference_plus_noise_all(s, p_ul),
            [interference_plus_noise(s, p_ul, j) for j in range(2)], rtol=1e-14)
        np.testing.assert_allclose(
            downlink_sinrs(s, p_dl, p_ul), [downlink_sinr(s, p_dl[j], p_ul, j) for j in range(2)], rtol=1e-14)
        np.testing.assert_allclose(uplink_sinrs(s, p_ul), [uplink_sinr(s, p_ul[i], i) for i in range(2)])


@pytest.mark.unit
class TestRates:
    """Test rate formulas"""

    def test_exact_zero(self):
        """Test log(1 + 0) = 0"""
        assert rate_exact(0.0) == 0.0

    def test_high_snr_identity(self):
        """Test log(e) = 1"""
        assert rate_hs(math.e) == pytest.approx(1.0)

    def test_gap_at_published_sinr(self):
        """Test exact and high-SINR rates at SINR 25.54"""
        assert rate_exact(25.54) == pytest.approx(3.279, abs=5e-4)
        assert rate_hs(25.54) == pytest.approx(3.240, abs=5e-4)
        assert rate_exact(25.54) - rate_hs(25.54) == pytest.approx(math.log1p(1 / 25.54), rel=1e-12)
        assert rate_exact(25.54) - rate_hs(25.54) == pytest.approx(0.038407, abs=5e-6)

    def test_high_snr_rejects_zero(self):
        """Test log(0) is a domain error"""
        with pytest.raises(UtilityDomainError):
            rate_hs(0.0)

    def test_mode_dispatch(self):
        """Test rate() follows the mode"""
        assert rate(1.0, RateMode.EXACT) == pytest.approx(math.log(2.0))
        assert rate(1.0, RateMode.HIGH_SNR) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(sinr=st.floats(min_value=1.0, max_value=1e6))
    def test_gap_identity(self, sinr):
        """Test exact minus high-SINR rate equals log(1 + 1/SINR)"""
        assert rate_exact(sinr) - rate_hs(sinr) == pytest.approx(math.log1p(1.0 / sinr), rel=1e-6, abs=1e-12)


@pytest.mark.unit
class TestSumUtility:
    """Test sum utility"""

    def test_single_user_one_nat(self):
        """Test log utility of a 1-nat uplink plus a 1-nat downlink"""
        s = cell(M=1, g_ul=1.0, g_dl=[1.0], N0=1.0, P_ul_max=10.0, P_dl_tot=10.0)
        utils = UtilitySet.uniform("log:w=1", "log:w=1", 1, 1)
        p = PowerAllocation(np.array([math.e]), np.array([math.e]))
        assert sum_utility(s, utils, p, RateMode.HIGH_SNR) == pytest.approx(0.0)
        p2 = PowerAllocation(np.array([math.exp(math.e)]), np.array([math.e]))
        assert sum_utility(s, utils, p2, "high_snr") == pytest.approx(1.0)

    def test_log_of_nonpositive_rate(self):
        """Test log utility of a zero rate is a domain error"""
        s = cell(M=1, g_ul=1.0, g_dl=[1.0], N0=1.0, P_ul_max=10.0, P_dl_tot=10.0)
        utils = UtilitySet.uniform("log:w=1", "log:w=1", 1, 1)
        with pytest.raises(UtilityDomainError):
            sum_utility(s, utils, PowerAllocation(np.array([1.0]), np.array([math.e])), RateMode.HIGH_SNR)
