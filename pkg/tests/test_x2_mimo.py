from fractions import Fraction

import numpy as np
import pytest

from fbdof.analysis import x2_dof, verify_decodability
from fbdof.channel_env import ChannelEnv, NetworkConfig
from fbdof.errors import ConfigError, RegimeError
from fbdof.schemes import run_regime_a, run_regime_b, run_scheme, select_regime, x2_config
from fbdof.schemes.x2_mimo import phase3_placement, side_info_indices


def _run(m, n, **kw):
    return run_scheme("x2_mimo", {"M": m, "N": n}, **kw)


@pytest.mark.parametrize("m,n,regime", [(1, 2, "A"), (2, 5, "A"), (2, 4, "A"), (2, 3, "B"),
                                        (3, 3, "B"), (1, 1, "B"), (2, 1, "C"), (3, 2, "C")])
def test_regime_selection(m, n, regime):
    assert select_regime(m, n).regime == regime


def test_regime_selection_rejects_nonpositive():
    with pytest.raises(ConfigError):
        select_regime(0, 2)


def test_worked_example_structure():
    t = _run(2, 3, noiseless=True)
    assert t.meta["phase_lengths"] == [3, 3, 1]
    assert t.ratio == Fraction(24, 7)
    obs = [e for s in t.phase_slots("1") for e in t.slots[s].received[0]]
    assert len(obs) == 9
    assert len(t.desired(0)) == 12
    side = t.extras["side_info"]
    assert len(side.u_native) == len(side.v_native) == 3


def test_side_info_takes_every_fresh_slot():
    # 2M - N components from each of the N slots of a fresh phase
    assert side_info_indices(2, 3) == [(0, 0), (1, 0), (2, 0)]
    assert len(side_info_indices(3, 4)) == 2 * 3 * 4 - 16


@pytest.mark.parametrize("m,n", [(2, 3), (3, 3), (2, 2), (3, 4), (4, 5)])
def test_transmitters_share_side_information(m, n):
    side = _run(m, n, noiseless=True).extras["side_info"]
    for a, b in zip(side.u_native, side.u_rebuilt):
        assert a.allclose(b, rtol=1e-8)
    for a, b in zip(side.v_native, side.v_rebuilt):
        assert a.allclose(b, rtol=1e-8)


def test_phase3_placement_fills_antennas_in_order():
    assert phase3_placement(2, 3) == [(0, 0, 0), (0, 1, 0), (1, 0, 0)]
    pl = phase3_placement(3, 4)
    assert len(pl) == len(set(pl)) == 8
    assert all(s < 2 for _, _, s in pl)


@pytest.mark.parametrize("m,n", [(m, n) for m in range(1, 5) for n in range(1, 6)])
def test_ratio_and_decodability(m, n):
    t = _run(m, n, master_seed=11, noiseless=True)
    assert t.ratio == x2_dof(m, n)
    assert all(v.ok for v in verify_decodability(t))


def test_regime_a_serves_one_receiver():
    t = _run(2, 5, noiseless=True)
    assert t.message_counts() == {(0, 0): 2, (1, 0): 2}
    assert t.n_slots == 1


def test_regime_c_uses_own_feedback_only_and_no_csi():
    t = _run(3, 2)
    assert t.config.csi_at_tx == "none"
    assert all(a.kind == "fb" and a.rx == a.tx for a in t.access_log)
    assert t.ratio == Fraction(8, 3)


def test_wrong_regime_is_rejected():
    env = ChannelEnv(x2_config(2, 3), np.random.default_rng(0))
    with pytest.raises(RegimeError):
        run_regime_a(env, 2, 3)
    env = ChannelEnv(NetworkConfig(2, 2, 2, 2), np.random.default_rng(0))
    with pytest.raises(ConfigError):
        run_regime_b(env, 2, 3)


def test_runs_are_reproducible():
    a = _run(2, 3, master_seed=9)
    b = _run(2, 3, master_seed=9)
    c = _run(2, 3, master_seed=10)
    np.testing.assert_array_equal(a.slots[0].channels, b.slots[0].channels)
    assert not np.allclose(a.slots[0].channels, c.slots[0].channels)
