import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from backhaul import DomainError, ScenarioConfig, build_geometry
from backhaul.beamforming import (
    build_precoders,
    build_zf_precoder,
    instantaneous_sinr,
    link_powers,
    per_user_rate,
    stack_singular,
    zf_beams,
)
from backhaul.channel import draw_channel_batch, draw_channels, quantize_cross_channels, trial_rng
from backhaul.errors import SingularStackError


def _complex(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@given(st.integers(1, 4), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_zf_nulls_and_unit_norm(n, k, seed):
    rng = np.random.default_rng(seed)
    m = n + k + rng.integers(0, 3)
    own, other = _complex(rng, (n, m)), _complex(rng, (k, m)) if k else None
    w = build_zf_precoder(own, other)
    assert w.shape == (m, n)
    np.testing.assert_allclose(np.linalg.norm(w, axis=0), 1.0, atol=1e-9)
    gains = own.conj() @ w
    off = gains - np.diag(np.diag(gains))
    assert np.max(np.abs(off)) < 1e-9 * np.max(np.abs(gains))
    if other is not None:
        assert np.max(np.abs(other.conj() @ w)) < 1e-9 * np.max(np.abs(gains))


def test_matches_numpy_pinv():
    rng = np.random.default_rng(0)
    own, other = _complex(rng, (3, 6)), _complex(rng, (3, 6))
    a = np.concatenate([own, other]).conj()
    ref = np.linalg.pinv(a)[:, :3]
    ref /= np.linalg.norm(ref, axis=0)
    np.testing.assert_allclose(build_zf_precoder(own, other), ref, atol=1e-12)


def test_too_many_constraints():
    rng = np.random.default_rng(0)
    with pytest.raises(DomainError):
        build_zf_precoder(_complex(rng, (3, 4)), _complex(rng, (2, 4)))
    with pytest.raises(DomainError):
        build_zf_precoder(_complex(rng, (2, 4)), None, antennas=5)


def test_singular_stack_detected():
    rng = np.random.default_rng(0)
    own = _complex(rng, (2, 4))
    other = np.stack([own[0], _complex(rng, 4)])  # duplicate row
    assert stack_singular(own, other)
    with pytest.raises(SingularStackError) as info:
        build_zf_precoder(own[None], other[None])
    assert info.value.trial_index == 0
    _, bad = zf_beams(own, other)
    assert bool(bad)


def test_perfect_csi_kills_cross_interference():
    cfg = ScenarioConfig()
    geom = build_geometry(cfg)
    real = draw_channels(geom, 16, trial_rng(0, 0))
    from dataclasses import replace

    real = replace(real, cross1_q=real.cross1, cross2_q=real.cross2)
    lp = link_powers(real, build_precoders(real))
    assert np.max(lp.inter / lp.signal) < 1e-18
    assert np.max(lp.intra / lp.signal) < 1e-18


def test_zero_bit_users_are_not_nulled():
    cfg = ScenarioConfig(users_per_cell=2, user_positions=[1600.0, 1600.0])
    geom = build_geometry(cfg)
    real = quantize_cross_channels(draw_channel_batch(geom, 4, 0, range(200)), geom, np.array([0, 30]))
    lp = link_powers(real, build_precoders(real, active=[False, True]))
    assert lp.inter[:, 0].mean() > 1.0  # unprotected user sees about P2 * N / 2
    assert lp.inter[:, 1].mean() < 1e-12


def test_sinr_and_rate():
    cfg = ScenarioConfig()
    geom = build_geometry(cfg)
    real = quantize_cross_channels(draw_channel_batch(geom, 16, 0, range(4)), geom, np.full(8, 6))
    sinr = instantaneous_sinr(real, build_precoders(real), 1.0)
    assert sinr.shape == (4, 8) and np.all(sinr > 0)
    np.testing.assert_allclose(per_user_rate(sinr), np.log2(1 + sinr))
    assert per_user_rate(0.0) == 0.0
    with pytest.raises(DomainError):
        per_user_rate(-1.0)
