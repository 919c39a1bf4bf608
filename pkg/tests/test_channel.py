import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from backhaul import DomainError, ScenarioConfig, build_geometry
from backhaul.channel import (
    QuantizerSpec,
    analytic_q,
    draw_channel_batch,
    draw_channels,
    peak_range,
    quantize,
    quantize_cross_channels,
    quantize_vector,
    quantizer_const,
    trial_rng,
)


@pytest.fixture(scope="module")
def geom():
    return build_geometry(ScenarioConfig())


def test_trial_streams_are_order_independent(geom):
    forward = draw_channel_batch(geom, 16, 3, [0, 1, 2])
    single = draw_channels(geom, 16, trial_rng(3, 2))
    np.testing.assert_array_equal(forward.own1[2], single.own1)
    assert not np.array_equal(draw_channels(geom, 16, trial_rng(3, 2, attempt=1)).own1, single.own1)


def test_entry_variance_is_received_power(geom):
    real = draw_channel_batch(geom, 16, 0, range(400))
    own_var = np.mean(np.abs(real.own1) ** 2, axis=(0, 2))
    expected = np.array([u.rx_power_own for u in geom])
    np.testing.assert_allclose(own_var, expected, rtol=0.05)
    # circular symmetry: no pseudo-covariance
    pseudo = np.abs(np.mean(real.cross1**2, axis=(0, 2)))
    assert np.all(pseudo < 0.05 * np.array([u.rx_power_other for u in geom]))


def test_quantizer_spec():
    spec = QuantizerSpec(3, 2.0)
    assert spec.levels == 8 and spec.step == 0.5
    assert spec.noise_variance == pytest.approx(0.5**2 / 6)
    with pytest.raises(DomainError):
        QuantizerSpec(-1, 1.0)
    with pytest.raises(DomainError):
        QuantizerSpec(2, 0.0)


def test_midrise_levels():
    x = np.array([-1.0, -0.6, -0.1, 0.1, 0.6, 1.0]) + 0j
    hq, _ = quantize_vector(x, QuantizerSpec(2, 1.0))
    np.testing.assert_allclose(hq.real, [-0.75, -0.75, -0.25, 0.25, 0.75, 0.75])


def test_zero_bits_gives_zero():
    h = np.array([1 + 2j, -3 + 0.5j])
    assert np.all(quantize(h, 0).hq == 0)


def test_fixed_range_counts_clipping():
    out = quantize(np.array([5 + 0j, 0.1 + 0.1j]), 4, 1.0)
    assert out.clipped == 1
    assert out.hq[0].real == pytest.approx(1.0 - 1.0 / 16)


@given(
    st.lists(st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False), min_size=1, max_size=20),
    st.integers(0, 16),
)
def test_peak_range_never_clips_and_error_bounded(values, bits):
    h = np.array(values, dtype=complex)
    out = quantize(h, bits)
    assert out.clipped == 0
    np.testing.assert_allclose(out.hq + out.nq, h, rtol=0, atol=1e-9)
    c = peak_range(h)[0]
    half_step = c / 2.0**bits
    assert np.all(np.abs(out.nq.real) <= half_step * (1 + 1e-9) + 1e-300)
    assert np.all(np.abs(out.nq.imag) <= half_step * (1 + 1e-9) + 1e-300)


def test_quantizer_rejects_bad_bits():
    with pytest.raises(DomainError):
        quantize(np.ones(3, dtype=complex), -1)
    with pytest.raises(DomainError):
        quantize(np.ones(3, dtype=complex), 1.5)


def test_analytic_q_law():
    assert analytic_q(0, 2.0) == 2.0
    assert analytic_q(3, 2.0) == pytest.approx(2.0 / 64)
    assert analytic_q(np.inf, 2.0) == 0.0
    with pytest.raises(DomainError):
        analytic_q(-1, 1.0)


def test_fixed_range_const():
    assert quantizer_const(16, clip_sigmas=4.0) == pytest.approx(16 / 3)


@pytest.mark.parametrize("m", [8, 16])
def test_peak_const_matches_simulation(m):
    rng = np.random.default_rng(1)
    h = (rng.standard_normal((50_000, m)) + 1j * rng.standard_normal((50_000, m))) / np.sqrt(2)
    nq = quantize(h, 6).nq
    measured = np.mean(np.abs(nq) ** 2) * 4.0**6
    assert measured == pytest.approx(quantizer_const(m), rel=0.01)


def test_quantize_cross_channels_mirrors_bits(geom):
    real = draw_channel_batch(geom, 16, 0, range(3))
    bits = np.arange(8)
    q = quantize_cross_channels(real, geom, bits)
    assert q.cross1_q.shape == real.cross1.shape
    assert np.all(q.cross1_q[:, 0] == 0) and np.all(q.cross2_q[:, 0] == 0)
    err = np.abs(q.cross1 - q.cross1_q) ** 2
    assert err[:, 7].mean() < err[:, 1].mean()
    np.testing.assert_array_equal(q.bits, bits)
