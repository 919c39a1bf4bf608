import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from backhaul import ConfigError, DomainError, ScenarioConfig, build_geometry, load_config, path_loss
from backhaul.geometry import apply_mapping, rx_powers


def test_defaults_resolve():
    cfg = ScenarioConfig()
    assert cfg.antennas == 16
    assert cfg.user_positions == tuple(200.0 * i for i in range(1, 9))
    assert cfg.gain == 1.0


def test_user_count_change_rederives_defaults():
    cfg = ScenarioConfig().replace(users_per_cell=4)
    assert cfg.antennas == 8
    assert cfg.user_positions == (400.0, 800.0, 1200.0, 1600.0)


def test_two_user_distances():
    cfg = ScenarioConfig(users_per_cell=2, user_positions=[800.0, 1600.0])
    geom = build_geometry(cfg)
    assert [u.d_other for u in geom] == [2400.0, 1600.0]


def test_reference_point_identity():
    cfg = ScenarioConfig(reference_loss=0.3)
    assert path_loss(7.0, cfg.reference_distance, cfg) == pytest.approx(7.0 * 0.3, rel=1e-15)


@pytest.mark.parametrize("d", [0.0, -5.0, np.inf])
def test_path_loss_rejects_bad_distance(d):
    with pytest.raises(DomainError):
        path_loss(1.0, d, ScenarioConfig())


@given(st.floats(1.0, 5000.0), st.floats(1.0, 5000.0))
def test_path_loss_monotone(d1, d2):
    cfg = ScenarioConfig()
    if d1 < d2:
        assert path_loss(10.0, d1, cfg) > path_loss(10.0, d2, cfg)


@given(st.lists(st.floats(1.0, 3199.0), min_size=1, max_size=6), st.floats(2.0, 5.0))
def test_power_ratio_matches_distance_ratio(positions, gamma):
    cfg = ScenarioConfig(users_per_cell=len(positions), user_positions=positions, path_loss_exponent=gamma)
    for u in build_geometry(cfg):
        expected = (u.d_own / u.d_other) ** (-gamma)
        assert u.rx_power_own / u.rx_power_other == pytest.approx(expected, rel=1e-12)


def test_rx_powers_arrays():
    own, other = rx_powers(build_geometry(ScenarioConfig()))
    assert own.shape == other.shape == (8,)
    assert np.all(np.diff(own) < 0) and np.all(np.diff(other) > 0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(users_per_cell=0),
        dict(antennas=15),
        dict(noise_power=0.0),
        dict(user_positions=[100.0] * 7),
        dict(user_positions=[3300.0] * 8),
        dict(trials=0),
        dict(clip_sigmas=-1.0),
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kwargs)


def test_dict_round_trip():
    cfg = ScenarioConfig(users_per_cell=3, noise_power=0.5, clip_sigmas=4.0)
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_unknown_field_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        ScenarioConfig.from_dict({"bogus": 1})


def test_apply_mapping_exponent_string():
    cfg = apply_mapping(ScenarioConfig(), {"noise_power": "1e-15"})
    assert cfg.noise_power == 1e-15


def test_load_config(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("users_per_cell: 4\nnoise_power: 2.0e-3\nrng_seed: 7\n")
    cfg = load_config(path)
    assert (cfg.users_per_cell, cfg.antennas, cfg.noise_power, cfg.rng_seed) == (4, 8, 2e-3, 7)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(bad)
    worse = tmp_path / "worse.yaml"
    worse.write_text("trials: -3\n")
    with pytest.raises(ConfigError, match="worse.yaml"):
        load_config(worse)
