from datetime import datetime, timedelta

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from lightweather.errors import ConfigError
from lightweather.model import StationCoord
from lightweather.synthetic import (
    SynthConfig,
    g_function,
    g_matrix,
    generate,
    random_station_coords,
)


def coords_for(n, seed=0):
    return random_station_coords(n, seed)[1]


def test_zero_amplitudes_give_zero_forcing():
    cfg = SynthConfig(amp_diurnal=0.0, amp_annual=0.0, amp_elev=0.0)
    c = StationCoord(45.0, 90.0, 1200.0)
    assert g_function(c, datetime(2020, 6, 15, 13), cfg) == 0.0


def test_diurnal_term_vanishes_at_pole():
    cfg = SynthConfig(amp_diurnal=5.0, amp_annual=0.0, amp_elev=0.0)
    pole = StationCoord(90.0, 30.0, 0.0)
    vals = [g_function(pole, datetime(2020, 1, 1, h), cfg) for h in range(24)]
    assert_allclose(vals, 0.0, atol=1e-12)


def test_g_function_is_pure():
    cfg = SynthConfig()
    c = StationCoord(-12.0, 77.0, 300.0)
    ts = datetime(2021, 3, 9, 4)
    assert g_function(c, ts, cfg) == g_function(c, ts, cfg)


def test_g_matrix_matches_scalar():
    cfg = SynthConfig()
    coords = coords_for(4)
    timestamps = [datetime(2020, 1, 1) + timedelta(hours=k) for k in range(50)]
    grid = g_matrix(coords, timestamps, cfg)
    for ti in (0, 13, 49):
        for si in range(4):
            assert grid[ti, si] == pytest.approx(
                g_function(coords[si], timestamps[ti], cfg), rel=1e-12
            )


def test_recurrence_collapses_without_ar_and_noise():
    cfg = SynthConfig(n_stations=3, n_steps=200, alpha=(), noise_std=0.0, seed=5)
    coords = coords_for(3)
    obs = generate(cfg, coords)
    grid = g_matrix(coords, obs.timestamps, cfg)
    assert_array_equal(obs.values[:, :, 0], grid)


def test_recurrence_replay_noise_free():
    cfg = SynthConfig(
        n_stations=2, n_steps=300, alpha=(0.4, 0.2, -0.1), noise_std=0.0, seed=9
    )
    coords = coords_for(2)
    obs = generate(cfg, coords)
    v = obs.values[:, :, 0]
    p = len(cfg.alpha)
    for si in range(2):
        for t in range(p, cfg.n_steps):
            expect = g_function(coords[si], obs.timestamps[t], cfg)
            for i, a in enumerate(cfg.alpha):
                expect += a * v[t - 1 - i, si]
            assert abs(v[t, si] - expect) <= 1e-9


def test_same_seed_bit_identical():
    cfg = SynthConfig(n_stations=3, n_steps=150, alpha=(0.3,), noise_std=0.7, seed=4)
    coords = coords_for(3)
    assert_array_equal(generate(cfg, coords).values, generate(cfg, coords).values)


def test_different_seeds_differ():
    coords = coords_for(2)
    a = generate(SynthConfig(n_stations=2, n_steps=100, noise_std=1.0, seed=1), coords)
    b = generate(SynthConfig(n_stations=2, n_steps=100, noise_std=1.0, seed=2), coords)
    assert not np.array_equal(a.values, b.values)


def test_unstable_alpha_rejected():
    with pytest.raises(ConfigError, match="unstable"):
        SynthConfig(alpha=(0.8, 0.3)).validate()


def test_station_streams_are_independent():
    # changing another station's coordinates must not disturb station 0
    base = SynthConfig(n_stations=2, n_steps=120, alpha=(0.2,), noise_std=0.5, seed=11)
    c1 = coords_for(2, seed=0)
    c2 = [c1[0], StationCoord(60.0, -120.0, 2000.0)]
    a = generate(base, c1)
    b = generate(base, c2)
    assert_array_equal(a.values[:, 0, 0], b.values[:, 0, 0])
    assert not np.array_equal(a.values[:, 1, 0], b.values[:, 1, 0])


def test_warmup_observes_ar_effect_from_first_step():
    cfg = SynthConfig(n_stations=1, n_steps=50, alpha=(0.5,), noise_std=0.0, seed=3)
    obs = generate(cfg, coords_for(1))
    v = obs.values[:, 0, 0]
    # step 1 = 0.5 * warmup + G; warmup is a nonzero gaussian draw
    assert v[0] != 0.0
    g1 = g_function(obs.coords[0], obs.timestamps[1], cfg)
    assert v[1] == pytest.approx(0.5 * v[0] + g1, rel=1e-12)


def test_bounded_running_max_with_stable_alpha():
    cfg = SynthConfig(
        n_stations=2, n_steps=5000, alpha=(0.5, 0.3), noise_std=0.5, seed=8
    )
    coords = coords_for(2)
    obs = generate(cfg, coords)
    grid = g_matrix(coords, obs.timestamps, cfg)
    gain = 1.0 / (1.0 - sum(abs(a) for a in cfg.alpha))
    bound = gain * (np.abs(grid).max() + 6.0 * cfg.noise_std) + 10.0
    assert np.abs(obs.values).max() < bound


def test_config_validation_bounds():
    with pytest.raises(ConfigError):
        SynthConfig(n_steps=0).validate()
    with pytest.raises(ConfigError, match="n_steps"):
        SynthConfig(n_steps=100).validate(t_h=48, t_f=24)
    SynthConfig(n_steps=720).validate(t_h=48, t_f=24)


def test_generate_rejects_wrong_coord_count():
    cfg = SynthConfig(n_stations=3, n_steps=100)
    with pytest.raises(ConfigError):
        generate(cfg, coords_for(2))


def test_observation_set_interchangeable_with_loader(tmp_path):
    from lightweather.data import (
        load_observations_csv,
        load_stations_csv,
        write_observations_csv,
        write_stations_csv,
    )

    cfg = SynthConfig(n_stations=2, n_steps=60, noise_std=0.3, seed=6)
    ids, coords = random_station_coords(2, 6)
    obs = generate(cfg, coords)
    write_stations_csv(tmp_path / "stations.csv", ids, coords)
    write_observations_csv(tmp_path / "observations.csv", obs)
    back_ids, back_coords = load_stations_csv(tmp_path / "stations.csv")
    again = load_observations_csv(tmp_path / "observations.csv", back_ids, back_coords)
    assert_array_equal(again.values, obs.values)
    assert again.timestamps == obs.timestamps
