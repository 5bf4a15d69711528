import numpy as np
import pytest
from scipy import stats

from mzi_align.randomization import (
    NOMINAL_RADIUS,
    RandomizationConfig,
    config_from_name,
    draw_episode,
    draw_step,
)

KS_CRIT_1PCT = 1.628  # asymptotic 1% critical coefficient: D_crit = c / sqrt(n)


class TestConfig:
    def test_defaults(self):
        cfg = RandomizationConfig()
        assert cfg.radius_rel == 0.20
        assert cfg.pixel_noise_rel == 0.20
        assert cfg.brightness_rel == 0.30
        assert cfg.phase_noise_sigma == 0.5
        assert cfg.duty_range == (0.7, 0.95)

    def test_validation(self):
        with pytest.raises(ValueError):
            RandomizationConfig(radius_rel=1.2)
        with pytest.raises(ValueError):
            RandomizationConfig(phase_noise_sigma=-0.1)
        with pytest.raises(ValueError):
            RandomizationConfig(duty_range=(0.0, 0.5))

    def test_named_presets(self):
        assert config_from_name("off") == RandomizationConfig.all_off()
        assert config_from_name("no-phase-noise").phase_noise_enabled is False
        assert config_from_name("no-phase-noise").pixel_noise_enabled is True
        with pytest.raises(ValueError):
            config_from_name("bogus")

    def test_without_unknown(self):
        with pytest.raises(ValueError):
            RandomizationConfig().without("gravity")


class TestEpisodeDraws:
    def test_disabled_returns_nominal(self):
        rng = np.random.default_rng(0)
        cfg = RandomizationConfig(radius_enabled=False)
        assert draw_episode(rng, cfg) == NOMINAL_RADIUS

    @pytest.mark.slow
    def test_uniform_radius_statistics(self):
        rng = np.random.default_rng(11)
        cfg = RandomizationConfig()
        draws = np.array([draw_episode(rng, cfg) for _ in range(10_000)])
        assert draws.min() >= 0.568
        assert draws.max() <= 0.852
        assert draws.mean() == pytest.approx(0.71, rel=0.01)
        stat = stats.kstest(draws, stats.uniform(0.568, 0.852 - 0.568).cdf).statistic
        assert stat < KS_CRIT_1PCT / np.sqrt(len(draws))

    def test_reproducible(self):
        cfg = RandomizationConfig()
        a = draw_episode(np.random.default_rng(42), cfg)
        b = draw_episode(np.random.default_rng(42), cfg)
        assert a == b


class TestStepDraws:
    def test_all_disabled_is_identity(self):
        rng = np.random.default_rng(0)
        d = draw_step(rng, RandomizationConfig.all_off())
        assert d.brightness == 1.0
        assert d.cyclic_shift == 0
        assert d.duty == 0.5
        assert np.all(d.phase_offsets == 0.0)
        assert d.pixel_noise_rel == 0.0

    def test_draw_ranges(self):
        rng = np.random.default_rng(3)
        cfg = RandomizationConfig()
        for _ in range(200):
            d = draw_step(rng, cfg)
            assert 0.7 <= d.brightness <= 1.3
            assert 0 <= d.cyclic_shift <= 15
            assert 0.7 <= d.duty <= 0.95
            assert len(d.phase_offsets) == 16

    @pytest.mark.slow
    def test_phase_offset_sigma(self):
        rng = np.random.default_rng(5)
        cfg = RandomizationConfig()
        offs = np.concatenate([draw_step(rng, cfg).phase_offsets for _ in range(10_000)])
        assert offs.std() == pytest.approx(0.5, rel=0.02)

    @pytest.mark.slow
    def test_brightness_uniform(self):
        rng = np.random.default_rng(7)
        cfg = RandomizationConfig()
        b = np.array([draw_step(rng, cfg).brightness for _ in range(10_000)])
        stat = stats.kstest(b, stats.uniform(0.7, 0.6).cdf).statistic
        assert stat < KS_CRIT_1PCT / np.sqrt(len(b))

    def test_equal_seeds_equal_sequences(self):
        cfg = RandomizationConfig()
        r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
        for _ in range(20):
            a, b = draw_step(r1, cfg), draw_step(r2, cfg)
            assert a.brightness == b.brightness
            assert a.cyclic_shift == b.cyclic_shift
            assert a.duty == b.duty
            assert np.array_equal(a.phase_offsets, b.phase_offsets)
            assert a.pixel_noise_seed == b.pixel_noise_seed
