"""Tests for channel module: placement, fading, MRC and the rate test."""

import numpy as np
import pytest

from viewpoint_sim.channel import (
    ChannelConfig,
    ChannelRealization,
    attempt_success,
    dbm_to_watts,
    distance_to_sbs,
    draw_channel,
    draw_fading,
    mrc_sinr,
    mrc_sinr_batch,
    place_users,
    success_probability,
    uplink_rate,
)
from viewpoint_sim.errors import ConfigError, DataError, DimensionMismatchError
from viewpoint_sim.rng import substream


def _median_distance(cfg: ChannelConfig) -> float:
    """Distance at which x_th * d^alpha equals M (mid-range success probability)."""
    x_th = cfg.sinr_threshold * cfg.noise_watts / cfg.tx_watts
    return (cfg.antennas / x_th) ** (1.0 / cfg.alpha)


def _empirical_success(cfg: ChannelConfig, distance: float, n: int, seed: int) -> float:
    h = draw_fading([distance], cfg, substream(seed, "channel-test", cfg.antennas), n)
    sinr = mrc_sinr_batch(h, cfg.noise_watts, cfg.tx_watts, user=0)
    return float(np.mean(attempt_success(uplink_rate(sinr, cfg), cfg)))


class TestChannelConfig:
    """Tests for ChannelConfig."""

    def test_defaults(self):
        """Should use 30 antennas, alpha 3 and -110 dBm noise."""
        cfg = ChannelConfig()
        assert cfg.antennas == 30
        assert cfg.alpha == 3.0
        assert cfg.noise_watts == pytest.approx(1e-14)
        assert cfg.r_th == 1.6e7

    def test_sinr_threshold(self):
        """Rate at the threshold SINR should equal r_th."""
        cfg = ChannelConfig()
        assert cfg.sinr_threshold == pytest.approx(2.0**1.6 - 1.0)
        assert uplink_rate(cfg.sinr_threshold, cfg) == pytest.approx(cfg.r_th)

    @pytest.mark.parametrize(
        "kwargs", [{"antennas": 0}, {"alpha": 0.0}, {"r_th": -1.0}, {"n_users": 0}]
    )
    def test_rejects_bad_values(self, kwargs):
        """Should reject invalid radio parameters."""
        with pytest.raises(ConfigError):
            ChannelConfig(**kwargs)

    def test_dbm_to_watts(self):
        """30 dBm is one watt."""
        assert dbm_to_watts(30.0) == pytest.approx(1.0)
        np.testing.assert_allclose(dbm_to_watts([0.0, 20.0]), [1e-3, 0.1])


class TestPlacement:
    """Tests for user placement."""

    def test_distance_floor(self):
        """A user at the centre is at min_distance."""
        cfg = ChannelConfig()
        distances = distance_to_sbs([[50.0, 50.0], [0.0, 0.0]], cfg)
        np.testing.assert_allclose(distances, [1.0, 50 * np.sqrt(2)])

    def test_positions_in_square(self):
        """Should place users inside the square, reproducibly."""
        cfg = ChannelConfig(side=20.0)
        positions, distances = place_users(50, cfg, seed=3)
        assert positions.shape == (50, 2)
        assert ((positions >= 0) & (positions <= 20.0)).all()
        assert (distances >= cfg.min_distance).all()
        np.testing.assert_array_equal(positions, place_users(50, cfg, seed=3)[0])

    def test_rejects_no_users(self):
        """Should require at least one user."""
        with pytest.raises(ConfigError):
            place_users(0, ChannelConfig(), seed=0)

    @pytest.mark.slow
    def test_mean_position_is_centre(self):
        """The mean of 10^5 positions is within 1% of the square centre."""
        cfg = ChannelConfig()
        positions, _ = place_users(100_000, cfg, seed=4)
        np.testing.assert_allclose(positions.mean(axis=0), [50.0, 50.0], rtol=0.01)


class TestFading:
    """Tests for channel draws."""

    def test_draw_channel(self):
        """Should draw one M-vector with path-loss scaling."""
        cfg = ChannelConfig(antennas=4)
        realization = draw_channel(10.0, cfg, seed=1)
        assert len(realization) == 4
        assert realization.distance == 10.0
        again = draw_channel(10.0, cfg, seed=1)
        np.testing.assert_array_equal(realization.h, again.h)

    def test_draw_channel_rejects_close_user(self):
        """Should reject distances below the floor."""
        with pytest.raises(ConfigError):
            draw_channel(0.5, ChannelConfig(), seed=0)

    def test_realization_validation(self):
        """Should reject empty or non-finite vectors."""
        with pytest.raises(DimensionMismatchError):
            ChannelRealization(h=np.zeros(0), distance=1.0)
        with pytest.raises(DataError):
            ChannelRealization(h=np.array([np.nan]), distance=1.0)

    def test_draw_fading_shape_and_power(self):
        """Mean per-antenna power should follow d^-alpha."""
        cfg = ChannelConfig(antennas=2, alpha=2.0)
        h = draw_fading([1.0, 10.0], cfg, np.random.default_rng(0), 20000)
        assert h.shape == (20000, 2, 2)
        power = np.mean(np.abs(h) ** 2, axis=(0, 2))
        np.testing.assert_allclose(power, [1.0, 0.01], rtol=0.05)

    @pytest.mark.slow
    @pytest.mark.parametrize("distance", [1.0, 100.0])
    def test_draw_channel_entry_variance(self, distance):
        """Each antenna's variance over 10^5 draws is within 2% of d^-alpha."""
        cfg = ChannelConfig(antennas=2)
        rng = np.random.default_rng(5)
        h = np.array([draw_channel(distance, cfg, rng).h for _ in range(100_000)])
        np.testing.assert_allclose(
            np.mean(np.abs(h) ** 2, axis=0), distance**-cfg.alpha, rtol=0.02
        )


class TestMrc:
    """Tests for MRC SINR."""

    def test_no_interference(self):
        """SINR should be P ||h||^2 / noise."""
        h = np.array([1.0 + 1.0j, 2.0])
        assert mrc_sinr(h, noise=0.5, tx_power=2.0) == pytest.approx(2.0 * 6.0 / 0.5)

    def test_orthogonal_interferer(self):
        """An orthogonal interferer should not reduce SINR."""
        h = np.array([1.0, 0.0])
        assert mrc_sinr(h, [np.array([0.0, 3.0])]) == pytest.approx(1.0)

    def test_aligned_interferer(self):
        """An interferer equal to the desired channel gives ||h||^2 / (||h||^2 + 1)."""
        h = np.array([3.0, 4.0])
        assert mrc_sinr(h, [h]) == pytest.approx(25.0 / 26.0)

    def test_zero_channel(self):
        """Should reject an all-zero desired vector."""
        with pytest.raises(DataError):
            mrc_sinr(np.zeros(3))

    def test_interferer_shape(self):
        """Should reject interferers of a different length."""
        with pytest.raises(DimensionMismatchError):
            mrc_sinr(np.ones(3), [np.ones(2)])

    def test_batch_matches_scalar(self):
        """Vectorized SINR should equal the per-user computation."""
        cfg = ChannelConfig(antennas=3)
        h = draw_fading([5.0, 20.0, 40.0], cfg, np.random.default_rng(7), 4)
        batch = mrc_sinr_batch(h, cfg.noise_watts, cfg.tx_watts)
        for n in range(4):
            for k in range(3):
                others = [h[n, i] for i in range(3) if i != k]
                expected = mrc_sinr(h[n, k], others, cfg.noise_watts, cfg.tx_watts)
                assert batch[n, k] == pytest.approx(expected, rel=1e-10)
        single = mrc_sinr_batch(h, cfg.noise_watts, cfg.tx_watts, user=1)
        np.testing.assert_allclose(single, batch[:, 1])

    def test_common_phase_rotation(self):
        """Rotating every vector by the same phase leaves the SINR unchanged."""
        rng = np.random.default_rng(2)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        others = [rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(3)]
        base = mrc_sinr(h, others, noise=0.3)
        for theta in (0.4, 1.7, np.pi):
            phase = np.exp(1j * theta)
            rotated = mrc_sinr(h * phase, [o * phase for o in others], noise=0.3)
            assert rotated == pytest.approx(base, rel=1e-12)

    def test_stronger_interferer_lowers_sinr(self):
        """Scaling up a non-orthogonal interferer strictly lowers the SINR."""
        h = np.array([1.0, 0.0])
        interferer = np.array([1.0, 1.0])
        sinrs = [mrc_sinr(h, [scale * interferer]) for scale in (0.5, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(sinrs, sinrs[1:]))


class TestSuccess:
    """Tests for the rate test and the closed-form success probability."""

    def test_threshold_is_inclusive(self):
        """A rate exactly at r_th succeeds."""
        cfg = ChannelConfig()
        assert attempt_success(cfg.r_th, cfg) is True
        assert attempt_success(cfg.r_th - 1.0, cfg) is False

    def test_probability_decreases_with_distance(self):
        """Farther users succeed less often."""
        cfg = ChannelConfig(antennas=4)
        d = _median_distance(cfg)
        p = success_probability([0.5 * d, d, 2.0 * d], cfg)
        assert 1.0 >= p[0] > p[1] > p[2] >= 0.0

    def test_matches_monte_carlo(self):
        """Empirical single-user success rate should match the closed form."""
        cfg = ChannelConfig(antennas=4)
        d = _median_distance(cfg)
        assert _empirical_success(cfg, d, 20000, seed=0) == pytest.approx(
            success_probability(d, cfg), abs=0.02
        )

    @pytest.mark.slow
    @pytest.mark.parametrize("antennas", [1, 4, 30])
    def test_matches_monte_carlo_1e5(self, antennas):
        """Within 1% absolute over 10^5 TTIs."""
        cfg = ChannelConfig(antennas=antennas)
        d = _median_distance(cfg)
        assert _empirical_success(cfg, d, 100_000, seed=1) == pytest.approx(
            success_probability(d, cfg), abs=0.01
        )
