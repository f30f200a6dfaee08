"""Tests for harness module: folds, online sessions and experiment runs."""

import dataclasses

import numpy as np
import pytest

from viewpoint_sim.channel import ChannelConfig
from viewpoint_sim.config import ExperimentConfig
from viewpoint_sim.core import Axis, Imputation, TraceSet, WindowConfig, average_prediction_error
from viewpoint_sim.errors import ColdWindowError, DataError, FoldError, TraceTooShortError
from viewpoint_sim.harness import (
    FoldPlan,
    Regime,
    SessionState,
    compare_offline,
    compare_schemes,
    kfold_split,
    online_step,
    run_experiment,
    run_session,
    run_shared_sessions,
    simulate_uplink,
    uplink_draws,
)
from viewpoint_sim.linear import init_lr
from viewpoint_sim.model_store import ModelStore
from viewpoint_sim.retransmission import RetransConfig, Scheme, UplinkOutcome
from viewpoint_sim.traces import synth_traces

GENIE = UplinkOutcome(True, 1, 1, 0, 0)
LOST = UplinkOutcome(False, 1, None, 4, 1)


@pytest.fixture
def ramp(make_trace):
    """30-slot yaw ramp."""
    return make_trace(np.linspace(-60.0, 60.0, 30))


@pytest.fixture
def lr_model():
    return init_lr(5, order=2, learning_rate=0.1)


class TestKfoldSplit:
    """Tests for kfold_split."""

    def test_per_video_partition(self, small_dataset):
        """Every trace is tested exactly once, users split within each video."""
        folds = kfold_split(small_dataset, FoldPlan(k_cross=2), seed=0)
        assert len(folds) == 2
        tested = [tr.key for fold in folds for tr in fold.test]
        assert sorted(tested) == [tr.key for tr in small_dataset]
        for fold in folds:
            assert {tr.key for tr in fold.train}.isdisjoint(tr.key for tr in fold.test)
            assert len(fold.train) + len(fold.test) == len(small_dataset)
            assert sorted(tr.video_id for tr in fold.test) == [1, 1, 2, 2]

    def test_per_video_user_census(self):
        """Each fold tests users_per_video / k users of every video, each user once."""
        dataset = synth_traces(2, 10, 20, seed=0)
        folds = kfold_split(dataset, FoldPlan(k_cross=5), seed=8)
        for video_id in (1, 2):
            per_fold = [
                sorted(tr.user_id for tr in fold.test if tr.video_id == video_id)
                for fold in folds
            ]
            assert all(len(users) == 2 for users in per_fold)
            assert sorted(u for users in per_fold for u in users) == list(range(10))
        for fold in folds:
            assert len(fold.train) == 16

    def test_deterministic(self, small_dataset):
        """Same seed, same folds."""
        a = kfold_split(small_dataset, FoldPlan(k_cross=2), seed=4)
        b = kfold_split(small_dataset, FoldPlan(k_cross=2), seed=4)
        assert [[tr.key for tr in f.test] for f in a] == [[tr.key for tr in f.test] for f in b]

    def test_too_few_users(self, small_dataset):
        """Should fail when a video has fewer users than folds."""
        with pytest.raises(FoldError):
            kfold_split(small_dataset, FoldPlan(k_cross=5), seed=0)

    def test_all_videos_regime(self):
        """Test folds hold whole videos."""
        dataset = synth_traces(4, 2, 20, seed=0)
        folds = kfold_split(dataset, FoldPlan(k_cross=2, regime="all-videos"), seed=1)
        for fold in folds:
            test_videos = {tr.video_id for tr in fold.test}
            assert len(test_videos) == 2
            assert test_videos.isdisjoint(tr.video_id for tr in fold.train)

    def test_all_videos_indivisible(self):
        """Should fail when videos do not split evenly."""
        dataset = synth_traces(3, 2, 20, seed=0)
        with pytest.raises(FoldError):
            kfold_split(dataset, FoldPlan(k_cross=2, regime=Regime.ALL_VIDEOS), seed=0)

    def test_single_fold(self, small_dataset):
        """k_cross = 1 tests everything with an empty training set."""
        (fold,) = kfold_split(small_dataset, FoldPlan(k_cross=1), seed=0)
        assert fold.train == ()
        assert len(fold.test) == len(small_dataset)


class TestOnlineStep:
    """Tests for online_step."""

    def _warm_state(self, model, values=(10.0, 20.0, 30.0, 40.0, 50.0)):
        state = SessionState.start(model, WindowConfig(t_w=5))
        for v in values:
            state.window.push({Axis.Y: v})
        return state

    def test_predicts_in_degrees(self, lr_model):
        """Zero-weight LR predicts normalized 0, i.e. 180 degrees."""
        state, preds = online_step(self._warm_state(lr_model), 5, 60.0, GENIE)
        assert preds == {Axis.Y: 180.0}
        assert state.log[-1].predicted == {Axis.Y: 180.0}

    def test_delivered_sample_updates(self, lr_model):
        """A delivered sample trains the model and enters the window."""
        state, _ = online_step(self._warm_state(lr_model), 5, 60.0, GENIE)
        assert not state.model.same_params(lr_model)
        assert state.window.entries(Axis.Y)[-1] == 60.0
        assert state.log[-1].updated

    def test_lost_sample_does_not_update(self, lr_model):
        """A lost sample leaves the model alone and enters the window as NULL."""
        state, _ = online_step(self._warm_state(lr_model), 5, 60.0, LOST)
        assert state.model.same_params(lr_model)
        assert state.window.entries(Axis.Y)[-1] is None
        assert not state.log[-1].updated

    def test_cold_window(self, lr_model):
        """Should refuse to predict from a partial window."""
        state = SessionState.start(lr_model, WindowConfig(t_w=5))
        with pytest.raises(ColdWindowError):
            online_step(state, 0, 10.0, GENIE)


class TestRunSession:
    """Tests for run_session and its uplink inputs."""

    def test_scored_slot_count(self, ramp, lr_model):
        """Scores T - t_w - d + 1 slots, all delivered under genie."""
        for d in (1, 3):
            state = run_session(
                ramp,
                lr_model,
                ChannelConfig(),
                RetransConfig(scheme="genie"),
                WindowConfig(t_w=5, d=d),
                seed=0,
            )
            assert len(state.log) == 30
            assert len(state.scored()) == 30 - 5 - d + 1
            assert state.scored()[0].t == 5 + d - 1
            assert state.delivered_fraction() == 1.0

    @pytest.mark.parametrize("d", [1, 2])
    def test_frozen_genie_matches_offline(self, ramp, lr_model, d):
        """With learning rate 0 and genie delivery, online equals offline."""
        model = lr_model.with_params(
            {"W": np.linspace(-0.2, 0.3, 10), "b": np.array([0.1])}
        ).with_learning_rate(0.0)
        window_cfg = WindowConfig(t_w=5, d=d)
        state = run_session(
            ramp, model, ChannelConfig(), RetransConfig(scheme="genie"), window_cfg, seed=0
        )
        (online,) = state.error_records(1, 0)
        (offline,) = compare_offline({Axis.Y: model}, ramp, window_cfg)
        np.testing.assert_array_equal(online.slots, offline.slots)
        np.testing.assert_allclose(online.squared_errors, offline.squared_errors)

    def test_all_lost_never_learns(self, ramp, lr_model):
        """Without deliveries the model stays at its start."""
        state = run_session(
            ramp,
            lr_model,
            ChannelConfig(),
            RetransConfig(),
            WindowConfig(t_w=5),
            seed=0,
            outcomes=[LOST] * len(ramp),
        )
        assert state.model.same_params(lr_model)
        assert state.delivered_fraction() == 0.0

    def test_outcome_count_must_match(self, ramp, lr_model):
        """Should reject an outcome list of the wrong length."""
        with pytest.raises(DataError):
            run_session(
                ramp,
                lr_model,
                ChannelConfig(),
                RetransConfig(),
                WindowConfig(t_w=5),
                seed=0,
                outcomes=[GENIE],
            )

    def test_too_short(self, make_trace, lr_model):
        """Should reject traces shorter than t_w + d."""
        with pytest.raises(TraceTooShortError):
            run_session(
                make_trace([0.0] * 5),
                lr_model,
                ChannelConfig(),
                RetransConfig(),
                WindowConfig(t_w=5),
                seed=0,
            )

    def test_interpolate_imputation(self, ramp, lr_model):
        """Interpolation runs end to end."""
        state = run_session(
            ramp,
            lr_model,
            ChannelConfig(),
            RetransConfig(scheme="single-shot"),
            WindowConfig(t_w=5),
            seed=2,
            imputation=Imputation.INTERPOLATE,
        )
        assert len(state.scored()) == 25

    def test_compare_offline_is_pure(self, ramp, lr_model):
        """Offline scoring should not train the model."""
        before = lr_model.flat_params().copy()
        compare_offline({Axis.Y: lr_model}, ramp, WindowConfig(t_w=5))
        np.testing.assert_array_equal(lr_model.flat_params(), before)

    def test_compare_offline_genie_outcomes(self, ramp, lr_model):
        """Delivering every slot is the same as scoring fully observed windows."""
        model = lr_model.with_params({"W": np.linspace(-0.2, 0.3, 10), "b": np.array([0.1])})
        window_cfg = WindowConfig(t_w=5)
        (full,) = compare_offline({Axis.Y: model}, ramp, window_cfg)
        (delivered,) = compare_offline({Axis.Y: model}, ramp, window_cfg, [GENIE] * len(ramp))
        np.testing.assert_array_equal(full.slots, delivered.slots)
        np.testing.assert_allclose(full.squared_errors, delivered.squared_errors)

    def test_compare_offline_reads_deliveries(self, ramp, lr_model):
        """With losses, the frozen model sees the same held windows as a session."""
        model = lr_model.with_params({"W": np.linspace(-0.2, 0.3, 10), "b": np.array([0.1])})
        window_cfg = WindowConfig(t_w=5)
        outcomes = [GENIE if t % 3 else LOST for t in range(len(ramp))]
        (offline,) = compare_offline({Axis.Y: model}, ramp, window_cfg, outcomes)
        state = run_session(
            ramp,
            model.with_learning_rate(0.0),
            ChannelConfig(),
            RetransConfig(),
            window_cfg,
            seed=0,
            outcomes=outcomes,
        )
        (frozen,) = state.error_records(1, 0)
        np.testing.assert_array_equal(offline.slots, frozen.slots)
        np.testing.assert_array_equal(offline.squared_errors, frozen.squared_errors)
        (full,) = compare_offline({Axis.Y: model}, ramp, window_cfg)
        assert not np.allclose(offline.squared_errors, full.squared_errors)

    def test_compare_offline_outcome_count(self, ramp, lr_model):
        """Should reject an outcome list of the wrong length."""
        with pytest.raises(DataError):
            compare_offline({Axis.Y: lr_model}, ramp, WindowConfig(t_w=5), [GENIE])


class TestUplink:
    """Tests for per-slot uplink simulation."""

    def test_draw_shape(self, ramp):
        """One row of repetition draws per slot."""
        draws = uplink_draws(ramp, ChannelConfig(), RetransConfig(), seed=0)
        assert draws.shape == (30, 16)
        assert draws.dtype == bool

    def test_deterministic(self, ramp):
        """Same seed, same outcomes."""
        a = simulate_uplink(ramp, ChannelConfig(), RetransConfig(), seed=9)
        b = simulate_uplink(ramp, ChannelConfig(), RetransConfig(), seed=9)
        assert a == b

    def test_genie(self, ramp):
        """Genie delivers every slot."""
        outcomes = simulate_uplink(ramp, ChannelConfig(), RetransConfig(), 0, scheme="genie")
        assert all(o.success and o.latency_ttis == 0 for o in outcomes)

    def test_schemes_share_draws(self, ramp):
        """Proactive succeeds on every slot single-shot does."""
        channel = ChannelConfig(antennas=2)
        retrans = RetransConfig()
        draws = uplink_draws(ramp, channel, retrans, seed=1)
        shot = simulate_uplink(ramp, channel, retrans, 1, Scheme.SINGLE_SHOT, draws)
        pro = simulate_uplink(ramp, channel, retrans, 1, Scheme.PROACTIVE, draws)
        assert all(p.success for s, p in zip(shot, pro) if s.success)

    def test_compare_schemes(self, ramp, lr_model):
        """Should return one session per scheme."""
        states = compare_schemes(
            ramp, lr_model, ChannelConfig(), RetransConfig(), WindowConfig(t_w=5), seed=0
        )
        assert set(states) == set(Scheme)
        assert states[Scheme.GENIE].delivered_fraction() == 1.0
        assert (
            states[Scheme.PROACTIVE].delivered_fraction()
            >= states[Scheme.SINGLE_SHOT].delivered_fraction()
        )


class TestSharedSessions:
    """Tests for run_shared_sessions."""

    def test_users_share_one_model(self, make_trace, lr_model):
        """Every session should end on the same shared model."""
        traces = [make_trace(np.linspace(-30, 30, 12), user_id=u) for u in range(2)]
        outcomes = [[GENIE] * 12, [GENIE] * 12]
        states = run_shared_sessions(traces, lr_model, outcomes, WindowConfig(t_w=5))
        assert states[0].model.same_params(states[1].model)
        assert not states[0].model.same_params(lr_model)
        assert len(states[0].scored()) == 7


class TestRunExperiment:
    """Tests for run_experiment."""

    def test_report_shape(self, small_dataset, fast_config):
        """Report covers every fold and scored slot."""
        report = run_experiment(small_dataset, fast_config)
        assert len(report.folds) == 2
        assert report.n_scored_slots == 8 * (40 - 5 - 1 + 1)
        assert report.mse >= 0.0
        assert 0.0 <= report.normalized_error <= 0.5
        assert report.offline_mse is not None
        assert report.scheme == "proactive"
        assert set(report.slot_errors) == {"proactive", "offline"}
        assert len(report.epoch_losses) == 1
        assert len(report.outcome_records) == 8 * 40

    def test_overall_error_is_mean_of_folds(self, small_dataset, fast_config):
        """Overall error averages the per-fold errors."""
        report = run_experiment(small_dataset, fast_config)
        assert report.mse == pytest.approx(np.mean([f.mse for f in report.folds]))

    def test_deterministic(self, small_dataset, fast_config):
        """Same config and seed give the same report."""
        a = run_experiment(small_dataset, fast_config)
        b = run_experiment(small_dataset, fast_config)
        assert a.to_dict() == b.to_dict()

    def test_compare_schemes(self, small_dataset, fast_config):
        """All schemes run on the same models; genie delivers everything."""
        cfg = dataclasses.replace(fast_config, compare_schemes=True)
        report = run_experiment(small_dataset, cfg)
        assert set(report.scheme_mse) == {"proactive", "single-shot", "genie"}
        assert report.delivered_fraction["genie"] == 1.0
        assert report.delivered_fraction["proactive"] >= report.delivered_fraction["single-shot"]

    def test_shared_model(self, small_dataset, fast_config):
        """Shared-model runs score the same slots."""
        cfg = dataclasses.replace(fast_config, shared_model=True)
        assert run_experiment(small_dataset, cfg).n_scored_slots == 280

    def test_single_fold_fresh_model(self, small_dataset, fast_config):
        """k_cross = 1 starts every user from an untrained model."""
        cfg = fast_config.with_overrides({"plan.k_cross": 1})
        report = run_experiment(small_dataset, cfg)
        assert len(report.folds) == 1
        assert report.epoch_losses == []

    def test_sweeps(self, small_dataset, fast_config):
        """One sweep point per window size and user count."""
        cfg = fast_config.with_overrides({"sweep_windows": [3, 6], "sweep_users": [1, 2]})
        report = run_experiment(small_dataset, cfg)
        assert [p.value for p in report.window_sweep] == [3, 6]
        assert [p.value for p in report.users_sweep] == [1, 2]
        assert all(p.mse >= 0.0 for p in report.window_sweep + report.users_sweep)

    def test_model_store_reuse(self, small_dataset, fast_config, tmp_path):
        """A second run trains nothing new."""
        store = ModelStore(tmp_path / "models")
        first = run_experiment(small_dataset, fast_config, store)
        misses = store.misses
        second = run_experiment(small_dataset, fast_config, store)
        assert store.misses == misses
        assert store.hits >= misses
        assert first.to_dict() == second.to_dict()

    def test_empty_dataset(self, fast_config):
        """Should refuse to run on nothing."""
        with pytest.raises(DataError):
            run_experiment(TraceSet(()), fast_config)

    def test_frozen_genie_online_equals_offline(self, small_dataset, fast_config):
        """Genie online learning at rate 0 reproduces the offline error."""
        cfg = dataclasses.replace(
            fast_config,
            online_learning_rate=0.0,
            retrans=RetransConfig(scheme="genie"),
        )
        report = run_experiment(small_dataset, cfg)
        assert report.mse == pytest.approx(report.offline_mse)

    def test_frozen_proactive_online_equals_offline(self, small_dataset, fast_config):
        """The offline baseline reads the same deliveries as the online sessions."""
        cfg = dataclasses.replace(fast_config, online_learning_rate=0.0)
        report = run_experiment(small_dataset, cfg)
        assert report.delivered_fraction["proactive"] < 1.0
        assert report.mse == pytest.approx(report.offline_mse)


def test_average_over_sessions_matches_pooled(ramp, lr_model):
    """Equal-length users pool into one error."""
    states = [
        run_session(ramp, lr_model, ChannelConfig(), RetransConfig(), WindowConfig(t_w=5), s)
        for s in (0, 1)
    ]
    records = [r for i, s in enumerate(states) for r in s.error_records(1, i)]
    pooled = np.concatenate([r.squared_errors for r in records]).mean()
    assert average_prediction_error(records) == pytest.approx(pooled)


def _ensemble_config(seed: int, slots: int, **overrides) -> ExperimentConfig:
    data = {
        "seed": seed,
        "synthetic": {"n_videos": 1, "users_per_video": 10, "t_tot": slots},
        "plan": {"k_cross": 5},
    }
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


def _ensemble_dataset(cfg: ExperimentConfig) -> TraceSet:
    s = cfg.synthetic
    return synth_traces(s.n_videos, s.users_per_video, s.t_tot, cfg.seed, s.regime_shift)


@pytest.fixture(scope="module")
def regime_shift_runs():
    """GRU and 15-order LR runs over regime-shift data, three seeds."""
    runs = []
    for seed in range(3):
        synthetic = {"n_videos": 1, "users_per_video": 10, "t_tot": 240, "regime_shift": True}
        cfg = _ensemble_config(seed, 240, synthetic=synthetic)
        dataset = _ensemble_dataset(cfg)
        gru = run_experiment(dataset, cfg)
        lr = run_experiment(dataset, cfg.with_overrides({"predictor": "lr", "train.order": 15}))
        runs.append((gru, lr))
    return runs


@pytest.mark.slow
class TestEnsembles:
    """Seeded multi-run comparisons at default settings."""

    def test_scheme_dominance(self):
        """Genie >= proactive >= single-shot in delivery per run and in mean error."""
        errors = {"genie": [], "proactive": [], "single-shot": []}
        for seed in range(5):
            cfg = _ensemble_config(
                seed, 150, compare_schemes=True, compare_offline=False, plan={"k_cross": 2}
            )
            report = run_experiment(_ensemble_dataset(cfg), cfg)
            frac = report.delivered_fraction
            assert frac["genie"] == 1.0 >= frac["proactive"] >= frac["single-shot"]
            for scheme in errors:
                errors[scheme].append(report.scheme_mse[scheme])
        mean = {scheme: np.mean(values) for scheme, values in errors.items()}
        assert mean["genie"] <= mean["proactive"] * 1.01
        assert mean["proactive"] <= mean["single-shot"] * 1.01

    def test_online_beats_frozen_offline(self, regime_shift_runs):
        """Online GRU under proactive delivery is at least 20% below the frozen model."""
        online = np.mean([gru.mse for gru, _ in regime_shift_runs])
        offline = np.mean([gru.offline_mse for gru, _ in regime_shift_runs])
        assert online <= 0.8 * offline

    def test_lr_trails_gru(self, regime_shift_runs):
        """15-order LR error is at least 1.5 times the online GRU error."""
        gru = np.mean([gru.mse for gru, _ in regime_shift_runs])
        lr = np.mean([lr.mse for _, lr in regime_shift_runs])
        assert lr >= 1.5 * gru
