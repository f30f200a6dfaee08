"""Online prediction sessions, K-fold cross validation and experiment runs.

Per viewpoint slot t of a test user: the model predicts V_t from a window ending at
slot t - d, the uplink tries to deliver V_t, and only a delivered V_t updates the model
and enters the window (an undelivered slot enters as NULL). The first t_w + d - 1
slots only warm the window up; every later slot is scored, the same slots an offline
model is scored on.
"""

import dataclasses
import hashlib
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import numpy as np

from .channel import ChannelConfig, attempt_success, draw_fading, mrc_sinr_batch, place_users
from .channel import uplink_rate
from .core import (
    Axis,
    ErrorRecord,
    Imputation,
    SlidingWindow,
    Trace,
    TraceSet,
    WindowConfig,
    average_prediction_error,
    denormalize_angle,
    make_windowed_examples,
    normalize_angle,
    normalized_error,
    wrap_angle,
)
from .errors import (
    ColdWindowError,
    ConfigError,
    DataError,
    FoldError,
    NonFiniteGradientError,
    TraceTooShortError,
)
from .models import PredictorModel
from .report import OFFLINE, FoldResult, RunReport, SweepPoint
from .retransmission import RetransConfig, Scheme, UplinkOutcome, deliver, max_repetitions
from .rng import substream
from .training import TrainResult, init_model, train_offline

if TYPE_CHECKING:
    from .config import ExperimentConfig
    from .model_store import ModelStore

logger = logging.getLogger(__name__)

ALL_VIDEOS = 0  # model-group key when one model serves every video


# ============================================================================
# Folds
# ============================================================================


class Regime(Enum):
    """How training and test data are split."""

    PER_VIDEO = "per-video"  # one model per video, users partitioned within each video
    ALL_VIDEOS = "all-videos"  # one model for all videos, videos partitioned

    @classmethod
    def parse(cls, value: "Regime | str") -> "Regime":
        if isinstance(value, Regime):
            return value
        try:
            return cls(str(value).strip().lower().replace("_", "-"))
        except ValueError:
            choices = ", ".join(r.value for r in cls)
            raise ConfigError(f"Unknown regime '{value}' (expected one of {choices})") from None


@dataclass(frozen=True)
class FoldPlan:
    k_cross: int = 4
    regime: Regime = Regime.PER_VIDEO

    def __post_init__(self):
        if self.k_cross < 1:
            raise ConfigError(f"k_cross must be >= 1, got {self.k_cross}")
        object.__setattr__(self, "regime", Regime.parse(self.regime))


@dataclass(frozen=True)
class Fold:
    index: int
    train: tuple[Trace, ...]
    test: tuple[Trace, ...]


def kfold_split(dataset: TraceSet, plan: FoldPlan, seed: int) -> list[Fold]:
    """Partition the dataset into k_cross disjoint test folds covering every trace."""
    k = plan.k_cross
    groups: list[list[Trace]] = [[] for _ in range(k)]
    if plan.regime is Regime.PER_VIDEO:
        for video_id, traces in dataset.by_video().items():
            if len(traces) < k:
                raise FoldError(f"video {video_id} has {len(traces)} users, fewer than k_cross={k}")
            order = substream(seed, "folds", video_id).permutation(len(traces))
            for i, part in enumerate(np.array_split(order, k)):
                groups[i].extend(traces[j] for j in part)
    else:
        videos = dataset.video_ids()
        if len(videos) % k:
            raise FoldError(f"{len(videos)} videos cannot be split into {k} equal groups")
        order = substream(seed, "folds").permutation(len(videos))
        by_video = dataset.by_video()
        for i, part in enumerate(np.array_split(order, k)):
            for j in part:
                groups[i].extend(by_video[videos[j]])

    folds = []
    for i, test in enumerate(groups):
        test_keys = {tr.key for tr in test}
        train = tuple(tr for tr in dataset if tr.key not in test_keys)
        folds.append(Fold(i, train, tuple(sorted(test, key=lambda tr: tr.key))))
    return folds


# ============================================================================
# Online sessions
# ============================================================================


@dataclass(frozen=True)
class SlotRecord:
    """One slot of a session; ``predicted`` is None while the window warms up."""

    t: int
    predicted: Optional[dict[Axis, float]]
    actual: dict[Axis, float]
    outcome: UplinkOutcome
    updated: bool


@dataclass
class SessionState:
    """A test user's online models, received-sample window and slot log."""

    models: dict[Axis, PredictorModel]
    window: SlidingWindow
    window_cfg: WindowConfig
    imputation: Imputation = Imputation.HOLD
    log: list[SlotRecord] = field(default_factory=list)

    @classmethod
    def start(
        cls,
        model: PredictorModel | Mapping[Axis, PredictorModel],
        window_cfg: WindowConfig,
        imputation: Imputation = Imputation.HOLD,
    ) -> "SessionState":
        window = SlidingWindow.for_config(window_cfg)
        return cls(_model_map(model, window_cfg), window, window_cfg, imputation)

    @property
    def model(self) -> PredictorModel:
        """The model when a single axis is predicted."""
        if len(self.models) != 1:
            raise ValueError(f"session predicts {len(self.models)} axes; use models")
        return next(iter(self.models.values()))

    def model_inputs(self) -> dict[Axis, np.ndarray]:
        """Imputed, normalized input per predicted axis."""
        if self.window_cfg.joint:
            shared = normalize_angle(self.window.imputed_matrix(self.imputation))
            return {axis: shared for axis in self.models}
        return {
            axis: normalize_angle(self.window.imputed(axis, self.imputation))
            for axis in self.models
        }

    def scored(self) -> list[SlotRecord]:
        return [r for r in self.log if r.predicted is not None]

    def delivered_fraction(self) -> float:
        if not self.log:
            return 0.0
        return sum(r.outcome.success for r in self.log) / len(self.log)

    def error_records(self, video_id: int, user_id: int) -> list[ErrorRecord]:
        scored = self.scored()
        slots = [r.t for r in scored]
        return [
            ErrorRecord.from_predictions(
                [r.predicted[axis] for r in scored],
                [r.actual[axis] for r in scored],
                slots,
                video_id,
                user_id,
                axis,
            )
            for axis in self.models
        ]


def _model_map(
    model: PredictorModel | Mapping[Axis, PredictorModel], window_cfg: WindowConfig
) -> dict[Axis, PredictorModel]:
    if isinstance(model, PredictorModel):
        if len(window_cfg.dims) != 1:
            raise ConfigError("one model per axis is needed when predicting several axes")
        return {window_cfg.dims[0]: model}
    models = {Axis.parse(a): m for a, m in model.items()}
    if set(models) != set(window_cfg.dims):
        raise ConfigError(f"models for {sorted(a.value for a in models)} do not match dims")
    return models


def _to_degrees(pred: float) -> float:
    return wrap_angle(denormalize_angle(pred))


def online_step(
    state: SessionState,
    t: int,
    actual: Mapping[Axis, float] | float,
    outcome: UplinkOutcome,
) -> tuple[SessionState, dict[Axis, float]]:
    """Predict slot t, then learn from V_t only if the uplink delivered it.

    Returns:
        The next state and the prediction per axis in degrees.
    """
    if not state.window.is_warm:
        raise ColdWindowError(f"slot {t}: window holds {len(state.window)} of {state.window.t_w}")
    actual = _angle_map(actual, state.window.dims)
    inputs = state.model_inputs()

    predictions = {}
    new_models = dict(state.models)
    for axis, model in state.models.items():
        if outcome.success and model.learning_rate > 0.0:
            pred, grads = model.gradients(inputs[axis], normalize_angle(actual[axis]))
            try:
                new_models[axis] = model.apply_gradients(grads)
            except NonFiniteGradientError as e:
                logger.warning(f"slot {t}: {e}; keeping previous parameters")
        else:
            pred = model.predict(inputs[axis])
        predictions[axis] = _to_degrees(pred)

    state.models = new_models
    state.window.push(actual if outcome.success else None)
    state.log.append(SlotRecord(t, predictions, actual, outcome, outcome.success))
    return state, predictions


def _angle_map(actual: Mapping[Axis, float] | float, dims: Sequence[Axis]) -> dict[Axis, float]:
    if isinstance(actual, Mapping):
        return {axis: float(actual[axis]) for axis in dims}
    if len(dims) != 1:
        raise ValueError("a scalar angle needs a single-axis session")
    return {dims[0]: float(actual)}


def _warmup_step(state: SessionState, t: int, actual: dict, outcome: UplinkOutcome) -> None:
    state.window.push(actual if outcome.success else None)
    state.log.append(SlotRecord(t, None, actual, outcome, False))


def uplink_draws(
    trace: Trace, channel_cfg: ChannelConfig, retrans_cfg: RetransConfig, seed: int
) -> np.ndarray:
    """Per-slot repetition successes, shape (len(trace), max_repetitions).

    The test user is user 0 of its cell; every scheme reads the same draws.
    """
    _, distances = place_users(
        channel_cfg.n_users, channel_cfg, substream(seed, "placement", *trace.key)
    )
    n = max_repetitions(retrans_cfg)
    rng = substream(seed, "fading", *trace.key)
    h = draw_fading(distances, channel_cfg, rng, len(trace) * n)
    h = h.reshape(len(trace), n, channel_cfg.n_users, channel_cfg.antennas)
    sinr = mrc_sinr_batch(h, channel_cfg.noise_watts, channel_cfg.tx_watts, user=0)
    return attempt_success(uplink_rate(sinr, channel_cfg), channel_cfg)


def simulate_uplink(
    trace: Trace,
    channel_cfg: ChannelConfig,
    retrans_cfg: RetransConfig,
    seed: int,
    scheme: Scheme | str | None = None,
    draws: Optional[np.ndarray] = None,
) -> list[UplinkOutcome]:
    """Delivery outcome of every slot of a trace; independent of any predictions.

    Args:
        scheme: Overrides ``retrans_cfg.scheme``.
        draws: Per-slot attempt successes, shape (slots, max repetitions); drawn when omitted.
    """
    scheme = Scheme.parse(scheme or retrans_cfg.scheme)
    if scheme is Scheme.GENIE:
        return [deliver(scheme, (), retrans_cfg) for _ in range(len(trace))]
    if draws is None:
        draws = uplink_draws(trace, channel_cfg, retrans_cfg, seed)
    return [deliver(scheme, row, retrans_cfg) for row in draws]


def run_session(
    trace: Trace,
    model: PredictorModel | Mapping[Axis, PredictorModel],
    channel_cfg: ChannelConfig,
    retrans_cfg: RetransConfig,
    window_cfg: WindowConfig,
    seed: int,
    imputation: Imputation = Imputation.HOLD,
    outcomes: Optional[Sequence[UplinkOutcome]] = None,
) -> SessionState:
    """Run one test user through every slot of a trace.

    Args:
        trace: The test user's trace.
        model: One model for every axis, or a model per axis.
        channel_cfg: Cell layout and link budget for the uplink draws.
        retrans_cfg: Delivery scheme and latency budget.
        window_cfg: Window length, horizon and predicted axes.
        seed: Root seed; the uplink draws use the trace's own substream.
        imputation: How undelivered slots enter the window.
        outcomes: Precomputed per-slot outcomes; drawn from the channel when omitted.

    Returns:
        The final session state, holding the updated models and every scored slot.
    """
    if len(trace) < window_cfg.t_w + window_cfg.d:
        raise TraceTooShortError(
            f"trace {trace.key} has {len(trace)} slots, needs at least "
            f"{window_cfg.t_w + window_cfg.d}"
        )
    if outcomes is None:
        outcomes = simulate_uplink(trace, channel_cfg, retrans_cfg, seed)
    if len(outcomes) != len(trace):
        raise DataError(f"{len(outcomes)} uplink outcomes for a trace of {len(trace)} slots")
    state = SessionState.start(model, window_cfg, imputation)
    for t in range(len(trace)):
        _advance(state, trace, t, outcomes[t])
    return state


def _advance(state: SessionState, trace: Trace, t: int, outcome: UplinkOutcome) -> None:
    actual = {axis: float(trace.series(axis)[t]) for axis in state.window.dims}
    if state.window.is_warm:
        online_step(state, t, actual, outcome)
    else:
        _warmup_step(state, t, actual, outcome)


def run_shared_sessions(
    traces: Sequence[Trace],
    model: PredictorModel | Mapping[Axis, PredictorModel],
    outcomes: Sequence[Sequence[UplinkOutcome]],
    window_cfg: WindowConfig,
    imputation: Imputation = Imputation.HOLD,
) -> list[SessionState]:
    """Sessions in lockstep that share one online model, users stepped in list order."""
    shared = _model_map(model, window_cfg)
    states = [SessionState.start(shared, window_cfg, imputation) for _ in traces]
    for t in range(max(len(tr) for tr in traces)):
        for trace, state, outs in zip(traces, states, outcomes):
            if t >= len(trace):
                continue
            state.models = shared
            _advance(state, trace, t, outs[t])
            shared = state.models
    for state in states:
        state.models = shared
    return states


def compare_offline(
    models: Mapping[Axis, PredictorModel],
    trace: Trace,
    window_cfg: WindowConfig,
    outcomes: Optional[Sequence[UplinkOutcome]] = None,
    imputation: Imputation = Imputation.HOLD,
) -> list[ErrorRecord]:
    """Frozen-model errors, scored on the online slot set.

    Args:
        models: Offline model per predicted axis; never updated.
        trace: The test user's trace.
        window_cfg: Window the models were trained on.
        outcomes: Per-slot uplink outcomes. When given, the frozen models read the same
            delivered samples an online session would; otherwise every window is fully
            observed.
        imputation: How undelivered slots are filled when ``outcomes`` is given.

    Returns:
        One ErrorRecord per axis.
    """
    if outcomes is not None:
        if len(outcomes) != len(trace):
            raise DataError(f"{len(outcomes)} uplink outcomes for a trace of {len(trace)} slots")
        frozen = {axis: model.with_learning_rate(0.0) for axis, model in models.items()}
        state = SessionState.start(frozen, window_cfg, imputation)
        for t in range(len(trace)):
            _advance(state, trace, t, outcomes[t])
        return state.error_records(trace.video_id, trace.user_id)
    records = []
    for axis, model in models.items():
        examples = make_windowed_examples(trace, window_cfg, axis)
        preds = [_to_degrees(model.predict(normalize_angle(ex.features))) for ex in examples]
        records.append(
            ErrorRecord.from_predictions(
                preds,
                [ex.target for ex in examples],
                [ex.t for ex in examples],
                trace.video_id,
                trace.user_id,
                axis,
            )
        )
    return records


def compare_schemes(
    trace: Trace,
    model: PredictorModel | Mapping[Axis, PredictorModel],
    channel_cfg: ChannelConfig,
    retrans_cfg: RetransConfig,
    window_cfg: WindowConfig,
    seed: int,
    imputation: Imputation = Imputation.HOLD,
    schemes: Sequence[Scheme] = tuple(Scheme),
) -> dict[Scheme, SessionState]:
    """Sessions for several schemes over the same channel draws."""
    draws = None
    if any(s is not Scheme.GENIE for s in schemes):
        draws = uplink_draws(trace, channel_cfg, retrans_cfg, seed)
    out = {}
    for scheme in schemes:
        outcomes = simulate_uplink(trace, channel_cfg, retrans_cfg, seed, scheme, draws)
        out[scheme] = run_session(
            trace, model, channel_cfg, retrans_cfg, window_cfg, seed, imputation, outcomes
        )
    return out


# ============================================================================
# Experiments
# ============================================================================


def training_stream(fold_index: int, group: int, axis: Axis) -> tuple:
    """RNG stream names for one offline model."""
    return ("fold", fold_index, "group", group, axis.value)


def _group_of(trace: Trace, regime: Regime) -> int:
    return trace.video_id if regime is Regime.PER_VIDEO else ALL_VIDEOS


def _traces_digest(traces: Sequence[Trace]) -> str:
    digest = hashlib.sha256()
    for trace in traces:
        digest.update(f"{trace.video_id}:{trace.user_id}:{len(trace)};".encode())
        for axis in Axis:
            digest.update(np.ascontiguousarray(trace.series(axis)).tobytes())
    return digest.hexdigest()


def _subsample(
    traces: Sequence[Trace], n: int, seed: int, fold_index: int
) -> tuple[Trace, ...]:
    """Keep n training users per video (all of them when fewer exist)."""
    by_video: dict[int, list[Trace]] = {}
    for tr in traces:
        by_video.setdefault(tr.video_id, []).append(tr)
    kept = []
    for video_id, group in sorted(by_video.items()):
        if n >= len(group):
            if n > len(group):
                logger.warning(f"video {video_id}: only {len(group)} training users, wanted {n}")
            kept.extend(group)
            continue
        rng = substream(seed, "subsample", n, fold_index, video_id)
        kept.extend(group[j] for j in sorted(rng.choice(len(group), size=n, replace=False)))
    return tuple(kept)


def _train_group(
    cfg: "ExperimentConfig",
    traces: Sequence[Trace],
    stream: tuple,
    axis: Axis,
    store: Optional["ModelStore"],
) -> TrainResult:
    window_cfg = cfg.window
    examples = []
    for trace in traces:
        try:
            examples.extend(make_windowed_examples(trace, window_cfg, axis))
        except TraceTooShortError as e:
            logger.warning(f"Skipping training trace: {e}")
    if not examples:
        logger.info(f"No training examples for {stream}; starting from initial weights")
        model = init_model(
            cfg.predictor,
            window_cfg.t_w,
            substream(cfg.seed, "init", *stream),
            learning_rate=cfg.train.learning_rate,
            input_width=window_cfg.input_width,
            order=cfg.train.order,
        )
        return TrainResult(model=model, epoch_losses=[])

    def train() -> TrainResult:
        return train_offline(cfg.predictor, examples, cfg.train, stream)

    if store is None:
        return train()
    key = store.fingerprint(
        kind=cfg.predictor.value,
        window=dataclasses.asdict(window_cfg),
        train=dataclasses.asdict(cfg.train),
        stream=list(stream),
        data=_traces_digest(traces),
    )
    return store.get_or_train(key, train)


@dataclass
class _Accumulator:
    """Per-scheme results pooled over folds."""

    fold_mse: list[float] = field(default_factory=list)
    records: list[ErrorRecord] = field(default_factory=list)
    delivered: int = 0
    slots: int = 0
    latency: Counter = field(default_factory=Counter)

    def add_session(self, state: SessionState, trace: Trace) -> list[ErrorRecord]:
        records = state.error_records(trace.video_id, trace.user_id)
        self.records.extend(records)
        for r in state.log:
            self.delivered += r.outcome.success
            self.slots += 1
            self.latency[(r.outcome.latency_ttis, r.outcome.success)] += 1
        return records

    def histogram(self) -> list[tuple[int, int, int]]:
        latencies = sorted({lat for lat, _ in self.latency})
        return [(lat, self.latency[(lat, True)], self.latency[(lat, False)]) for lat in latencies]


def _slot_series(records: Sequence[ErrorRecord]) -> list[tuple[int, float]]:
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for rec in records:
        for t, e in zip(rec.slots.tolist(), rec.squared_errors.tolist()):
            sums[t] = sums.get(t, 0.0) + e
            counts[t] = counts.get(t, 0) + 1
    return [(t, sums[t] / counts[t]) for t in sorted(sums)]


def _outcome_record(fold: int, trace: Trace, scheme: Scheme, r: SlotRecord) -> dict:
    record = {
        "fold": fold,
        "video_id": trace.video_id,
        "user_id": trace.user_id,
        "slot": r.t,
        "scheme": scheme.value,
        **r.outcome.to_dict(),
        "updated": r.updated,
    }
    for axis, value in r.actual.items():
        record[f"actual_{axis.value}"] = value
        record[f"predicted_{axis.value}"] = None if r.predicted is None else r.predicted[axis]
    return record


def _run_base(
    dataset: TraceSet,
    cfg: "ExperimentConfig",
    store: Optional["ModelStore"],
    train_users: Optional[int] = None,
    keep_outcomes: bool = True,
) -> RunReport:
    schemes = list(Scheme) if cfg.compare_schemes else [cfg.scheme]
    if cfg.scheme in schemes:
        schemes.remove(cfg.scheme)
    schemes.insert(0, cfg.scheme)
    regime = cfg.plan.regime
    min_len = cfg.window.t_w + cfg.window.d

    acc = {s: _Accumulator() for s in schemes}
    offline = _Accumulator()
    folds: list[FoldResult] = []
    curves: list[list[float]] = []
    outcome_records: list[dict] = []

    for fold in kfold_split(dataset, cfg.plan, cfg.seed):
        train = fold.train
        if train_users is not None:
            train = _subsample(train, train_users, cfg.seed, fold.index)
        test = [tr for tr in fold.test if len(tr) >= min_len]
        if len(test) < len(fold.test):
            logger.warning(f"fold {fold.index}: skipped {len(fold.test) - len(test)} short traces")
        if not test:
            raise DataError(f"fold {fold.index} has no test trace of at least {min_len} slots")

        start: dict[int, dict[Axis, PredictorModel]] = {}
        for group in sorted({_group_of(tr, regime) for tr in test}):
            group_train = [
                tr for tr in train if regime is Regime.ALL_VIDEOS or tr.video_id == group
            ]
            start[group] = {}
            for axis in cfg.window.dims:
                result = _train_group(
                    cfg, group_train, training_stream(fold.index, group, axis), axis, store
                )
                start[group][axis] = result.model.with_learning_rate(cfg.online_rate)
                if result.epoch_losses:
                    curves.append(result.epoch_losses)

        fold_records = {s: [] for s in schemes}
        fold_delivered = {s: [0, 0] for s in schemes}
        offline_records = []
        sessions: dict[Scheme, list[tuple[Trace, SessionState]]] = {s: [] for s in schemes}

        if cfg.shared_model:
            for group, models in start.items():
                members = [tr for tr in test if _group_of(tr, regime) == group]
                draws = {}
                for scheme in schemes:
                    outs = []
                    for tr in members:
                        if scheme is not Scheme.GENIE and tr.key not in draws:
                            draws[tr.key] = uplink_draws(tr, cfg.channel, cfg.retrans, cfg.seed)
                        outs.append(
                            simulate_uplink(
                                tr, cfg.channel, cfg.retrans, cfg.seed, scheme, draws.get(tr.key)
                            )
                        )
                    states = run_shared_sessions(members, models, outs, cfg.window, cfg.imputation)
                    sessions[scheme].extend(zip(members, states))
        else:
            for tr in test:
                models = start[_group_of(tr, regime)]
                by_scheme = compare_schemes(
                    tr,
                    models,
                    cfg.channel,
                    cfg.retrans,
                    cfg.window,
                    cfg.seed,
                    cfg.imputation,
                    schemes,
                )
                for scheme, state in by_scheme.items():
                    sessions[scheme].append((tr, state))

        for scheme in schemes:
            for tr, state in sorted(sessions[scheme], key=lambda item: item[0].key):
                fold_records[scheme].extend(acc[scheme].add_session(state, tr))
                fold_delivered[scheme][0] += sum(r.outcome.success for r in state.log)
                fold_delivered[scheme][1] += len(state.log)
                if keep_outcomes:
                    outcome_records.extend(
                        _outcome_record(fold.index, tr, scheme, r) for r in state.log
                    )

        if cfg.compare_offline:
            # Frozen models read the main scheme's deliveries.
            for tr, state in sorted(sessions[cfg.scheme], key=lambda item: item[0].key):
                outcomes = [r.outcome for r in state.log]
                offline_records.extend(
                    compare_offline(
                        start[_group_of(tr, regime)], tr, cfg.window, outcomes, cfg.imputation
                    )
                )
            offline.records.extend(offline_records)
            offline.fold_mse.append(
                average_prediction_error(offline_records, require_equal_length=False)
            )

        for scheme in schemes:
            acc[scheme].fold_mse.append(
                average_prediction_error(fold_records[scheme], require_equal_length=False)
            )
        main = cfg.scheme
        delivered, total = fold_delivered[main]
        folds.append(
            FoldResult(
                index=fold.index,
                mse=acc[main].fold_mse[-1],
                normalized_error=normalized_error(fold_records[main]),
                n_test_traces=len(test),
                n_scored_slots=sum(len(r) for r in fold_records[main]),
                delivered_fraction=delivered / total,
                offline_mse=offline.fold_mse[-1] if cfg.compare_offline else None,
            )
        )
        logger.info(
            f"fold {fold.index}: {len(test)} test users, mse {folds[-1].mse:.4g} deg^2"
            f" ({main.value})"
        )

    epoch_losses = np.mean(np.array(curves), axis=0).tolist() if curves else []
    main_acc = acc[cfg.scheme]
    slot_errors = {s.value: _slot_series(acc[s].records) for s in schemes}
    if cfg.compare_offline:
        slot_errors[OFFLINE] = _slot_series(offline.records)

    return RunReport(
        config=cfg.to_dict(),
        seed=cfg.seed,
        predictor=cfg.predictor.value,
        scheme=cfg.scheme.value,
        folds=folds,
        mse=float(np.mean(main_acc.fold_mse)),
        normalized_error=normalized_error(main_acc.records),
        offline_mse=float(np.mean(offline.fold_mse)) if cfg.compare_offline else None,
        scheme_mse={s.value: float(np.mean(acc[s].fold_mse)) for s in schemes},
        scheme_normalized={s.value: normalized_error(acc[s].records) for s in schemes},
        delivered_fraction={s.value: acc[s].delivered / acc[s].slots for s in schemes},
        slot_errors=slot_errors,
        latency_histogram={s.value: acc[s].histogram() for s in schemes},
        epoch_losses=epoch_losses,
        outcome_records=outcome_records,
    )


def _sweep_point(value: int, report: RunReport) -> SweepPoint:
    return SweepPoint(
        value=value,
        mse=report.mse,
        normalized_error=report.normalized_error,
        offline_mse=report.offline_mse,
        scheme_mse=dict(report.scheme_mse),
    )


def run_experiment(
    dataset: TraceSet, cfg: "ExperimentConfig", store: Optional["ModelStore"] = None
) -> RunReport:
    """Cross-validated online experiment plus any configured sweeps.

    The overall error is the mean of the per-fold errors; a fold's error pools every
    scored slot of its test users.

    Args:
        dataset: Traces to split into folds.
        cfg: Resolved experiment configuration.
        store: Cache of trained offline models, keyed by training data and settings.

    Returns:
        Per-fold and overall errors, delivery statistics and sweep points.

    Raises:
        DataError: If the dataset is empty.
        FoldError: If a video has fewer users than folds.
    """
    if len(dataset) == 0:
        raise DataError("dataset is empty")
    logger.info(
        f"Running {cfg.predictor.value}/{cfg.scheme.value} on {len(dataset)} traces, "
        f"{cfg.plan.k_cross} folds ({cfg.plan.regime.value})"
    )
    report = _run_base(dataset, cfg, store)

    for t_w in cfg.sweep_windows:
        sub = dataclasses.replace(cfg, window=dataclasses.replace(cfg.window, t_w=t_w))
        logger.info(f"Window sweep: t_w={t_w}")
        report.window_sweep.append(_sweep_point(t_w, _run_base(dataset, sub, store, None, False)))

    for n in cfg.sweep_users:
        logger.info(f"Training-users sweep: {n} per video")
        report.users_sweep.append(_sweep_point(n, _run_base(dataset, cfg, store, n, False)))

    return report
