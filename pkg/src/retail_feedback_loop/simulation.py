"""Epoch loop of the user-recommender feedback simulation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from retail_feedback_loop.choice_model import (
    CandidateSet,
    build_candidate_set,
    gpop_ranking,
    rank_by_strength,
    sample_organic,
)
from retail_feedback_loop.config.settings import MetricSettings, SimulationConfig
from retail_feedback_loop.errors import DataError, EmptyLogError, SimulationError
from retail_feedback_loop.evaluation import RankingMetrics, evaluate
from retail_feedback_loop.ingestion import empirical_schedule
from retail_feedback_loop.interactions import ActivitySchedule, Interaction, InteractionLog, Source
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.metrics import MetricsReport, Segment, compute_report, segment_users
from retail_feedback_loop.recommenders import RankedList, ScoringModel, create_model
from retail_feedback_loop.rng import RunStreams, UserStepStreams
from retail_feedback_loop.states import (
    ItemStates,
    UserStates,
    accumulate,
    rebuild_states,
    rescale_activity,
)

logger = get_logger(__name__)


@dataclass(frozen=True)
class TrainingEvent:
    """One (re)training of the deployed recommender."""

    epoch: int
    window: tuple[int, int]
    n_events: int
    seed: int
    model_id: str
    # Score of the model that served the epoch, on that epoch's purchases
    served_metrics: RankingMetrics | None = None


@dataclass(frozen=True)
class EpochSnapshot:
    """Metrics of the cumulative log after one epoch (epoch 0 is the history)."""

    epoch: int
    report: MetricsReport
    new_events: int
    recommended_share: float

    def values(self) -> dict[str, float]:
        values = self.report.scalars()
        values["jaccard_stderr"] = self.report.jaccard_stderr
        values["new_events"] = float(self.new_events)
        values["recommended_share"] = self.recommended_share
        return values


@dataclass
class SimState:
    """The evolving world of one simulation run.

    ``user_states`` and ``item_states`` always match ``log`` up to the last
    completed step; ``ranked_lists`` and ``gpop`` are the cached K_u and GPop
    ranking of the current epoch.
    """

    config: SimulationConfig
    log: InteractionLog
    user_states: UserStates
    item_states: ItemStates
    model: ScoringModel
    training_window: InteractionLog
    current_epoch: int
    last_training_epoch: int
    streams: RunStreams
    origin_step: int
    segments: dict[str, Segment]
    catalog: tuple[str, ...]
    ranked_lists: dict[str, RankedList] = field(default_factory=dict)
    gpop: list[str] = field(default_factory=list)
    training_events: list[TrainingEvent] = field(default_factory=list)
    counters: Counter[str] = field(default_factory=Counter)

    def epoch_range(self, epoch: int) -> tuple[int, int]:
        """First and last step of a 1-based epoch."""
        length = self.config.steps_per_epoch
        start = self.origin_step + (epoch - 1) * length
        return start, start + length - 1


@dataclass
class Shopper:
    """One awakened user at one step; the candidate set is built on first use."""

    user: str
    step: int
    streams: UserStepStreams
    candidates: CandidateSet | None = None

    def candidate_set(self, state: SimState) -> CandidateSet:
        if self.candidates is None:
            self.candidates = build_candidate_set(
                self.user,
                state.user_states[self.user],
                state.item_states,
                state.config,
                self.streams.organic,
                gpop=state.gpop,
                step=self.step,
            )
        return self.candidates


def _train(
    config: SimulationConfig,
    window: InteractionLog,
    catalog: tuple[str, ...],
    seed: int,
) -> ScoringModel:
    model = create_model(config.model_id, config.models)
    return model.train(window, seed=seed, catalog=catalog)


def _refresh_rankings(state: SimState, epoch_strength: dict[str, int] | None = None) -> None:
    if state.config.gpop_scope == "epoch" and epoch_strength is not None:
        state.gpop = rank_by_strength(epoch_strength)
    else:
        state.gpop = gpop_ranking(state.item_states)


def _refresh_ranked_lists(state: SimState) -> None:
    exclude = None
    if state.config.exclude_purchased:
        exclude = {u: set(s.purchase_weights) for u, s in state.user_states.items()}
    state.ranked_lists = state.model.top_k_all(
        state.config.k, users=state.log.users, exclude=exclude
    )


def initialize(
    historical: InteractionLog,
    config: SimulationConfig,
) -> SimState:
    """Cut the history at t_0, train the first model and build the states.

    The initialization log keeps only users and items active before t_0;
    they form the simulated population and catalog.

    Raises:
        DataError: If the history covers fewer than ``init_epochs`` epochs.
        EmptyLogError: If no interactions precede t_0.
    """
    length = config.steps_per_epoch
    origin = historical.step_range[0]
    t0 = origin + config.init_epochs * length
    if historical.step_range[1] < t0 - 1:
        covered = (historical.step_range[1] - origin + 1) / length
        raise DataError(
            f"history covers {covered:.1f} epochs, initialization needs {config.init_epochs}"
        )
    init_mask = historical.steps < t0
    init_log = historical.select(init_mask, step_range=(origin, t0 - 1), shrink=True)
    if len(init_log) == 0:
        raise EmptyLogError("no interactions before the simulation start")

    segments = segment_users(init_log)
    user_states, item_states = rebuild_states(init_log, length, segments=segments)
    streams = RunStreams(config.seed)
    window_start = max(origin, t0 - config.training_window_epochs * length)
    window = init_log.between(window_start, t0 - 1)
    seed = streams.training_seed(config.init_epochs)
    model = _train(config, window, init_log.items, seed)

    state = SimState(
        config=config,
        log=init_log,
        user_states=user_states,
        item_states=item_states,
        model=model,
        training_window=window,
        current_epoch=config.init_epochs + 1,
        last_training_epoch=config.init_epochs,
        streams=streams,
        origin_step=origin,
        segments=segments,
        catalog=init_log.items,
    )
    state.training_events.append(
        TrainingEvent(config.init_epochs, (window_start, t0 - 1), len(window), seed, model.model_id)
    )
    _refresh_rankings(state)
    _refresh_ranked_lists(state)
    logger.info(
        "Initialized %s run: %d users, %d items, %d events before step %d",
        config.model_id,
        len(init_log.users),
        len(init_log.items),
        len(init_log),
        t0,
    )
    return state


def select_item(shopper: Shopper, state: SimState) -> tuple[str, Source]:
    """Pick one item: from K_u with probability eta, else by organic choice.

    The recommended draw is proportional to the ranked list's shifted
    scores. A user without a ranked list falls back to organic choice.
    """
    if shopper.streams.adoption.random() < state.config.eta:
        ranked = state.ranked_lists.get(shopper.user)
        if ranked:
            weights = np.asarray(ranked.scores)
            index = int(shopper.streams.recommended.choice(len(ranked), p=weights / weights.sum()))
            return ranked.items[index], Source.RECOMMENDED
        state.counters["empty_ranked_list"] += 1
    item = sample_organic(
        state.user_states[shopper.user],
        shopper.candidate_set(state),
        state.item_states,
        state.config,
        shopper.streams.organic,
    )
    return item, Source.ORGANIC


def run_epoch(state: SimState, schedule: ActivitySchedule) -> SimState:
    """Simulate every step of the current epoch, then retrain if due.

    Each awakened user makes ``basket_size`` independent selections; states
    absorb the step's purchases before the next step.

    Raises:
        SimulationError: If the schedule does not cover the epoch.
    """
    config = state.config
    epoch = state.current_epoch
    start, end = state.epoch_range(epoch)
    if not schedule.covers(start, end):
        raise SimulationError(
            f"schedule [{schedule.start_step}, {schedule.end_step}] does not cover "
            f"epoch {epoch} steps [{start}, {end}]"
        )
    # c_u divides by the elapsed epochs, the current one included
    elapsed = epoch
    rescale_activity(state.user_states, elapsed)

    epoch_strength = dict.fromkeys(state.catalog, 0)
    for step in range(start, end + 1):
        events: list[Interaction] = []
        for user, basket_size in schedule.at(step):
            if user not in state.user_states:
                state.counters["unknown_scheduled_user"] += 1
                continue
            shopper = Shopper(user, step, state.streams.user_step(step, user))
            for _ in range(basket_size):
                item, source = select_item(shopper, state)
                events.append(Interaction(user, item, step, 1, source))
                epoch_strength[item] += 1
        state.log = state.log.extend(events, end_step=step)
        accumulate(state.user_states, state.item_states, events, elapsed)

    if epoch - state.last_training_epoch >= config.retrain_interval_epochs:
        _retrain(state, epoch, start, end)
    _refresh_rankings(state, epoch_strength)
    state.current_epoch += 1
    return state


def _retrain(state: SimState, epoch: int, start: int, end: int) -> None:
    config = state.config
    served: RankingMetrics | None = None
    if config.evaluate_retrains:
        try:
            served = evaluate(state.model, state.training_window, state.log.between(start, end))
        except DataError as err:
            logger.info("Epoch %d: deployed model not evaluated (%s)", epoch, err)

    window_start = max(
        state.origin_step, end + 1 - config.training_window_epochs * config.steps_per_epoch
    )
    window = state.log.between(window_start, end)
    seed = state.streams.training_seed(epoch)
    state.model = _train(config, window, state.catalog, seed)
    state.training_window = window
    state.last_training_epoch = epoch
    state.user_states, state.item_states = rebuild_states(
        state.log, config.steps_per_epoch, through_step=end, segments=state.segments
    )
    _refresh_ranked_lists(state)
    state.training_events.append(
        TrainingEvent(epoch, (window_start, end), len(window), seed, state.model.model_id, served)
    )
    logger.debug("Epoch %d: retrained %s on %d events", epoch, config.model_id, len(window))


@dataclass(frozen=True)
class SimulationResult:
    """Output of one run: the full log, per-epoch snapshots and bookkeeping."""

    config: SimulationConfig
    init_log: InteractionLog
    log: InteractionLog
    snapshots: list[EpochSnapshot]
    training_events: list[TrainingEvent]
    segments: dict[str, Segment]
    counters: dict[str, int]


def _snapshot(
    state: SimState,
    epoch: int,
    new_events: InteractionLog,
    metric_settings: MetricSettings,
) -> EpochSnapshot:
    report = compute_report(
        state.log,
        state.segments,
        epoch=epoch,
        k=state.config.k,
        jaccard_exact_limit=metric_settings.jaccard_exact_limit,
        jaccard_pair_sample=(
            metric_settings.jaccard_pair_sample
            if len(state.log.users) > metric_settings.jaccard_exact_limit
            else None
        ),
        seed=state.streams.child_seed(f"jaccard:{epoch}") % (2**32),
    )
    recommended = int(np.sum(new_events.sources == int(Source.RECOMMENDED)))
    share = recommended / len(new_events) if len(new_events) else 0.0
    return EpochSnapshot(epoch, report, len(new_events), share)


def run_simulation(
    config: SimulationConfig,
    historical: InteractionLog,
    schedule: ActivitySchedule | None = None,
    metric_settings: MetricSettings | None = None,
) -> SimulationResult:
    """Initialize, then simulate ``horizon_epochs`` epochs.

    Args:
        config: Run parameters; the seed fixes every random draw.
        historical: Historical log; its first ``init_epochs`` epochs seed the run.
        schedule: Activity schedule; defaults to replaying ``historical``.
        metric_settings: Jaccard sampling options for the snapshots.

    Returns:
        The final log (history included) with per-epoch snapshots.
    """
    metric_settings = metric_settings or MetricSettings()
    state = initialize(historical, config)
    init_log = state.log
    if schedule is None and config.horizon_epochs > 0:
        first, _ = state.epoch_range(state.current_epoch)
        last = state.epoch_range(state.current_epoch + config.horizon_epochs - 1)[1]
        schedule = empirical_schedule(historical, first, last)

    snapshots = [_snapshot(state, 0, init_log, metric_settings)]
    for index in range(1, config.horizon_epochs + 1):
        assert schedule is not None
        before = len(state.log)
        start, end = state.epoch_range(state.current_epoch)
        run_epoch(state, schedule)
        added = state.log.select(np.arange(len(state.log)) >= before, step_range=(start, end))
        snapshots.append(_snapshot(state, index, added, metric_settings))
        logger.info(
            "Epoch %d/%d (eta=%.2f, %s): %d purchases, collective Gini %.4f",
            index,
            config.horizon_epochs,
            config.eta,
            config.model_id,
            len(added),
            snapshots[-1].report.collective_gini,
        )

    for name, count in sorted(state.counters.items()):
        logger.info("Run counter %s: %d", name, count)
    return SimulationResult(
        config=config,
        init_log=init_log,
        log=state.log,
        snapshots=snapshots,
        training_events=state.training_events,
        segments=state.segments,
        counters=dict(state.counters),
    )
