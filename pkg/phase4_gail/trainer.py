"""
GAIL training loop: collect rollouts, score them with the discriminator,
update the discriminator, then update the generator with PPO.
"""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from phase1_data_pipeline.normalizer import discretize_fixation
from phase1_data_pipeline.schema import DatasetManifest, ExpertPair
from phase2_numerics.errors import NonFiniteError
from phase2_numerics.optim import Adam
from phase3_search_env.env import SearchEnv, action_to_pixel, to_canvas_box, to_canvas_point
from phase3_search_env.features import Extractor

from .adversary import PairBatch, discriminator_update, gail_reward
from .agent import ActorCritic, Discriminator
from .config import TrainerConfig, named_rng
from .errors import DivergenceError
from .ppo import Batch, Optimizers, ppo_update
from .rollout import SearchTask, collect_rollouts, hit_curve

logger = logging.getLogger(__name__)

POLICY_CHECKPOINT = "policy.girl"
DISCRIMINATOR_CHECKPOINT = "discriminator.girl"
DIVERGENCE_LIMIT = 1e3

ImageSource = Callable[[str], np.ndarray]
Evaluator = Callable[[SearchEnv, ActorCritic, int], dict[str, float]]

RECORD_COLUMNS = [
    "iteration",
    "disc_loss",
    "disc_accuracy",
    "expert_score",
    "generated_score",
    "mean_reward",
    "policy_loss",
    "value_loss",
    "entropy",
    "approx_kl",
    "clip_fraction",
    "train_hit_rate",
    "eval_fixated_in_6",
    "eval_slope",
]


@dataclass
class TrainReport:
    records: list[dict[str, float]] = field(default_factory=list)

    def add(self, record: dict[str, float]) -> None:
        self.records.append({k: record.get(k, math.nan) for k in RECORD_COLUMNS})

    def __len__(self) -> int:
        return len(self.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=RECORD_COLUMNS)

    def summary(self, tail: int = 10) -> dict[str, Any]:
        frame = self.to_frame()
        last = frame.tail(tail)

        def mean(col: str) -> Optional[float]:
            values = last[col].dropna()
            return float(values.mean()) if len(values) else None

        return {
            "iterations": len(frame),
            "tail": int(len(last)),
            "disc_accuracy": mean("disc_accuracy"),
            "mean_reward": mean("mean_reward"),
            "first_mean_reward": float(frame["mean_reward"].iloc[0]) if len(frame) else None,
            "policy_loss": mean("policy_loss"),
            "entropy": mean("entropy"),
            "eval_fixated_in_6": mean("eval_fixated_in_6"),
        }

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "train_report.csv"
        json_path = out / "train_summary.json"
        self.to_frame().to_csv(csv_path, index=False, float_format="%.8g")
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True), encoding="utf-8")
        return csv_path, json_path


@dataclass
class Networks:
    env: SearchEnv
    policy: ActorCritic
    discriminator: Discriminator


@dataclass
class TrainResult:
    policy: ActorCritic
    discriminator: Discriminator
    env: SearchEnv
    report: TrainReport


def build_networks(config: TrainerConfig, seed: int) -> Networks:
    """Extractor, environment, policy and discriminator initialised from named seed substreams."""
    init_rng = named_rng(seed, "policy-init")
    extractor = Extractor(config.env, init_rng)
    env = SearchEnv(extractor, config.env)
    policy = ActorCritic(extractor, config.env, config.network, init_rng)
    disc = Discriminator(config.env, config.network, named_rng(seed, "disc-init"))
    return Networks(env=env, policy=policy, discriminator=disc)


def load_networks(config: TrainerConfig, checkpoint_dir: str | Path, seed: int = 0) -> Networks:
    nets = build_networks(config, seed)
    ckpt = Path(checkpoint_dir)
    nets.policy.load(ckpt / POLICY_CHECKPOINT if ckpt.is_dir() else ckpt)
    disc_path = (ckpt if ckpt.is_dir() else ckpt.parent) / DISCRIMINATOR_CHECKPOINT
    if disc_path.exists():
        nets.discriminator.load(disc_path)
    return nets


def build_tasks(manifest: DatasetManifest, images: ImageSource, width: int = 512, height: int = 320) -> list[SearchTask]:
    """One task per (image, category); target boxes scaled to canvas pixels."""
    tasks: list[SearchTask] = []
    seen: set[tuple[str, int]] = set()
    for trial in manifest.trials:
        key = (trial.image.ref, trial.category_id)
        if key in seen:
            continue
        seen.add(key)
        box = None
        if trial.target_box is not None:
            box = to_canvas_box(trial.target_box, trial.image.width, trial.image.height, width, height)
        tasks.append(
            SearchTask(
                key=trial.image.ref,
                image=images(trial.image.ref),
                category=trial.category_id,
                target_box=box,
                trial_id=trial.trial_id,
            )
        )
    logger.info("build_tasks: [audit] %d trials -> %d tasks", len(manifest.trials), len(tasks))
    return tasks


class ExpertSet:
    """
    Expert states regenerated through the environment from each trial's
    fixation prefixes. Saccades are snapped to cell centers, as the policy's
    are; pooled ReT-images are kept so features can be re-encoded with the
    current extractor.
    """

    def __init__(self, pooled: np.ndarray, planes: np.ndarray, actions: np.ndarray):
        self.pooled = pooled
        self.planes = planes
        self.actions = actions

    def __len__(self) -> int:
        return int(self.actions.shape[0])

    @classmethod
    def build(cls, pairs: Sequence[ExpertPair], env: SearchEnv, images: ImageSource) -> "ExpertSet":
        if not pairs:
            raise ValueError("no expert pairs to train on")
        fov = env.fov
        by_trial: dict[str, list[ExpertPair]] = defaultdict(list)
        for pair in pairs:
            by_trial[pair.trial_id].append(pair)
        pooled, planes, actions = [], [], []
        for trial_pairs in by_trial.values():
            longest = max(trial_pairs, key=lambda p: len(p.prefix))
            w, h = longest.image.width, longest.image.height
            points = [to_canvas_point(*longest.prefix[0], w, h, fov.width, fov.height)]
            for x, y in longest.prefix[1:]:
                cx, cy = action_to_pixel(discretize_fixation(x, y, w, h))
                points.append((float(cx), float(cy)))
            states = env.replay(images(longest.image.ref), longest.category_id, points, key=longest.image.ref)
            for pair in trial_pairs:
                state = states[len(pair.prefix) - 1]
                pooled.append(state.pooled.astype(np.float32))
                planes.append(state.planes())
                actions.append(pair.action)
        logger.info("ExpertSet: [audit] %d trials -> %d expert pairs", len(by_trial), len(actions))
        return cls(np.stack(pooled), np.stack(planes).astype(np.float32), np.asarray(actions, dtype=np.int64))

    @property
    def categories(self) -> set[int]:
        k = self.planes.shape[1] - 1
        return {int(c) for c in np.argmax(self.planes[:, :k, 0, 0], axis=1)}

    def sample(self, extractor: Extractor, n: int, rng: np.random.Generator) -> PairBatch:
        idx = rng.choice(len(self), size=min(n, len(self)), replace=False)
        feats = extractor(self.pooled[idx]).numpy()
        return PairBatch(features=feats, planes=self.planes[idx], actions=self.actions[idx])


def curve_slope(curve: np.ndarray) -> float:
    return float(stats.linregress(np.arange(1, len(curve) + 1), curve).slope)


def rollout_evaluator(tasks: Sequence[SearchTask], seed: int, jobs: int = 1, episodes_per_task: int = 1) -> Evaluator:
    """Fixated-in-6 and hit-curve slope of sampled episodes on held-out TP tasks."""
    tp_tasks = [t for t in tasks if t.target_box is not None]
    indices = [i for i in range(len(tp_tasks)) for _ in range(episodes_per_task)]

    def evaluate(env: SearchEnv, policy: ActorCritic, iteration: int) -> dict[str, float]:
        if not tp_tasks:
            return {}
        trajs = collect_rollouts(
            env, policy, tp_tasks, len(indices), named_rng(seed, f"eval-{iteration}"), jobs, task_indices=indices
        )
        curve = hit_curve(trajs, env.config.new_fixations)
        return {"eval_fixated_in_6": float(curve[-1]), "eval_slope": curve_slope(curve)}

    return evaluate


def save_networks(out_dir: str | Path, policy: ActorCritic, disc: Discriminator) -> Path:
    out = Path(out_dir)
    policy.save(out / POLICY_CHECKPOINT)
    disc.save(out / DISCRIMINATOR_CHECKPOINT)
    return out


def _check_divergence(iteration: int, diagnostics: dict[str, float]) -> None:
    policy_loss = diagnostics.get("policy_loss", 0.0)
    if not all(math.isfinite(v) for v in diagnostics.values()):
        raise DivergenceError(iteration, diagnostics, "non-finite training scalar")
    if abs(policy_loss) > DIVERGENCE_LIMIT:
        raise DivergenceError(iteration, diagnostics, f"|policy loss| above {DIVERGENCE_LIMIT:g}")


def train(
    pairs: Sequence[ExpertPair],
    tasks: Sequence[SearchTask],
    images: ImageSource,
    config: TrainerConfig | None = None,
    seed: int = 0,
    out_dir: str | Path | None = None,
    jobs: int = 1,
    evaluator: Optional[Evaluator] = None,
) -> TrainResult:
    """
    Adversarial imitation training for `config.ppo.iterations` iterations.

    Args:
        pairs: Expert state-action pairs (from export_expert_pairs).
        tasks: Training images with categories episodes are drawn from.
        images: Resolves an image ref to a canvas image (for expert replay).
        config: Environment, PPO and network settings.
        seed: Root seed; every random stream is a named substream of it.
        out_dir: If set, receives checkpoints and the TrainReport.
        jobs: Parallel episodes during rollout collection.
        evaluator: Called every `eval_every` iterations.

    Returns:
        TrainResult with the trained networks and the report.

    Raises:
        ValueError: no pairs, no tasks, or a category with pairs but no task.
        DivergenceError: a loss went non-finite or exploded.
    """
    config = config or TrainerConfig()
    ppo = config.ppo
    if not tasks:
        raise ValueError("train needs at least one training image")
    nets = build_networks(config, seed)
    env, policy, disc = nets.env, nets.policy, nets.discriminator
    expert = ExpertSet.build(pairs, env, images)
    missing = expert.categories - {t.category for t in tasks}
    if missing:
        raise ValueError(f"no training image for categories {sorted(missing)}")

    rollout_rng = named_rng(seed, "rollout")
    ppo_rng = named_rng(seed, "ppo")
    disc_rng = named_rng(seed, "disc")
    optimizers = Optimizers.build(policy, ppo)
    disc_optimizer = Adam(disc.parameters, lr=ppo.lr_discriminator, max_grad_norm=ppo.grad_clip)
    report = TrainReport()
    out = Path(out_dir) if out_dir is not None else None

    logger.info(
        "train: %d expert pairs, %d tasks, %d iterations x %d episodes, seed=%d",
        len(expert),
        len(tasks),
        ppo.iterations,
        ppo.episodes_per_iteration,
        seed,
    )
    for iteration in range(1, ppo.iterations + 1):
        try:
            record = _iteration(
                iteration,
                env,
                policy,
                disc,
                expert,
                tasks,
                config,
                optimizers,
                disc_optimizer,
                rollout_rng,
                ppo_rng,
                disc_rng,
                jobs,
            )
        except NonFiniteError as e:
            if out is not None:
                report.write(out)
            raise DivergenceError(iteration, {}, str(e)) from e
        if evaluator is not None and ppo.eval_every and iteration % ppo.eval_every == 0:
            record.update(evaluator(env, policy, iteration))
        report.add(record)
        logger.info(
            "iteration %d/%d: disc_acc=%.3f reward=%.4f policy_loss=%.4f value_loss=%.4f entropy=%.3f hit=%.3f",
            iteration,
            ppo.iterations,
            record["disc_accuracy"],
            record["mean_reward"],
            record["policy_loss"],
            record["value_loss"],
            record["entropy"],
            record["train_hit_rate"],
        )
        try:
            _check_divergence(iteration, {k: record[k] for k in ("policy_loss", "value_loss")})
        except DivergenceError:
            if out is not None:
                report.write(out)
            raise
        if out is not None and ppo.checkpoint_every and iteration % ppo.checkpoint_every == 0:
            save_networks(out / "checkpoints" / f"iter_{iteration:04d}", policy, disc)

    if out is not None:
        save_networks(out, policy, disc)
        report.write(out)
    return TrainResult(policy=policy, discriminator=disc, env=env, report=report)


def _iteration(
    iteration: int,
    env: SearchEnv,
    policy: ActorCritic,
    disc: Discriminator,
    expert: ExpertSet,
    tasks: Sequence[SearchTask],
    config: TrainerConfig,
    optimizers: Optimizers,
    disc_optimizer: Adam,
    rollout_rng: np.random.Generator,
    ppo_rng: np.random.Generator,
    disc_rng: np.random.Generator,
    jobs: int,
) -> dict[str, float]:
    ppo = config.ppo
    trajs = collect_rollouts(env, policy, tasks, ppo.episodes_per_iteration, rollout_rng, jobs)
    states = [s for t in trajs for s in t.states]
    actions = [a for t in trajs for a in t.actions]
    generated = PairBatch.from_states(states, actions)

    # Rewards come from the discriminator as it stood before this iteration's update.
    scores = disc.score(generated.features, generated.planes, generated.actions)
    rewards = gail_reward(scores, ppo.reward_variant)
    offset = 0
    for traj in trajs:
        traj.rewards = rewards[offset : offset + len(traj)]
        offset += len(traj)

    disc_stats = []
    for _ in range(ppo.disc_steps):
        expert_batch = expert.sample(policy.extractor, min(len(generated), ppo.disc_batch_size), disc_rng)
        disc_stats.append(discriminator_update(disc, disc_optimizer, expert_batch, generated, disc_rng, ppo.disc_batch_size))

    batch = Batch.from_trajectories(trajs, ppo.gamma, ppo.gae_lambda, ppo.normalize_advantages)
    ppo_stats = ppo_update(policy, batch, ppo, optimizers, ppo_rng)

    with_target = [t for t in trajs if tasks[t.task_index].target_box is not None]
    return {
        "iteration": iteration,
        "disc_loss": float(np.mean([d.loss for d in disc_stats])) if disc_stats else math.nan,
        "disc_accuracy": float(np.mean([d.accuracy for d in disc_stats])) if disc_stats else math.nan,
        "expert_score": float(np.mean([d.expert_score for d in disc_stats])) if disc_stats else math.nan,
        "generated_score": float(np.mean([d.generated_score for d in disc_stats])) if disc_stats else math.nan,
        "mean_reward": float(rewards.mean()),
        "policy_loss": ppo_stats.policy_loss,
        "value_loss": ppo_stats.value_loss,
        "entropy": ppo_stats.entropy,
        "approx_kl": ppo_stats.approx_kl,
        "clip_fraction": ppo_stats.clip_fraction,
        "train_hit_rate": float(np.mean([t.first_hit is not None for t in with_target])) if with_target else math.nan,
    }
