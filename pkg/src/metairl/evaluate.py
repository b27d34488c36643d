"""Evaluation metrics, density histograms, and model comparison.

Histograms use uniform bins and the density normalization
count / (total * bin width), so areas integrate to one regardless of how
many episodes produced the samples. Distribution deviations are summed
absolute density differences over shared bins.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation
from .simulator import LaneChangeEnv, TERM_CRASH, TERM_SUCCESS, TERM_TIMEOUT

# shared bin layouts so every model and the expert use identical edges
KINEMATIC_BINS = {
    "max_accel": (48, (-6.0, 6.0)),
    "min_accel": (48, (-6.0, 6.0)),
    "max_speed": (45, (0.0, 45.0)),
    "min_speed": (45, (0.0, 45.0)),
}
KINEMATICS = tuple(KINEMATIC_BINS)

# published reference deviations for the three-model comparison
# (adapted meta-model vs pooled-pretrained vs from-scratch); used only to
# assert the expected ordering, never as exact targets
REFERENCE_L1_DEVIATIONS = {
    "meta": {"max_accel": 0.32, "max_speed": 0.08, "min_accel": 0.30, "min_speed": 0.15},
    "pretrained": {"max_accel": 0.48, "max_speed": 0.18, "min_accel": 0.41, "min_speed": 0.28},
    "scratch": {"max_accel": 0.83, "max_speed": 0.27, "min_accel": 0.42, "min_speed": 0.33},
}


@dataclass
class MetricsRecord:
    iteration: int
    disc_prob_expert: float
    disc_prob_generated: float
    mean_total_reward: float
    mean_rollout_steps: float
    mean_decision_steps: float
    success_ratio: float
    crash_ratio: float
    timeout_ratio: float
    mean_max_accel: float
    mean_min_accel: float
    mean_max_speed: float
    mean_min_speed: float
    disc_loss: float = math.nan
    policy_accepted: int = 0
    policy_kl: float = 0.0
    disc_steps: int = 0
    policy_steps: int = 0

    def __post_init__(self):
        for p in (self.disc_prob_expert, self.disc_prob_generated):
            if not math.isnan(p) and not 0.0 <= p <= 1.0:
                raise ValueError("discriminator probabilities must lie in [0, 1]")
        for r in (self.success_ratio, self.crash_ratio, self.timeout_ratio):
            if not 0.0 <= r <= 1.0:
                raise ValueError("episode ratios must lie in [0, 1]")
        if self.mean_rollout_steps < self.mean_decision_steps:
            raise ValueError("roll-out steps cannot be fewer than decision steps")

    def to_dict(self) -> dict:
        return asdict(self)


METRICS_CSV_COLUMNS = [
    "task", "iteration", "disc_prob_expert", "disc_prob_generated",
    "mean_total_reward", "mean_rollout_steps", "mean_decision_steps",
    "success_ratio", "crash_ratio", "timeout_ratio",
    "mean_max_accel", "mean_min_accel", "mean_max_speed", "mean_min_speed",
    "disc_loss", "policy_accepted", "policy_kl", "disc_steps", "policy_steps",
]


def metrics_csv_row(task: str, record: MetricsRecord) -> list:
    d = record.to_dict()
    return [task] + [d[c] for c in METRICS_CSV_COLUMNS[1:]]


def write_metrics_csv(path: str | Path, rows: list[list], append: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new_file = not (append and path.exists())
    mode = "w" if new_file else "a"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(METRICS_CSV_COLUMNS)
        writer.writerows(rows)


def episode_extremes(speeds: np.ndarray, accels: np.ndarray,
                     ep_slices: list[tuple[int, int]]) -> dict[str, np.ndarray]:
    out = {k: [] for k in KINEMATICS}
    for s, e in ep_slices:
        out["max_accel"].append(accels[s:e].max())
        out["min_accel"].append(accels[s:e].min())
        out["max_speed"].append(speeds[s:e].max())
        out["min_speed"].append(speeds[s:e].min())
    return {k: np.asarray(v) for k, v in out.items()}


def kinematic_extremes(speeds, accels, ep_slices) -> dict[str, float]:
    per_ep = episode_extremes(speeds, accels, ep_slices)
    return {k: float(v.mean()) for k, v in per_ep.items()}


@dataclass
class Histogram:
    edges: np.ndarray
    densities: np.ndarray
    total: int
    name: str = ""

    def __post_init__(self):
        widths = np.diff(self.edges)
        mass = float((self.densities * widths).sum())
        if self.total > 0 and abs(mass - 1.0) > 1e-9:
            raise ValueError(f"histogram mass {mass} != 1")

    def to_dict(self) -> dict:
        return {"name": self.name, "edges": self.edges.tolist(),
                "densities": self.densities.tolist(), "total": self.total}


def build_histogram(values, bins: int, value_range: tuple[float, float],
                    name: str = "") -> Histogram:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ContractViolation("cannot build a histogram from no values")
    lo, hi = value_range
    if not hi > lo or bins < 1:
        raise ContractViolation("invalid histogram range or bin count")
    clipped = np.clip(values, lo, hi)  # out-of-range mass lands in edge bins
    counts, edges = np.histogram(clipped, bins=bins, range=(lo, hi))
    width = (hi - lo) / bins
    densities = counts / (values.size * width)
    return Histogram(edges=edges, densities=densities, total=values.size, name=name)


def l1_distance(h1: Histogram, h2: Histogram) -> float:
    """Sum of absolute density differences (the y-axis values)."""
    if not np.array_equal(h1.edges, h2.edges):
        raise ContractViolation("histograms must share bin edges")
    return float(np.abs(h1.densities - h2.densities).sum())


def kinematic_histograms(extremes: dict[str, np.ndarray]) -> dict[str, Histogram]:
    return {k: build_histogram(extremes[k], *KINEMATIC_BINS[k], name=k)
            for k in KINEMATICS}


def evaluate(policy, env: LaneChangeEnv, episodes: int, seed: int,
             disc=None, mode: str = "sample") -> tuple[MetricsRecord, dict[str, np.ndarray]]:
    """Roll out ``episodes`` seeded episodes and aggregate the metric set.

    ``policy`` is either an object with ``sample``/``greedy`` (a trained
    policy) or a callable ``(scene, state_vector) -> action`` (the oracle).
    With a discriminator the per-episode total reward is computed from it;
    otherwise it is reported as 0.
    """
    if episodes < 1:
        raise ContractViolation("need at least one evaluation episode")
    if mode not in ("sample", "greedy"):
        raise ContractViolation(f"unknown action mode {mode!r}")
    states, actions, probs = [], [], []
    speeds, accels, slices, terms, dsteps = [], [], [], [], []
    for i in range(episodes):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        env_seed, action_seed = (int(s) for s in ss.generate_state(2))
        rng = np.random.default_rng(action_seed)
        scene = env.reset(env_seed)
        start = len(states)
        while not scene.terminal:
            vec = env.encode_state(scene)
            if callable(policy):
                action, p = policy(scene, vec), 1.0
            elif mode == "sample":
                action, p = policy.sample(vec, rng)
            else:
                action, p = policy.greedy(vec)
            outcome = env.step(scene, action)
            states.append(vec)
            actions.append(action)
            probs.append(p)
            speeds.append(outcome.scene.ego.speed)
            accels.append(outcome.scene.ego.accel)
            scene = outcome.scene
        slices.append((start, len(states)))
        terms.append(scene.termination)
        dsteps.append(scene.decision_steps)

    speeds = np.asarray(speeds)
    accels = np.asarray(accels)
    extremes = episode_extremes(speeds, accels, slices)
    if disc is not None and not callable(policy):
        from .airl import f_values, reward_from_f
        f = f_values(disc, np.asarray(states), np.asarray(actions, dtype=np.int64))
        rewards = reward_from_f(f, np.log(np.asarray(probs)))
        ep_rewards = [rewards[s:e].sum() for s, e in slices]
    else:
        ep_rewards = [0.0]
    n = episodes
    record = MetricsRecord(
        iteration=0,
        disc_prob_expert=math.nan,
        disc_prob_generated=math.nan,
        mean_total_reward=float(np.mean(ep_rewards)),
        mean_rollout_steps=float(np.mean([e - s for s, e in slices])),
        mean_decision_steps=float(np.mean(dsteps)),
        success_ratio=sum(1 for t in terms if t == TERM_SUCCESS) / n,
        crash_ratio=sum(1 for t in terms if t == TERM_CRASH) / n,
        timeout_ratio=sum(1 for t in terms if t == TERM_TIMEOUT) / n,
        mean_max_accel=float(extremes["max_accel"].mean()),
        mean_min_accel=float(extremes["min_accel"].mean()),
        mean_max_speed=float(extremes["max_speed"].mean()),
        mean_min_speed=float(extremes["min_speed"].mean()),
    )
    return record, extremes


def compare_models(models: dict, env: LaneChangeEnv, episodes: int, seed: int,
                   expert_extremes: dict[str, np.ndarray]) -> dict:
    """Evaluate each model and measure the deviation of its kinematic
    distributions from the expert's. ``models`` maps a name to either a
    (policy, discriminator) pair or a bare policy."""
    if len(models) < 1:
        raise ContractViolation("nothing to compare")
    expert_hists = kinematic_histograms(expert_extremes)
    report = {"task": env.task.style, "episodes": episodes, "seed": seed,
              "expert": {k: h.to_dict() for k, h in expert_hists.items()},
              "models": {}}
    for name, model in models.items():
        policy, disc = model if isinstance(model, tuple) else (model, None)
        record, extremes = evaluate(policy, env, episodes, seed, disc=disc)
        hists = kinematic_histograms(extremes)
        deviations = {k: l1_distance(hists[k], expert_hists[k]) for k in KINEMATICS}
        report["models"][name] = {
            "metrics": record.to_dict(),
            "histograms": {k: h.to_dict() for k, h in hists.items()},
            "l1_deviation": deviations,
        }
    return report


def write_comparison(report: dict, json_path: str | Path,
                     csv_path: str | Path) -> None:
    json_path, csv_path = Path(json_path), Path(csv_path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(json.dumps(report, indent=2, sort_keys=True))
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model"] + [f"l1_{k}" for k in KINEMATICS]
                        + ["success_ratio", "mean_total_reward"])
        for name, entry in report["models"].items():
            writer.writerow([name]
                            + [entry["l1_deviation"][k] for k in KINEMATICS]
                            + [entry["metrics"]["success_ratio"],
                               entry["metrics"]["mean_total_reward"]])
