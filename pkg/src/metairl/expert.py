"""Oracle expert drivers and demonstration dataset handling.

The oracle is a deterministic rule-based policy parameterized by a driving
style (TaskSpec). It scores the three candidate gaps by how much control
effort they need and whether they can be reached within the style's
acceleration limits without tailgating the own-lane leader, tracks the best
one, and commits to the lateral move once both time margins around its
current position exceed the style's minimum gap. Mid-maneuver it holds when
the margin collapses, which lets the environment's abort logic take over.

Demonstrations keep only successful episodes; failed oracle episodes are
resampled. Datasets round-trip bit-exactly through the binary container.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation, GenerationError
from .simulator import (
    ABORTED,
    bumper_gap,
    DECIDING,
    GAP_ADJACENT,
    GAP_FRONT,
    GAP_REAR,
    LaneChangeEnv,
    Scene,
    TERM_SUCCESS,
    encode_action,
)
from .storage import VersionMismatchError, read_container, write_container
from .tasks import TaskSpec

DATASET_VERSION = 1

# scoring weights: distance to the gap center, control effort, and how well
# the gap's pace matches the style's target speed
_W_EFFORT = 5.0
_W_SPEED = 3.0
_PROJECT_S = 5.0
_SWITCH_RATIO = 0.9   # hysteresis: switch gaps only on a clear improvement
_INFEASIBLE = 1e9


@dataclass
class Trajectory:
    style: str
    states: np.ndarray        # (T, 44) float64
    actions: np.ndarray       # (T,) int64
    speeds: np.ndarray        # (T,) ego speed after each step
    accels: np.ndarray        # (T,) ego acceleration applied each step
    termination: str
    decision_steps: int
    seed: int

    def __len__(self) -> int:
        return len(self.actions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (self.style == other.style
                and self.termination == other.termination
                and self.decision_steps == other.decision_steps
                and self.seed == other.seed
                and np.array_equal(self.states, other.states)
                and np.array_equal(self.actions, other.actions)
                and np.array_equal(self.speeds, other.speeds)
                and np.array_equal(self.accels, other.accels))


@dataclass
class DemoDataset:
    task: TaskSpec
    trajectories: list[Trajectory]
    seed: int
    version: int = DATASET_VERSION

    def __len__(self) -> int:
        return len(self.trajectories)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DemoDataset):
            return NotImplemented
        return (self.task == other.task and self.seed == other.seed
                and self.version == other.version
                and self.trajectories == other.trajectories)


def _ego_idm_cap(env: LaneChangeEnv, scene: Scene) -> float:
    """Largest acceleration that keeps the ego from closing on its own-lane
    leader faster than an IDM driver with the style's limits would."""
    cfg, task = env.cfg, env.task
    ego = scene.ego
    lead = None
    for v in scene.others:
        if v.lane == ego.lane and v.pos > ego.pos and (lead is None or v.pos < lead.pos):
            lead = v
    if lead is None:
        return float("inf")
    s = max(lead.pos - ego.pos - 0.5 * (lead.length + ego.length), 1e-3)
    dv = ego.speed - lead.speed
    s_star = (cfg.idm_min_gap + ego.speed * task.min_gap
              + ego.speed * dv / (2.0 * np.sqrt(task.max_accel * -task.min_accel)))
    return task.max_accel * (1.0 - (max(s_star, 0.0) / s) ** 2)


def _tailgater_brake_floor(env: LaneChangeEnv, scene: Scene) -> float:
    """Lowest acceleration the oracle is willing to track while a fast
    own-lane follower is closing in; braking into a tailgater invites a
    rear-end collision the follower cannot avoid."""
    ego = scene.ego
    follower = None
    for v in scene.others:
        if v.lane == ego.lane and v.pos < ego.pos and (follower is None or v.pos > follower.pos):
            follower = v
    if follower is None:
        return env.task.min_accel
    closing = follower.speed - ego.speed
    if closing <= 0.1:
        return env.task.min_accel
    ttc = max(bumper_gap(follower, ego), 0.0) / closing
    return max(env.task.min_accel, -1.0) if ttc < 3.0 else env.task.min_accel


def _own_lane_pace(env: LaneChangeEnv, scene: Scene) -> float:
    """Fastest sustainable ego speed given the own-lane traffic ahead."""
    ego = scene.ego
    pace = env.task.target_speed
    for v in scene.others:
        if v.lane == ego.lane and v.pos > ego.pos:
            pace = min(pace, v.desired_speed)
    return pace


def _gap_scores(env: LaneChangeEnv, scene: Scene) -> list[float]:
    """Score the three candidate gaps; >= _INFEASIBLE means not mergeable."""
    task = env.task
    ego = scene.ego
    gaps = env.candidate_gaps(scene)
    own_cap = _ego_idm_cap(env, scene)
    brake_floor = _tailgater_brake_floor(env, scene)
    own_pace = _own_lane_pace(env, scene)
    scores = []
    for g in gaps:
        a_track = env.gap_tracking_accel(ego, g)
        # space the gap must offer for both merge margins once the ego is
        # inside it at traffic pace; project the gap over the time it takes
        # to get there so shrinking gaps are not chased
        needed = ego.length + task.min_gap * (max(ego.speed, g.ref_speed) + g.ref_speed)
        span = g.length
        if g.lead is not None and g.rear is not None:
            closing_time = abs(g.center_rel) / max(1.0, task.target_speed - g.ref_speed)
            horizon = min(closing_time + 10.0, 25.0)
            span += (g.lead.speed - g.rear.speed) * horizon
        infeasible = span < needed
        if g.center_rel > 5.0 and own_pace < g.ref_speed - 0.5:
            # a forward gap drifting faster than the own lane allows
            infeasible = True
        if g.lead is None:
            # open-ended ahead: only worth chasing if the ego can genuinely
            # pull away from whatever it must overtake on the target lane
            pull_ref = g.rear if g.rear is not None else gaps[GAP_REAR].lead
            if pull_ref is not None:
                infeasible |= own_pace < pull_ref.speed + env.cfg.feasible_gap_open_rate
        effort = min(max(a_track, task.min_accel), task.max_accel)
        score = (abs(g.center_rel)
                 + _W_EFFORT * abs(effort)
                 + _W_SPEED * abs(g.ref_speed - task.target_speed)
                 + 100.0 * max(0.0, effort - own_cap)
                 + 100.0 * max(0.0, brake_floor - effort))
        scores.append(score + (_INFEASIBLE if infeasible else 0.0))
    return scores


def oracle_action(env: LaneChangeEnv, scene: Scene) -> int:
    """Deterministic expert decision for the configured style."""
    if scene.terminal:
        raise ContractViolation("oracle asked to act on a terminal scene")
    task, cfg = env.task, env.cfg
    ego = scene.ego
    lead_m, rear_m = env.merge_margins(scene)

    if scene.phase == ABORTED:
        return encode_action(GAP_ADJACENT, False)
    if ego.lateral_offset > 0.0:
        # mid-maneuver: keep going while the margin is healthy, else hold and
        # let the environment abort if it collapses further
        hold_threshold = max(cfg.safety_margin, 0.5 * task.min_gap)
        go = min(lead_m, rear_m) > hold_threshold or ego.lateral_offset >= 0.5
        return encode_action(scene.last_gap, go)

    scores = _gap_scores(env, scene)
    own_cap = _ego_idm_cap(env, scene)
    best = int(np.argmin(scores))
    current_ok = scores[scene.last_gap] < _INFEASIBLE
    if scores[best] >= _INFEASIBLE:
        # nothing mergeable nearby: ladder forward when the own lane is
        # genuinely fast, otherwise drop back, until new gaps appear
        forward_ok = (_own_lane_pace(env, scene) >= task.target_speed - 1.0
                      and own_cap > 0.5)
        choice = GAP_FRONT if forward_ok else GAP_REAR
    elif current_ok and scene.clock % task.commit_patience != 0:
        choice = scene.last_gap
    elif current_ok and scores[best] >= _SWITCH_RATIO * scores[scene.last_gap]:
        # re-evaluation point, but the alternative is not clearly better
        choice = scene.last_gap
    else:
        choice = best
    commit = min(lead_m, rear_m) > task.min_gap
    return encode_action(choice, commit)


def run_episode(env: LaneChangeEnv, action_fn, seed: int) -> Trajectory:
    """Roll out one episode; action_fn(scene, state_vector) -> action id."""
    scene = env.reset(seed)
    states, actions, speeds, accels = [], [], [], []
    while not scene.terminal:
        vec = env.encode_state(scene)
        action = action_fn(scene, vec)
        outcome = env.step(scene, action)
        states.append(vec)
        actions.append(action)
        speeds.append(outcome.scene.ego.speed)
        accels.append(outcome.scene.ego.accel)
        scene = outcome.scene
    return Trajectory(style=env.task.style,
                      states=np.asarray(states, dtype=np.float64),
                      actions=np.asarray(actions, dtype=np.int64),
                      speeds=np.asarray(speeds, dtype=np.float64),
                      accels=np.asarray(accels, dtype=np.float64),
                      termination=scene.termination,
                      decision_steps=scene.decision_steps,
                      seed=seed)


def episode_seed(base_seed: int, attempt: int) -> int:
    """Stable per-attempt seed derivation, shardable across workers."""
    return int(np.random.SeedSequence(entropy=base_seed,
                                      spawn_key=(attempt,)).generate_state(1)[0])


def generate_demos(env: LaneChangeEnv, count: int, seed: int,
                   min_success_rate: float = 0.5) -> DemoDataset:
    """Generate ``count`` successful oracle episodes.

    Failed episodes are resampled with fresh derived seeds. If the oracle's
    success rate drops below ``min_success_rate`` after a warm-up of
    attempts, the TaskSpec/environment combination is considered
    misconfigured and generation fails.
    """
    if count < 1:
        raise ContractViolation("demo count must be >= 1")
    kept: list[Trajectory] = []
    attempts = successes = 0
    warmup = max(20, count)
    budget = 4 * count + 40
    oracle = lambda scene, vec: oracle_action(env, scene)
    while len(kept) < count:
        if attempts >= budget or (attempts >= warmup
                                  and successes / attempts < min_success_rate):
            rate = successes / max(attempts, 1)
            raise GenerationError(
                f"oracle success rate {rate:.2f} after {attempts} attempts for "
                f"style {env.task.style!r}; check the task/traffic configuration")
        traj = run_episode(env, oracle, episode_seed(seed, attempts))
        attempts += 1
        if traj.termination == TERM_SUCCESS:
            successes += 1
            kept.append(traj)
    return DemoDataset(task=env.task, trajectories=kept, seed=seed)


def save_dataset(dataset: DemoDataset, path: str | Path) -> str:
    meta = {
        "kind": "demo_dataset",
        "dataset_version": dataset.version,
        "task": dataset.task.to_dict(),
        "seed": dataset.seed,
        "trajectories": [
            {"termination": t.termination, "decision_steps": t.decision_steps,
             "seed": t.seed}
            for t in dataset.trajectories
        ],
    }
    arrays = []
    for t in dataset.trajectories:
        arrays.extend([t.states, t.actions, t.speeds, t.accels])
    return write_container(path, meta, arrays)


def load_dataset(path: str | Path) -> DemoDataset:
    meta, arrays = read_container(path)
    if meta.get("kind") != "demo_dataset":
        raise VersionMismatchError(f"{path} is not a demo dataset "
                                   f"(kind={meta.get('kind')!r})")
    if meta.get("dataset_version") != DATASET_VERSION:
        raise VersionMismatchError(
            f"dataset version {meta.get('dataset_version')!r}, "
            f"expected {DATASET_VERSION}")
    task = TaskSpec.from_dict(meta["task"])
    infos = meta["trajectories"]
    if len(arrays) != 4 * len(infos):
        raise VersionMismatchError("array count does not match trajectory count")
    trajectories = []
    for i, info in enumerate(infos):
        states, actions, speeds, accels = arrays[4 * i:4 * i + 4]
        trajectories.append(Trajectory(
            style=task.style, states=states, actions=actions, speeds=speeds,
            accels=accels, termination=info["termination"],
            decision_steps=info["decision_steps"], seed=info["seed"]))
    return DemoDataset(task=task, trajectories=trajectories,
                       seed=meta["seed"], version=meta["dataset_version"])
