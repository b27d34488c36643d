"""Two-lane highway lane-change environment.

The ego vehicle starts on lane 0 with a lane-change command already active.
Each step it picks one of six discrete actions: a target gap on the adjacent
lane (front / adjacent / rear) crossed with a lateral decision (commit to
the lateral movement now, or hold). Longitudinally the ego tracks the chosen
gap's center with a proportional controller clamped to the driving style's
acceleration limits. Surrounding traffic follows the Intelligent Driver
Model and never changes lanes.

The lateral maneuver is a normalized offset in [0, 1] advancing at a fixed
rate while the ego commits. Commits are gated by a time-headway safety
margin against the actual neighbors on the target lane; if the margin
collapses before the ego reaches the lane midline, the maneuver aborts and
the offset rolls back to 0. Past the midline the ego occupies the target
lane and completes the move.

Episodes end in exactly one of: crash (some same-lane bumper gap <= 0),
success (offset reaches 1), or timeout (h_max steps).

A Scene is an immutable value; ``step`` returns a fresh one. All randomness
happens in ``reset``; stepping is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolation
from .tasks import TaskSpec

# action space: gap index x lateral decision
GAP_FRONT, GAP_ADJACENT, GAP_REAR = 0, 1, 2
GAP_NAMES = ("front", "adjacent", "rear")
NUM_ACTIONS = 6

# phases of the lane-change maneuver
DECIDING, EXECUTING, ABORTED, DONE = "deciding", "executing", "aborted", "done"

# termination kinds
TERM_NONE, TERM_CRASH, TERM_SUCCESS, TERM_TIMEOUT = "none", "crash", "success", "timeout"

STATE_DIM = 44
NUM_SLOTS = 10
SENTINEL_REL_POS = 1000.0  # raw meters; scaled like any position feature
POS_SCALE = 100.0
SPEED_SCALE = 40.0
ACCEL_SCALE = 5.0


def encode_action(gap: int, commit: bool) -> int:
    if gap not in (0, 1, 2):
        raise ContractViolation(f"gap index {gap} out of range")
    return gap * 2 + (1 if commit else 0)


def decode_action(action: int) -> tuple[int, bool]:
    if not 0 <= action < NUM_ACTIONS:
        raise ContractViolation(f"action {action} out of range [0, {NUM_ACTIONS})")
    return action // 2, action % 2 == 1


@dataclass(frozen=True)
class EnvConfig:
    dt: float = 0.1
    h_max: int = 300
    lateral_rate: float = 0.04          # offset advance per committed step
    commit_margin: float = 0.1          # headway needed to begin a merge, s
    safety_margin: float = 0.5          # headway below which a merge aborts, s
    traffic_min: int = 3
    traffic_max: int = 10
    traffic_speed_min: float = 18.0
    traffic_speed_max: float = 26.0
    spawn_behind: float = -200.0        # spawn window relative to ego, m
    spawn_ahead: float = 240.0
    min_spawn_gap: float = 25.0         # bumper-to-bumper at reset
    ego_lead_buffer: float = 35.0       # clear road ahead of ego at reset, m
    ego_rear_buffer: float = 30.0
    ego_speed_min: float = 16.0         # initial ego speed range, m/s
    ego_speed_max: float = 24.0
    # every scenario is solvable by construction: the target lane always
    # offers one free interval big enough for the style's merge margins,
    # centered within the ego's longitudinal reach for that style
    feasible_gap_back_reach: float = 90.0
    feasible_gap_fwd_cap: float = 140.0
    feasible_gap_reach_frac: float = 0.6   # fraction of the episode budget
    feasible_gap_slack: float = 1.25
    feasible_gap_open_rate: float = 2.5   # m/s the ego must out-pace an open gap's rear bound
    vehicle_length: float = 4.5
    track_kp: float = 0.15              # closing-speed gain, (m/s) per m offset
    track_kv: float = 0.7               # accel gain on the speed error, 1/s
    open_gap_offset: float = 40.0       # virtual center for open-ended gaps, m
    idm_time_headway: float = 1.2
    idm_accel: float = 2.0
    idm_decel: float = 2.5
    idm_min_gap: float = 2.0
    idm_exponent: float = 4.0
    idm_accel_floor: float = -6.0       # physical clamp for surrounding traffic

    def __post_init__(self):
        if self.dt <= 0 or self.h_max < 1:
            raise ValueError("dt must be positive and h_max >= 1")
        if not 0 < self.lateral_rate <= 1:
            raise ValueError("lateral_rate must lie in (0, 1]")
        if self.traffic_min < 0 or self.traffic_max < self.traffic_min:
            raise ValueError("bad traffic count bounds")
        if self.traffic_max > NUM_SLOTS:
            raise ValueError(f"at most {NUM_SLOTS} surrounding vehicles supported")


@dataclass(frozen=True)
class VehicleState:
    pos: float              # longitudinal center position, m
    lane: int               # 0 = ego's starting lane, 1 = target lane
    lateral_offset: float   # 0..1, nonzero only for the ego mid-maneuver
    speed: float            # m/s, >= 0
    accel: float            # m/s^2 applied during the last step
    length: float
    desired_speed: float = 30.0  # cruising speed for the IDM free-flow term

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be nonnegative")
        if not 0.0 <= self.lateral_offset <= 1.0:
            raise ValueError("lateral offset must lie in [0, 1]")
        if self.lane not in (0, 1):
            raise ValueError("lane id must be 0 or 1")


@dataclass(frozen=True)
class Scene:
    ego: VehicleState
    others: tuple[VehicleState, ...]
    clock: int
    phase: str
    termination: str
    decision_steps: int
    last_gap: int           # gap index tracked on the previous step
    seed: int

    @property
    def terminal(self) -> bool:
        return self.termination != TERM_NONE


@dataclass(frozen=True)
class GapDescriptor:
    index: int
    lead: VehicleState | None
    rear: VehicleState | None
    length: float           # bumper-to-bumper free span, inf if open
    center_rel: float       # gap center relative to ego position, m
    ref_speed: float        # speed the ego should match inside this gap


@dataclass(frozen=True)
class StepOutcome:
    scene: Scene
    terminal: bool
    termination: str
    decision_steps: int
    rollout_steps: int


def bumper_gap(rear: VehicleState, lead: VehicleState) -> float:
    return lead.pos - rear.pos - 0.5 * (lead.length + rear.length)


def time_margin(gap_m: float, speed: float) -> float:
    return gap_m / max(speed, 1.0)


class LaneChangeEnv:
    """Simulator for one driving-style task. Stateless between calls: the
    Scene is the full state."""

    def __init__(self, task: TaskSpec, config: EnvConfig | None = None):
        self.task = task
        self.cfg = config if config is not None else EnvConfig()

    # ------------------------------------------------------------------ reset

    def reset(self, seed: int) -> Scene:
        cfg = self.cfg
        rng = np.random.default_rng(seed)
        n = int(rng.integers(cfg.traffic_min, cfg.traffic_max + 1))
        ego_speed = float(rng.uniform(cfg.ego_speed_min, cfg.ego_speed_max))
        ego = VehicleState(pos=0.0, lane=0, lateral_offset=0.0,
                           speed=ego_speed, accel=0.0,
                           length=cfg.vehicle_length,
                           desired_speed=self.task.target_speed)
        for attempt in range(100_000):
            lanes = rng.integers(0, 2, size=n)
            positions = rng.uniform(cfg.spawn_behind, cfg.spawn_ahead, size=n)
            speeds = rng.uniform(cfg.traffic_speed_min, cfg.traffic_speed_max, size=n)
            others = tuple(
                VehicleState(pos=float(positions[i]), lane=int(lanes[i]),
                             lateral_offset=0.0, speed=float(speeds[i]),
                             accel=0.0, length=cfg.vehicle_length,
                             desired_speed=float(speeds[i]))
                for i in range(n))
            if self._spawn_valid(ego, others):
                break
        else:
            raise ValueError(
                f"could not sample a solvable scenario for style "
                f"{self.task.style!r}; the task/traffic configuration leaves "
                f"no room for a {self.required_merge_space():.0f} m gap")
        return Scene(ego=ego, others=others, clock=0, phase=DECIDING,
                     termination=TERM_NONE, decision_steps=0,
                     last_gap=GAP_ADJACENT, seed=int(seed))

    def required_merge_space(self) -> float:
        """Free span on the target lane that comfortably fits this style's
        merge margins on both sides."""
        cfg, task = self.cfg, self.task
        return cfg.feasible_gap_slack * (
            cfg.vehicle_length
            + task.min_gap * (task.target_speed + cfg.traffic_speed_max))

    def _spawn_valid(self, ego: VehicleState, others: tuple[VehicleState, ...]) -> bool:
        cfg = self.cfg
        for lane in (0, 1):
            row = sorted([v for v in others if v.lane == lane], key=lambda v: v.pos)
            for rear, lead in zip(row, row[1:]):
                if bumper_gap(rear, lead) < cfg.min_spawn_gap:
                    return False
        for v in others:
            if v.lane == 0 and -cfg.ego_rear_buffer < v.pos < cfg.ego_lead_buffer:
                return False
        return self._has_feasible_gap(others)

    def feasible_gap_window(self) -> tuple[float, float]:
        """Where the guaranteed merge opportunity may sit relative to the
        ego. The forward reach scales with how much faster than traffic the
        style is willing to go; falling back is cheap for every style."""
        cfg, task = self.cfg, self.task
        mean_traffic = 0.5 * (cfg.traffic_speed_min + cfg.traffic_speed_max)
        budget = cfg.feasible_gap_reach_frac * cfg.h_max * cfg.dt
        fwd = max(15.0, (task.target_speed - mean_traffic) * budget)
        return -cfg.feasible_gap_back_reach, min(fwd, cfg.feasible_gap_fwd_cap)

    @staticmethod
    def _effective_paces(row: list[VehicleState]) -> list[float]:
        """Long-run pace of each vehicle in a front-sorted lane row: a car
        can go no faster than the slowest car ahead of it."""
        paces = [0.0] * len(row)
        running = math.inf
        for i in range(len(row) - 1, -1, -1):
            running = min(running, row[i].desired_speed)
            paces[i] = running
        return paces

    def _has_feasible_gap(self, others: tuple[VehicleState, ...]) -> bool:
        """Some free interval on the target lane must fit the style's merge
        margins, stay big enough after traffic speed differences play out,
        and be reachable by the ego within most of the episode."""
        cfg, task = self.cfg, self.task
        need = self.required_merge_space()
        horizon = cfg.h_max * cfg.dt  # gaps must survive the whole episode
        budget = cfg.feasible_gap_reach_frac * cfg.h_max * cfg.dt
        row = sorted([v for v in others if v.lane == 1], key=lambda v: v.pos)
        paces = self._effective_paces(row)
        lo, hi = self.feasible_gap_window()
        far = 1e6
        edges = ([(cfg.spawn_behind - cfg.min_spawn_gap - far, None, task.target_speed)]
                 + [(v.pos, v, paces[i]) for i, v in enumerate(row)]
                 + [(cfg.spawn_ahead + cfg.min_spawn_gap + far, None, task.target_speed)])
        for (rear_pos, rear_v, rear_pace), (lead_pos, lead_v, lead_pace) in zip(edges, edges[1:]):
            span = lead_pos - rear_pos - cfg.vehicle_length
            shrink = 0.0
            pace = task.target_speed
            if rear_v is not None and lead_v is not None:
                # a faster rear bound keeps closing until it reaches its IDM
                # following distance behind the gap's lead
                rate = max(0.0, max(rear_v.speed, rear_v.desired_speed) - lead_pace)
                equil = cfg.idm_min_gap + cfg.idm_time_headway * lead_pace
                shrink = min(max(span - equil, 0.0), rate * horizon)
                pace = 0.5 * (rear_pace + lead_pace)
            center = 0.5 * (rear_pos + lead_pos) if span < 2 * far else 0.0
            if rear_v is None and lead_v is not None:
                center = lead_pos - 0.5 * need
                pace = lead_pace
            if lead_v is None and rear_v is not None:
                # open ahead: only usable if the style can genuinely pull
                # away from the gap's rear bound to build its margin
                if task.target_speed - rear_pace < cfg.feasible_gap_open_rate:
                    continue
                center = rear_pos + 0.5 * need
                pace = rear_pace + cfg.feasible_gap_open_rate
            if span - shrink < need or not lo <= center <= hi:
                continue
            if center > 15.0:
                # chasing forward must be possible at the style's pace and
                # through the own-lane corridor
                edge = task.target_speed - pace
                if edge < 1.0 or center > edge * budget:
                    continue
                if not self._corridor_clear(others, center + need, pace):
                    continue
            return True
        return False

    def _corridor_clear(self, others: tuple[VehicleState, ...],
                        upto: float, pace: float) -> bool:
        """A forward gap is only reachable if no slower own-lane vehicle
        blocks the chase corridor."""
        lane0 = sorted([v for v in others if v.lane == 0], key=lambda v: v.pos)
        paces = self._effective_paces(lane0)
        for v, p in zip(lane0, paces):
            if 0.0 < v.pos <= upto and p < pace + 1.0:
                return False
        return True

    # ------------------------------------------------------------------- gaps

    def candidate_gaps(self, scene: Scene) -> tuple[GapDescriptor, GapDescriptor, GapDescriptor]:
        """Front / adjacent / rear gaps on the target lane around the ego's
        longitudinal position. A vehicle exactly beside the ego counts as the
        adjacent gap's lead, so the front gap opens ahead of it and the rear
        gap behind it."""
        ego = scene.ego
        row = sorted([v for v in scene.others if v.lane == 1], key=lambda v: v.pos)
        ahead = [v for v in row if v.pos >= ego.pos]
        behind = [v for v in row if v.pos < ego.pos][::-1]  # nearest first
        a1 = ahead[0] if len(ahead) > 0 else None
        a2 = ahead[1] if len(ahead) > 1 else None
        b1 = behind[0] if len(behind) > 0 else None
        b2 = behind[1] if len(behind) > 1 else None
        off = self._open_offset()

        adjacent = self._bounded_gap(GAP_ADJACENT, a1, b1, ego, off)
        if a1 is not None:
            front = self._bounded_gap(GAP_FRONT, a2, a1, ego, off)
        else:
            # open road ahead: the front option means pulling forward
            front = GapDescriptor(GAP_FRONT, None, None, math.inf,
                                  off, self.task.target_speed)
        if b1 is not None:
            rear = self._bounded_gap(GAP_REAR, b1, b2, ego, off)
        else:
            # open road behind: the rear option means dropping back behind
            # the adjacent neighborhood
            if a1 is not None:
                anchor = a1.pos - 0.5 * a1.length
                ref = min(self.task.target_speed, a1.speed)
            else:
                anchor = ego.pos
                ref = self.task.target_speed
            rear = GapDescriptor(GAP_REAR, None, None, math.inf,
                                 anchor - off - ego.pos, ref)
        return front, adjacent, rear

    def _open_offset(self) -> float:
        """Distance to the virtual center of an open-ended gap; far enough
        out that the style's merge margin is comfortably satisfied there."""
        return max(self.cfg.open_gap_offset,
                   (self.task.min_gap + 0.5) * self.task.target_speed)

    def _bounded_gap(self, index: int, lead: VehicleState | None,
                     rear: VehicleState | None, ego: VehicleState,
                     open_offset: float) -> GapDescriptor:
        if lead is not None and rear is not None:
            length = bumper_gap(rear, lead)
            center = 0.5 * (lead.pos - 0.5 * lead.length + rear.pos + 0.5 * rear.length)
            ref = 0.5 * (lead.speed + rear.speed)
        elif lead is not None:
            length = math.inf
            center = lead.pos - 0.5 * lead.length - open_offset
            ref = lead.speed
        elif rear is not None:
            length = math.inf
            center = rear.pos + 0.5 * rear.length + open_offset
            ref = self.task.target_speed
        else:
            length = math.inf
            center = ego.pos
            ref = self.task.target_speed
        return GapDescriptor(index=index, lead=lead, rear=rear, length=length,
                             center_rel=center - ego.pos, ref_speed=ref)

    def merge_margins(self, scene: Scene) -> tuple[float, float]:
        """Time margins to the actual nearest lead/rear on the target lane."""
        ego = scene.ego
        lead_m, rear_m = math.inf, math.inf
        for v in scene.others:
            if v.lane != 1:
                continue
            if v.pos >= ego.pos:
                m = time_margin(bumper_gap(ego, v), ego.speed)
                lead_m = min(lead_m, m)
            else:
                m = time_margin(bumper_gap(v, ego), v.speed)
                rear_m = min(rear_m, m)
        return lead_m, rear_m

    # ------------------------------------------------------------------- step

    def step(self, scene: Scene, action: int) -> StepOutcome:
        if scene.terminal:
            raise ContractViolation("cannot step a terminal scene")
        cfg, task = self.cfg, self.task
        gap_idx, commit = decode_action(action)
        gaps = self.candidate_gaps(scene)
        chosen = gaps[gap_idx]
        ego = scene.ego

        # longitudinal: track a speed profile that closes on the chosen gap
        # center but never exceeds the style's target speed, capped by a
        # last-moment collision guard against the own-lane leader so the
        # discrete action space always admits crash-free longitudinal control
        a_ego = self.gap_tracking_accel(ego, chosen)
        a_ego = min(a_ego, self._collision_guard(scene))
        a_ego = min(max(a_ego, task.min_accel), task.max_accel)

        # surrounding traffic: IDM against the same-lane leader
        ego_lane = self._occupied_lane(ego)
        accels = [self._idm_accel(v, scene, ego, ego_lane) for v in scene.others]

        new_ego_pos, new_ego_speed = self._integrate(ego.pos, ego.speed, a_ego)
        new_others = []
        for v, a in zip(scene.others, accels):
            p, s = self._integrate(v.pos, v.speed, a)
            new_others.append(replace(v, pos=p, speed=s, accel=a))

        # lateral maneuver: a merge may begin whenever the thin commit
        # margin holds, aborts if the safety margin collapses before the
        # lane midline, and needs sustained commitment: hesitating mid-
        # maneuver lets the offset drift back toward the original lane
        lead_m, rear_m = self.merge_margins(scene)
        margin = min(lead_m, rear_m)
        offset, phase = ego.lateral_offset, scene.phase
        if phase == ABORTED:
            offset = max(0.0, offset - cfg.lateral_rate)
            if offset == 0.0:
                phase = DECIDING
        elif 0.0 < offset < 0.5 and margin <= cfg.safety_margin:
            phase = ABORTED
            offset = max(0.0, offset - cfg.lateral_rate)
        elif commit and (margin > cfg.commit_margin or offset >= 0.5):
            offset = min(1.0, offset + cfg.lateral_rate)
            phase = EXECUTING
        else:
            offset = max(0.0, offset - cfg.lateral_rate)
            phase = EXECUTING if offset > 0.0 else DECIDING

        decision_steps = scene.decision_steps + (1 if scene.phase == DECIDING else 0)
        new_lane = 0 if offset < 0.5 else 1
        new_ego = VehicleState(pos=new_ego_pos, lane=new_lane, lateral_offset=offset,
                               speed=new_ego_speed, accel=a_ego, length=ego.length)

        clock = scene.clock + 1
        termination = TERM_NONE
        if self._any_crash(new_ego, tuple(new_others)):
            termination = TERM_CRASH
        elif offset >= 1.0 - 1e-12:
            termination = TERM_SUCCESS
            phase = DONE
        elif clock >= cfg.h_max:
            termination = TERM_TIMEOUT

        next_scene = Scene(ego=new_ego, others=tuple(new_others), clock=clock,
                           phase=phase, termination=termination,
                           decision_steps=decision_steps, last_gap=gap_idx,
                           seed=scene.seed)
        return StepOutcome(scene=next_scene, terminal=termination != TERM_NONE,
                           termination=termination, decision_steps=decision_steps,
                           rollout_steps=clock)

    def gap_tracking_accel(self, ego: VehicleState, gap: GapDescriptor) -> float:
        """Raw gap-tracking acceleration demand, before the collision guard
        and the style's acceleration clamp."""
        cfg = self.cfg
        v_des = min(gap.ref_speed + cfg.track_kp * gap.center_rel,
                    self.task.target_speed)
        return cfg.track_kv * (max(v_des, 0.0) - ego.speed)

    def _collision_guard(self, scene: Scene) -> float:
        """IDM-shaped ceiling on the ego acceleration against the own-lane
        leader. Uses the environment's thin reflex headway, with the braking
        term scaled by the style's own limits so weak-braking styles start
        slowing earlier."""
        cfg, task = self.cfg, self.task
        ego = scene.ego
        lane = self._occupied_lane(ego)
        lead = None
        for v in scene.others:
            if v.lane == lane and v.pos > ego.pos and (lead is None or v.pos < lead.pos):
                lead = v
        if lead is None:
            return math.inf
        s = max(bumper_gap(ego, lead), 1e-3)
        dv = ego.speed - lead.speed
        s_star = (cfg.idm_min_gap + ego.speed * cfg.safety_margin
                  + ego.speed * dv / (2.0 * math.sqrt(task.max_accel * -task.min_accel)))
        return task.max_accel * (1.0 - (max(s_star, 0.0) / s) ** 2)

    def _integrate(self, pos: float, speed: float, accel: float) -> tuple[float, float]:
        dt = self.cfg.dt
        if speed + accel * dt < 0.0:
            # vehicle halts mid-step; stop exactly at the standstill point
            t_stop = speed / max(-accel, 1e-12)
            return pos + speed * t_stop + 0.5 * accel * t_stop * t_stop, 0.0
        return pos + speed * dt + 0.5 * accel * dt * dt, speed + accel * dt

    @staticmethod
    def _occupied_lane(ego: VehicleState) -> int:
        return 0 if ego.lateral_offset < 0.5 else 1

    def _idm_accel(self, v: VehicleState, scene: Scene, ego: VehicleState,
                   ego_lane: int) -> float:
        cfg = self.cfg
        lead_pos, lead_speed, lead_len = None, 0.0, 0.0
        for other in scene.others:
            if other is v or other.lane != v.lane or other.pos <= v.pos:
                continue
            if lead_pos is None or other.pos < lead_pos:
                lead_pos, lead_speed, lead_len = other.pos, other.speed, other.length
        if ego_lane == v.lane and ego.pos > v.pos and (lead_pos is None or ego.pos < lead_pos):
            lead_pos, lead_speed, lead_len = ego.pos, ego.speed, ego.length
        v0 = max(v.desired_speed, 1e-9)
        free = cfg.idm_accel * (1.0 - (v.speed / v0) ** cfg.idm_exponent)
        if lead_pos is None:
            a = free
        else:
            s = lead_pos - v.pos - 0.5 * (lead_len + v.length)
            s = max(s, 1e-3)
            dv = v.speed - lead_speed
            s_star = (cfg.idm_min_gap + v.speed * cfg.idm_time_headway
                      + v.speed * dv / (2.0 * math.sqrt(cfg.idm_accel * cfg.idm_decel)))
            a = free - cfg.idm_accel * (max(s_star, 0.0) / s) ** 2
        return min(max(a, cfg.idm_accel_floor), cfg.idm_accel)

    def _any_crash(self, ego: VehicleState, others: tuple[VehicleState, ...]) -> bool:
        ego_lane = self._occupied_lane(ego)
        for lane in (0, 1):
            row = [v for v in others if v.lane == lane]
            if lane == ego_lane:
                row.append(ego)
            row.sort(key=lambda v: v.pos)
            for rear, lead in zip(row, row[1:]):
                if bumper_gap(rear, lead) <= 0.0:
                    return True
        return False

    # ----------------------------------------------------------------- encode

    def encode_state(self, scene: Scene) -> np.ndarray:
        """Fixed 44-feature encoding: 4 ego features plus 10 surrounding
        slots of 4 features each, slots sorted by |relative position|.
        Empty slots hold the sentinel: relative position +1000 m (scaled
        like any position), zeros elsewhere."""
        ego = scene.ego
        vec = np.empty(STATE_DIM)
        vec[0] = ego.speed / SPEED_SCALE
        vec[1] = ego.accel / ACCEL_SCALE
        vec[2] = float(ego.lane)
        vec[3] = ego.lateral_offset
        ranked = sorted(scene.others, key=lambda v: (abs(v.pos - ego.pos), v.pos, v.lane))
        for k in range(NUM_SLOTS):
            base = 4 + 4 * k
            if k < len(ranked):
                v = ranked[k]
                vec[base] = (v.pos - ego.pos) / POS_SCALE
                vec[base + 1] = (v.speed - ego.speed) / SPEED_SCALE
                vec[base + 2] = v.accel / ACCEL_SCALE
                vec[base + 3] = float(v.lane)
            else:
                vec[base] = SENTINEL_REL_POS / POS_SCALE
                vec[base + 1] = 0.0
                vec[base + 2] = 0.0
                vec[base + 3] = 0.0
        return vec
