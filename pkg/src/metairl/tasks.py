"""Driving-style task definitions.

A task is one driving style: how big a gap the driver insists on before
merging, how hard they are willing to accelerate or brake, how fast they
want to go, and how long they stick with a chosen gap before reconsidering.
The three built-in styles are tuned so their kinematic footprints separate
cleanly (aggressive > neutral > conservative in accelerations and speed).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class TaskSpec:
    style: str
    min_gap: float          # minimum acceptable time gap before committing, s
    max_accel: float        # m/s^2, > 0
    min_accel: float        # m/s^2, < 0
    target_speed: float     # m/s
    commit_patience: int    # steps between gap-choice re-evaluations

    def __post_init__(self):
        if self.min_gap <= 0:
            raise ValueError("min_gap must be positive")
        if not (self.max_accel > 0 > self.min_accel):
            raise ValueError("need max_accel > 0 > min_accel")
        if self.target_speed <= 0:
            raise ValueError("target_speed must be positive")
        if self.commit_patience < 1:
            raise ValueError("commit_patience must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        return cls(**d)


BUILTIN_STYLES: dict[str, TaskSpec] = {
    "conservative": TaskSpec("conservative", min_gap=2.0, max_accel=2.0,
                             min_accel=-2.0, target_speed=26.0, commit_patience=20),
    "neutral": TaskSpec("neutral", min_gap=1.2, max_accel=3.0,
                        min_accel=-3.0, target_speed=30.0, commit_patience=12),
    "aggressive": TaskSpec("aggressive", min_gap=0.6, max_accel=4.5,
                           min_accel=-4.5, target_speed=34.0, commit_patience=6),
}


def get_style(name: str, styles: dict[str, TaskSpec] | None = None) -> TaskSpec:
    table = styles if styles is not None else BUILTIN_STYLES
    if name not in table:
        known = ", ".join(sorted(table))
        raise KeyError(f"unknown driving style {name!r} (known: {known})")
    return table[name]
