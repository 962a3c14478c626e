"""Difference-equation simulator of the moving-robot safety scenario.

A robot drives a straight 100 m track along the centre line of a 120 x 30 m
hall.  A safety controller polls positions every 10 ms and selects an
operation mode from the human distance (normal / yellow / red); the chosen
mode takes effect one reaction delay later.  Robot and human kinematics are
integrated with an explicit Euler step every 5 ms, speeds clamped so they
never overshoot their mode target.  Runs are deterministic: time is an
integer step count and the reaction delay is rounded to whole microseconds.

The human is a worst-case sprinter: it spawns at a configured entry point at
``human_entry_distance`` from the robot and runs at full speed toward the
robot's current position every step (``human_aim="frozen"`` keeps the spawn
heading instead).  The default entry is head-on on the centre line while the
robot is still accelerating; this documented phase reconstruction puts the
0.5 s-delay impact speed at 0.575 m/s, next to the published 0.625 m/s.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

MICROS = 1_000_000


class Mode(enum.Enum):
    NORMAL = "normal"
    YELLOW = "yellow"
    RED = "red"


@dataclass(frozen=True)
class ScenarioConfig:
    hall_width: float = 120.0
    hall_depth: float = 30.0
    track_length: float = 100.0
    robot_half_width: float = 1.0  # 2 x 2 m footprint
    human_half_width: float = 0.25  # 0.5 x 0.5 m, invented default
    robot_max_speed: float = 10.0
    normal_accel: float = 5.0
    yellow_decel: float = 10.0
    red_decel: float = 15.0
    yellow_speed: float = 2.0
    creep_speed: float = 1.0
    creep_zone: float = 11.0  # distance from endpoint with 1 m/s limit
    yellow_threshold: float = 25.0
    red_threshold: float = 10.0
    physics_step: float = 0.005
    poll_period: float = 0.01
    poll_phase: float = 0.0
    reaction_delay: float = 0.5
    human_speed: float = 10.0
    human_present: bool = True
    human_entry_distance: float = 25.01
    human_spawn_time: float = 1.75
    human_entry: str = "ahead"  # ahead | side_ahead | side_behind | behind
    human_aim: str = "pursuit"  # pursuit | frozen
    robot_start: float = 0.0
    time_cap: float = 60.0

    def __post_init__(self):
        positive = (
            "hall_width",
            "hall_depth",
            "track_length",
            "robot_half_width",
            "human_half_width",
            "robot_max_speed",
            "normal_accel",
            "yellow_decel",
            "red_decel",
            "yellow_speed",
            "creep_speed",
            "creep_zone",
            "yellow_threshold",
            "red_threshold",
            "physics_step",
            "poll_period",
            "human_speed",
            "time_cap",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.red_threshold >= self.yellow_threshold:
            raise ValueError("red_threshold must be below yellow_threshold")
        if self.reaction_delay < 0:
            raise ValueError("reaction_delay must be >= 0")
        steps = self.poll_period / self.physics_step
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ValueError("physics_step must divide poll_period")
        if self.human_entry not in ("ahead", "side_ahead", "side_behind", "behind"):
            raise ValueError(f"unknown human_entry {self.human_entry!r}")
        if self.human_aim not in ("pursuit", "frozen"):
            raise ValueError(f"unknown human_aim {self.human_aim!r}")

    @property
    def center_y(self) -> float:
        return self.hall_depth / 2.0

    @property
    def step_us(self) -> int:
        return round(self.physics_step * MICROS)

    @property
    def steps_per_poll(self) -> int:
        return round(self.poll_period / self.physics_step)

    def entry_point(self, robot_pos: float) -> tuple[float, float]:
        d = self.human_entry_distance
        if self.human_entry == "ahead":
            return (robot_pos + d, self.center_y)
        if self.human_entry == "behind":
            return (robot_pos - d, self.center_y)
        dx = math.sqrt(max(d * d - self.center_y**2, 0.0))
        if self.human_entry == "side_ahead":
            return (robot_pos + dx, self.hall_depth)
        return (robot_pos - dx, self.hall_depth)


@dataclass(frozen=True)
class SimState:
    time_us: int
    robot_pos: float
    robot_speed: float
    mode: Mode
    human: Optional[tuple[float, float]] = None
    human_heading: Optional[tuple[float, float]] = None  # frozen aim only

    @property
    def time_s(self) -> float:
        return self.time_us / MICROS


@dataclass(frozen=True)
class TraceRecord:
    time_us: int
    robot_box: tuple[float, float, float, float]  # xmin, xmax, ymin, ymax
    human_box: Optional[tuple[float, float, float, float]]
    robot_speed: float
    mode: Mode

    @property
    def time_s(self) -> float:
        return self.time_us / MICROS


@dataclass(frozen=True)
class ImpactReport:
    collided: bool
    impact_time: Optional[float] = None
    robot_speed_at_impact: Optional[float] = None
    impact_pos: Optional[float] = None


def controller_decide(distance: float, config: Optional[ScenarioConfig] = None) -> Mode:
    """Operation mode from the human distance (thresholds 25 m and 10 m)."""
    yellow = config.yellow_threshold if config else 25.0
    red = config.red_threshold if config else 10.0
    if distance >= yellow:
        return Mode.NORMAL
    if distance > red:
        return Mode.YELLOW
    return Mode.RED


def target_speed(mode: Mode, robot_pos: float, config: ScenarioConfig) -> float:
    """Speed the robot steers toward in the given mode at the given position."""
    in_creep = robot_pos >= config.track_length - config.creep_zone
    if mode is Mode.RED:
        return 0.0
    if mode is Mode.YELLOW:
        return config.creep_speed if in_creep else config.yellow_speed
    return config.creep_speed if in_creep else config.robot_max_speed


def _mode_rate(mode: Mode, config: ScenarioConfig) -> float:
    if mode is Mode.RED:
        return config.red_decel
    if mode is Mode.YELLOW:
        return config.yellow_decel
    return config.normal_accel


def physics_step(state: SimState, config: ScenarioConfig) -> SimState:
    """One explicit-Euler step of robot and human motion (no mode changes)."""
    dt = config.physics_step
    tgt = target_speed(state.mode, state.robot_pos, config)
    rate = _mode_rate(state.mode, config)
    dv = tgt - state.robot_speed
    dv = max(-rate * dt, min(rate * dt, dv))
    speed = state.robot_speed + dv
    pos = min(config.track_length, max(0.0, state.robot_pos + speed * dt))

    human = state.human
    heading = state.human_heading
    if human is not None:
        hx, hy = human
        if config.human_aim == "pursuit":
            dx, dy = pos - hx, config.center_y - hy
        else:
            dx, dy = heading
        dist = math.hypot(dx, dy)
        if dist > 1e-12:
            hx += config.human_speed * dt * dx / dist
            hy += config.human_speed * dt * dy / dist
        human = (hx, hy)
    return replace(
        state,
        time_us=state.time_us + config.step_us,
        robot_pos=pos,
        robot_speed=speed,
        human=human,
        human_heading=heading,
    )


def _clamp_box(
    cx: float, cy: float, half: float, config: ScenarioConfig
) -> tuple[float, float, float, float]:
    return (
        max(cx - half, 0.0),
        min(cx + half, config.hall_width),
        max(cy - half, 0.0),
        min(cy + half, config.hall_depth),
    )


def _record(state: SimState, config: ScenarioConfig) -> TraceRecord:
    robot_box = _clamp_box(
        state.robot_pos, config.center_y, config.robot_half_width, config
    )
    human_box = None
    if state.human is not None:
        human_box = _clamp_box(
            state.human[0], state.human[1], config.human_half_width, config
        )
    return TraceRecord(state.time_us, robot_box, human_box, state.robot_speed, state.mode)


def _boxes_collide(state: SimState, config: ScenarioConfig) -> bool:
    if state.human is None:
        return False
    reach = config.robot_half_width + config.human_half_width
    hx, hy = state.human
    return abs(hx - state.robot_pos) <= reach and abs(hy - config.center_y) <= reach


def run_scenario(config: ScenarioConfig) -> tuple[list[TraceRecord], ImpactReport]:
    """Drive polls, delayed mode switches and physics until impact or rest."""
    if config.time_cap <= 0:
        raise ValueError("time_cap must be positive")
    dt_us = config.step_us
    delay_us = round(config.reaction_delay * MICROS)
    delay_steps = -(-delay_us // dt_us)  # first step at or after the delay
    spawn_step = round(config.human_spawn_time / config.physics_step)
    poll_offset = round(config.poll_phase / config.physics_step)
    cap_steps = int(config.time_cap / config.physics_step)

    state = SimState(
        time_us=0,
        robot_pos=config.robot_start,
        robot_speed=0.0,
        mode=Mode.NORMAL,
    )
    pending: list[tuple[int, Mode]] = []
    trace = [_record(state, config)]

    for k in range(cap_steps):
        if config.human_present and k == spawn_step:
            entry = config.entry_point(state.robot_pos)
            heading = None
            if config.human_aim == "frozen":
                heading = (state.robot_pos - entry[0], config.center_y - entry[1])
            state = replace(state, human=entry, human_heading=heading)
        if (k - poll_offset) % config.steps_per_poll == 0 and k >= poll_offset:
            if state.human is None:
                decided = Mode.NORMAL
            else:
                distance = math.hypot(
                    state.human[0] - state.robot_pos,
                    state.human[1] - config.center_y,
                )
                decided = controller_decide(distance, config)
            pending.append((k + delay_steps, decided))
        while pending and pending[0][0] <= k:
            state = replace(state, mode=pending.pop(0)[1])

        state = physics_step(state, config)
        trace.append(_record(state, config))

        if _boxes_collide(state, config):
            report = ImpactReport(
                collided=True,
                impact_time=state.time_s,
                robot_speed_at_impact=state.robot_speed,
                impact_pos=state.robot_pos,
            )
            return trace, report
        human_gone = state.human is not None and not (
            0.0 <= state.human[0] <= config.hall_width
            and 0.0 <= state.human[1] <= config.hall_depth
        )
        if state.robot_pos >= config.track_length and (
            state.human is None or human_gone
        ):
            break
    return trace, ImpactReport(collided=False)


def worst_case_sweep(
    config: ScenarioConfig, delays: Sequence[float]
) -> list[ImpactReport]:
    """One run per reaction delay; delays must be sorted ascending."""
    if any(b < a for a, b in zip(delays, delays[1:])):
        raise ValueError("delays must be sorted ascending")
    return [
        run_scenario(replace(config, reaction_delay=d))[1] for d in delays
    ]


# --- trace files ---------------------------------------------------------------

TRACE_HEADER = (
    "timestamp_s,robot_xmin,robot_xmax,robot_ymin,robot_ymax,"
    "human_xmin,human_xmax,human_ymin,human_ymax,speed_mps,mode"
)


class TraceFormatError(ValueError):
    def __init__(self, message: str, row: int):
        super().__init__(f"trace row {row}: {message}")
        self.row = row


def format_trace(records: Sequence[TraceRecord]) -> str:
    lines = [TRACE_HEADER]
    for rec in records:
        human = rec.human_box or ("", "", "", "")
        fields = [f"{rec.time_us / MICROS:.6f}"]
        fields += [repr(v) for v in rec.robot_box]
        fields += [repr(v) if v != "" else "" for v in human]
        fields += [repr(rec.robot_speed), rec.mode.value]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> list[TraceRecord]:
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise TraceFormatError("missing or wrong header line", 1)
    records = []
    for row, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 11:
            raise TraceFormatError(f"expected 11 fields, got {len(parts)}", row)
        try:
            time_us = round(float(parts[0]) * MICROS)
            robot_box = tuple(float(v) for v in parts[1:5])
            human_box = None
            if parts[5] != "":
                human_box = tuple(float(v) for v in parts[5:9])
            speed = float(parts[9])
            mode = Mode(parts[10])
        except ValueError as exc:
            raise TraceFormatError(str(exc), row) from None
        records.append(TraceRecord(time_us, robot_box, human_box, speed, mode))
    return records


def write_trace(records: Sequence[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_trace(records))


def read_trace(path) -> list[TraceRecord]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_trace(handle.read())
