"""Probability-annotated spatiotemporal occupancy and collision checking.

A specification lists, per timestamp, axis-aligned boxes an entity occupies
together with the probability of being inside them.  Collision checking
intersects equal-time boxes of two specifications and multiplies their
probabilities (occupancies of distinct entities are treated as independent;
see README).  Checking requires both specifications to share a time base:
differing cadences are an error, never silently resampled.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

from .sim import MICROS, TraceRecord
from .textio import format_prob

Box = tuple[float, float, float, float]  # xmin, xmax, ymin, ymax


class SpatialError(ValueError):
    pass


def _coerce_prob(value) -> Fraction:
    """Exact probability; floats are read as their shortest decimal literal."""
    if isinstance(value, float):
        value = repr(value)
    p = Fraction(value)
    if not 0 <= p <= 1:
        raise SpatialError(f"probability {value!r} outside [0, 1]")
    return p


def box_intersection(a: Box, b: Box) -> Optional[Box]:
    """Overlap box with positive area, or None."""
    xmin, xmax = max(a[0], b[0]), min(a[1], b[1])
    ymin, ymax = max(a[2], b[2]), min(a[3], b[3])
    if xmin < xmax and ymin < ymax:
        return (xmin, xmax, ymin, ymax)
    return None


@dataclass(frozen=True)
class OccupancyEntry:
    time_us: int
    box: Box
    probability: Fraction

    def __post_init__(self):
        if self.box[0] >= self.box[1] or self.box[2] >= self.box[3]:
            raise SpatialError(f"degenerate box {self.box}")
        if not 0 < self.probability <= 1:
            raise SpatialError(f"probability {self.probability} outside (0, 1]")

    @property
    def time_s(self) -> float:
        return self.time_us / MICROS


@dataclass(frozen=True)
class SpatioTemporalSpec:
    entity_name: str
    entries: tuple[OccupancyEntry, ...]

    def __post_init__(self):
        times = [e.time_us for e in self.entries]
        if any(b < a for a, b in zip(times, times[1:])):
            raise SpatialError("entries must be sorted by time")

    def cadence_us(self) -> Optional[int]:
        """Greatest common step of the distinct timestamps, if two or more."""
        times = sorted({e.time_us for e in self.entries})
        if len(times) < 2:
            return None
        step = 0
        for a, b in zip(times, times[1:]):
            step = gcd(step, b - a)
        return step


@dataclass(frozen=True)
class CollisionEvent:
    time_us: int
    box_a: Box
    box_b: Box
    overlap: Box
    joint_probability: Fraction

    @property
    def time_s(self) -> float:
        return self.time_us / MICROS


def trace_to_spec(
    records: Sequence[TraceRecord],
    entity: str,
    probability=1,
) -> SpatioTemporalSpec:
    """One occupancy entry per trace record carrying the given probability.

    ``entity`` is "robot" or "human"; records where the human has not yet
    entered contribute no human entry.
    """
    if entity not in ("robot", "human"):
        raise SpatialError(f"entity must be 'robot' or 'human', got {entity!r}")
    p = _coerce_prob(probability)
    entries = []
    for rec in records:
        box = rec.robot_box if entity == "robot" else rec.human_box
        if box is None:
            continue
        entries.append(OccupancyEntry(rec.time_us, box, p))
    return SpatioTemporalSpec(entity, tuple(entries))


def check_collision(
    a: SpatioTemporalSpec, b: SpatioTemporalSpec
) -> list[CollisionEvent]:
    """Equal-time box intersections with joint (product) probabilities."""
    ca, cb = a.cadence_us(), b.cadence_us()
    if ca is not None and cb is not None:
        if ca % cb != 0 and cb % ca != 0:
            raise SpatialError(
                f"time bases differ: cadence {ca} us vs {cb} us; resample "
                "explicitly before checking"
            )
        step = min(ca, cb)
        if a.entries and b.entries:
            if (a.entries[0].time_us - b.entries[0].time_us) % step != 0:
                raise SpatialError(
                    "time bases differ: grids are offset against each other"
                )
    by_time: dict[int, list[OccupancyEntry]] = {}
    for entry in b.entries:
        by_time.setdefault(entry.time_us, []).append(entry)
    events = []
    for entry in a.entries:
        for other in by_time.get(entry.time_us, ()):
            overlap = box_intersection(entry.box, other.box)
            if overlap is not None:
                events.append(
                    CollisionEvent(
                        entry.time_us,
                        entry.box,
                        other.box,
                        overlap,
                        entry.probability * other.probability,
                    )
                )
    events.sort(key=lambda e: e.time_us)
    return events


def threshold_filter(
    events: Iterable[CollisionEvent], epsilon
) -> list[CollisionEvent]:
    """Drop events whose joint probability is below the residual-risk bound."""
    eps = _coerce_prob(epsilon)
    return [e for e in events if e.joint_probability >= eps]


def widen_by_speed_error(
    spec: SpatioTemporalSpec,
    error_levels: Sequence[tuple[object, float]],
    horizon_s: float,
    hall: Optional[tuple[float, float]] = None,
) -> list[tuple[Fraction, SpatioTemporalSpec]]:
    """Nested confidence regions for speed uncertainty.

    ``error_levels`` lists (cumulative probability, worst absolute speed error
    in m/s) with ascending probabilities ending at 1 and non-decreasing
    errors.  Each level yields a copy of the spec whose boxes are widened
    along the track by +/- error * elapsed-time, truncated to the horizon and
    clamped to the hall when given.
    """
    levels = [(_coerce_prob(p), float(e)) for p, e in error_levels]
    if not levels:
        raise SpatialError("no error levels")
    for (pa, ea), (pb, eb) in zip(levels, levels[1:]):
        if pb <= pa:
            raise SpatialError("cumulative levels must be strictly increasing")
        if eb < ea:
            raise SpatialError("speed errors must be non-decreasing with level")
    if levels[-1][0] != 1:
        raise SpatialError("final cumulative level must be 1")
    if any(e < 0 for _, e in levels):
        raise SpatialError("speed errors must be non-negative")
    if horizon_s <= 0:
        raise SpatialError("horizon must be positive")

    if not spec.entries:
        return [(p, spec) for p, _ in levels]
    t0 = spec.entries[0].time_us
    out = []
    for p, err in levels:
        entries = []
        for entry in spec.entries:
            elapsed = (entry.time_us - t0) / MICROS
            if elapsed > horizon_s:
                break
            delta = err * elapsed
            xmin, xmax, ymin, ymax = entry.box
            xmin, xmax = xmin - delta, xmax + delta
            if hall is not None:
                xmin, xmax = max(xmin, 0.0), min(xmax, hall[0])
                ymin, ymax = max(ymin, 0.0), min(ymax, hall[1])
            entries.append(
                OccupancyEntry(entry.time_us, (xmin, xmax, ymin, ymax), entry.probability)
            )
        out.append((p, SpatioTemporalSpec(spec.entity_name, tuple(entries))))
    return out


# --- occupancy text format -------------------------------------------------------

_TIME_RE = re.compile(r"time\s*=\s*([0-9.]+)\s*->")
_OCC_RE = re.compile(
    r"occupied\s+box\s+\[([^,]+),([^\]]+)\]x\[([^,]+),([^\]]+)\]\s+"
    r"with\s+probability\s+(\S+)"
)


def export_bespaced(spec: SpatioTemporalSpec) -> str:
    """Implication-form occupancy text: a time premise per stamp, one
    'occupied box ... with probability p' conjunct per entry."""
    lines = [f"entity {spec.entity_name}"]
    current: Optional[int] = None
    for entry in spec.entries:
        if entry.time_us != current:
            lines.append(f"time = {entry.time_us / MICROS:.6f} ->")
            current = entry.time_us
        x1, x2, y1, y2 = entry.box
        lines.append(
            f"  occupied box [{x1!r},{x2!r}]x[{y1!r},{y2!r}] "
            f"with probability {format_prob(entry.probability)}"
        )
    return "\n".join(lines) + "\n"


def read_bespaced(text: str) -> SpatioTemporalSpec:
    entity = None
    entries: list[OccupancyEntry] = []
    current: Optional[int] = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("entity "):
            entity = line[len("entity ") :].strip()
            continue
        m = _TIME_RE.fullmatch(line)
        if m:
            current = round(float(m.group(1)) * MICROS)
            continue
        m = _OCC_RE.fullmatch(line)
        if m:
            if current is None:
                raise SpatialError(f"line {line_no}: occupancy before any time premise")
            x1, x2, y1, y2 = (float(m.group(i)) for i in range(1, 5))
            prob_text = m.group(5)
            if "/" in prob_text:
                num, den = prob_text.split("/")
                prob = Fraction(int(num), int(den))
            else:
                prob = Fraction(prob_text)
            entries.append(OccupancyEntry(current, (x1, x2, y1, y2), prob))
            continue
        raise SpatialError(f"line {line_no}: unrecognised line {line!r}")
    if entity is None:
        raise SpatialError("missing entity header")
    return SpatioTemporalSpec(entity, tuple(entries))
