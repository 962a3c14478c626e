"""Discrete delay distributions over integer 100 microsecond ticks.

Execution-time distributions are given accumulatively (a CDF over ticks) and
manipulated exactly: probabilities are `fractions.Fraction` throughout, so
masses as small as 5e-10 survive subtraction from values arbitrarily close
to 1.  Binary floats are rejected as probability inputs because they cannot
represent the decimal literals these tables are made of.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

ProbLike = Union[Fraction, int, str]

#: Number of ticks per second (one tick is 100 microseconds).
TICKS_PER_SECOND = 10_000


def as_prob(value: ProbLike) -> Fraction:
    """Coerce a probability literal to an exact Fraction in [0, 1]."""
    if isinstance(value, float):
        raise TypeError(
            "float probabilities are not exact; pass a str, int or Fraction"
        )
    p = Fraction(value)
    if not 0 <= p <= 1:
        raise ValueError(f"probability {value!r} outside [0, 1]")
    return p


def ticks_from_seconds(seconds: float) -> int:
    """Convert seconds to the nearest whole tick."""
    return round(seconds * TICKS_PER_SECOND)


def seconds_from_ticks(ticks: int) -> float:
    return ticks / TICKS_PER_SECOND


class DistributionError(ValueError):
    """Raised for malformed CDFs or PMFs."""


@dataclass(frozen=True)
class DelayCdf:
    """Accumulative distribution: ordered (tick, cumulative probability) knots.

    The final cumulative value must be exactly 1.
    """

    points: tuple[tuple[int, Fraction], ...]

    def __init__(self, points: Iterable[tuple[int, ProbLike]]):
        pts = tuple((int(t), as_prob(p)) for t, p in points)
        if not pts:
            raise DistributionError("a CDF needs at least one point")
        prev_t, prev_p = None, Fraction(0)
        for t, p in pts:
            if t < 0:
                raise DistributionError(f"negative tick {t}")
            if prev_t is not None and t <= prev_t:
                raise DistributionError(f"ticks not strictly increasing at {t}")
            if p < prev_p:
                raise DistributionError(f"cumulative probability decreases at tick {t}")
            prev_t, prev_p = t, p
        if pts[-1][1] != 1:
            raise DistributionError(
                f"final cumulative probability is {pts[-1][1]}, expected exactly 1"
            )
        object.__setattr__(self, "points", pts)

    @property
    def ticks(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.points)

    @property
    def max_tick(self) -> int:
        return self.points[-1][0]


@dataclass(frozen=True)
class DelayPmf:
    """Point masses: ordered (tick, probability) with positive masses summing to 1."""

    masses: tuple[tuple[int, Fraction], ...]

    def __init__(self, masses: Iterable[tuple[int, ProbLike]]):
        ms = tuple((int(t), as_prob(p)) for t, p in masses)
        if not ms:
            raise DistributionError("a PMF needs at least one mass")
        prev_t = None
        total = Fraction(0)
        for t, p in ms:
            if t < 0:
                raise DistributionError(f"negative tick {t}")
            if prev_t is not None and t <= prev_t:
                raise DistributionError(f"ticks not strictly increasing at {t}")
            if p <= 0:
                raise DistributionError(f"non-positive mass at tick {t}")
            prev_t = t
            total += p
        if total != 1:
            raise DistributionError(f"total mass is {total}, expected exactly 1")
        object.__setattr__(self, "masses", ms)

    @property
    def ticks(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.masses)

    @property
    def min_tick(self) -> int:
        return self.masses[0][0]

    @property
    def max_tick(self) -> int:
        return self.masses[-1][0]


@dataclass(frozen=True)
class HistogramBin:
    bin_start: int
    bin_width: int
    mass: Fraction


def cdf_to_pmf(cdf: DelayCdf) -> DelayPmf:
    """Successive differences of the cumulative knots; zero-mass steps dropped."""
    masses = []
    prev = Fraction(0)
    for t, p in cdf.points:
        if p > prev:
            masses.append((t, p - prev))
        prev = p
    return DelayPmf(masses)


def pmf_to_cdf(pmf: DelayPmf) -> DelayCdf:
    """Running sums; inverse of cdf_to_pmf on canonical CDFs."""
    points = []
    acc = Fraction(0)
    for t, p in pmf.masses:
        acc += p
        points.append((t, acc))
    return DelayCdf(points)


def convolve(a: DelayPmf, b: DelayPmf) -> DelayPmf:
    """Distribution of the sum of two independent delays."""
    out: dict[int, Fraction] = {}
    for t1, p1 in a.masses:
        for t2, p2 in b.masses:
            t = t1 + t2
            out[t] = out.get(t, Fraction(0)) + p1 * p2
    return DelayPmf(sorted(out.items()))


def convolve_many(pmfs: Sequence[DelayPmf]) -> DelayPmf:
    if not pmfs:
        raise DistributionError("nothing to convolve")
    acc = pmfs[0]
    for nxt in pmfs[1:]:
        acc = convolve(acc, nxt)
    return acc


def prob_at_most(pmf: DelayPmf, t: int) -> Fraction:
    """P(delay <= t ticks)."""
    return sum((p for tick, p in pmf.masses if tick <= t), Fraction(0))


def histogram(pmf: DelayPmf, bin_width: int) -> list[HistogramBin]:
    """Bin masses into [k*w, (k+1)*w) intervals covering the full support."""
    if bin_width <= 0:
        raise DistributionError("bin width must be positive")
    first = pmf.min_tick // bin_width
    last = pmf.max_tick // bin_width
    bins = [Fraction(0)] * (last - first + 1)
    for t, p in pmf.masses:
        bins[t // bin_width - first] += p
    return [
        HistogramBin((first + i) * bin_width, bin_width, m)
        for i, m in enumerate(bins)
    ]


def _table(rows: Sequence[tuple[int, str]]) -> DelayCdf:
    return DelayCdf(rows)


# Accumulative execution-time distributions of the four reaction sub-tasks,
# in 100 microsecond ticks.
SENSOR_FETCH_TIME = _table(
    [(150, "0.10"), (170, "0.40"), (180, "0.85"), (190, "0.99998"), (200, "1")]
)
RECOGNITION_TIME = _table(
    [
        (2500, "0.10"),
        (2600, "0.30"),
        (2700, "0.60"),
        (2800, "0.90"),
        (2850, "0.99"),
        (2900, "1"),
    ]
)
COMMUNICATION_TIME = _table(
    [(150, "0.80"), (160, "0.98"), (165, "0.995"), (169, "0.9999999995"), (200, "1")]
)
ROBOT_ACTUATION_TIME = _table(
    [(1500, "0.05"), (1590, "0.90"), (1600, "0.95"), (1650, "0.999995"), (1700, "1")]
)

REACTION_CHAIN = (
    SENSOR_FETCH_TIME,
    RECOGNITION_TIME,
    COMMUNICATION_TIME,
    ROBOT_ACTUATION_TIME,
)
