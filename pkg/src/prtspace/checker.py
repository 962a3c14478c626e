"""Bounded-reachability checking on the digital MDP.

Two engines compute optimal P(F<=T target):

* ``staircase`` builds, per state, the exact step function budget -> value by
  dynamic programming over the (acyclic) reduced process.  One pass yields the
  probability for every bound at once, with rational arithmetic when the model
  probabilities are rational.
* ``layered`` is classic finite-horizon value iteration over time layers,
  in float64, dispatched to a compiled kernel when available.  It handles
  cyclic models too.

``auto`` tries the staircase engine and falls back to layered on cycles.
"""

from __future__ import annotations

import bisect
import os
import re
from array import array
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from ._kernel import layered_curve
from .composer import DigitalMdp
from .distributions import HistogramBin

DEFAULT_HORIZON_CAP = 100_000
HORIZON_CAP_ENV = "PRTSPACE_HORIZON_CAP"

Number = Union[Fraction, float]
Staircase = tuple[tuple[int, Number], ...]  # ascending (threshold, value) steps


class CheckerError(ValueError):
    pass


class HorizonError(CheckerError):
    pass


class EngineUnsupported(CheckerError):
    """Staircase engine cannot represent this model (cyclic behaviour)."""


def horizon_cap() -> int:
    raw = os.environ.get(HORIZON_CAP_ENV)
    if raw is None:
        return DEFAULT_HORIZON_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise HorizonError(f"bad {HORIZON_CAP_ENV} value {raw!r}") from exc
    if cap <= 0:
        raise HorizonError(f"{HORIZON_CAP_ENV} must be positive")
    return cap


@dataclass(frozen=True)
class ReachabilityQuery:
    target: str
    bound: int  # ticks
    mode: str = "max"

    def __post_init__(self):
        if self.bound < 0:
            raise CheckerError("bound must be >= 0")
        if self.mode not in ("max", "min"):
            raise CheckerError(f"mode must be 'max' or 'min', got {self.mode!r}")


@dataclass(frozen=True)
class ReachabilityResult:
    probability: Number
    iterations: int
    states_explored: int
    mode: str
    engine: str


@dataclass(frozen=True)
class DensityResult:
    grid: tuple[tuple[int, Number], ...]  # (T, cumulative)
    density: tuple[HistogramBin, ...]


# --- target expressions ------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\()|(\))|(=)|(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(&)|(\|)|(!))")


def compile_target(mdp: DigitalMdp, expression: str) -> Callable[[int], bool]:
    """Compile a boolean expression over flags and locations to a state test.

    Grammar: ``or``/``|`` and ``and``/``&`` connectives, ``not``/``!``,
    parentheses, ``true``/``false``, flag names, and ``<location_var> = <int>``
    comparisons.
    """
    tokens: list[str] = []
    pos = 0
    while pos < len(expression):
        m = _TOKEN.match(expression, pos)
        if not m or m.end() == pos:
            if expression[pos:].strip():
                raise CheckerError(
                    f"bad character {expression[pos:].strip()[0]!r} in target"
                )
            break
        tokens.append(m.group(m.lastindex))
        pos = m.end()

    flag_idx = {name: i for i, name in enumerate(mdp.flag_vars)}
    loc_idx = {name: i for i, name in enumerate(mdp.loc_vars)}
    cursor = [0]

    def peek() -> Optional[str]:
        return tokens[cursor[0]] if cursor[0] < len(tokens) else None

    def take() -> str:
        tok = peek()
        if tok is None:
            raise CheckerError("unexpected end of target expression")
        cursor[0] += 1
        return tok

    def parse_or():
        node = parse_and()
        while peek() in ("or", "|"):
            take()
            rhs = parse_and()
            node = ("or", node, rhs)
        return node

    def parse_and():
        node = parse_not()
        while peek() in ("and", "&"):
            take()
            rhs = parse_not()
            node = ("and", node, rhs)
        return node

    def parse_not():
        if peek() in ("not", "!"):
            take()
            return ("not", parse_not())
        return parse_atom()

    def parse_atom():
        tok = take()
        if tok == "(":
            node = parse_or()
            if take() != ")":
                raise CheckerError("missing ')' in target expression")
            return node
        if tok == "true":
            return ("const", True)
        if tok == "false":
            return ("const", False)
        if tok.isidentifier():
            if peek() == "=":
                take()
                value = take()
                if not value.isdigit():
                    raise CheckerError(f"expected location number after {tok}=")
                if tok not in loc_idx:
                    raise CheckerError(f"unknown location variable {tok!r}")
                return ("loc", loc_idx[tok], int(value))
            if tok not in flag_idx:
                raise CheckerError(f"unknown flag {tok!r} in target expression")
            return ("flag", flag_idx[tok])
        raise CheckerError(f"unexpected token {tok!r} in target expression")

    tree = parse_or()
    if peek() is not None:
        raise CheckerError(f"trailing input in target expression at {peek()!r}")

    states = mdp.states

    def evaluate(node, locs, flags) -> bool:
        kind = node[0]
        if kind == "flag":
            return flags[node[1]]
        if kind == "loc":
            return locs[node[1]] == node[2]
        if kind == "and":
            return evaluate(node[1], locs, flags) and evaluate(node[2], locs, flags)
        if kind == "or":
            return evaluate(node[1], locs, flags) or evaluate(node[2], locs, flags)
        if kind == "not":
            return not evaluate(node[1], locs, flags)
        return node[1]

    def test(idx: int) -> bool:
        locs, _, flags = states[idx]
        return evaluate(tree, locs, flags)

    return test


# --- staircase arithmetic ----------------------------------------------------


def _canonical(steps: Sequence[tuple[int, Number]]) -> Staircase:
    out: list[tuple[int, Number]] = []
    last = 0
    for t, v in steps:
        if v == last:
            continue
        if out and out[-1][0] == t:
            out[-1] = (t, v)
        else:
            out.append((t, v))
        last = v
    return tuple(out)


def staircase_value(st: Staircase, budget: int) -> Number:
    i = bisect.bisect_right([t for t, _ in st], budget) - 1
    return st[i][1] if i >= 0 else 0


def _scale_shift(st: Staircase, factor: Number, delta: int) -> list[tuple[int, Number]]:
    return [(t + delta, factor * v) for t, v in st]


def _merge(parts: list[list[tuple[int, Number]]], op: str) -> Staircase:
    """Pointwise sum/max/min of staircases given as step lists."""
    knots = sorted({t for part in parts for t, _ in part})
    if not knots:
        return ()
    values = []
    idxs = [0] * len(parts)
    currents: list[Number] = [0] * len(parts)
    for t in knots:
        for j, part in enumerate(parts):
            while idxs[j] < len(part) and part[idxs[j]][0] <= t:
                currents[j] = part[idxs[j]][1]
                idxs[j] += 1
        if op == "sum":
            values.append(sum(currents))
        elif op == "max":
            values.append(max(currents))
        else:
            values.append(min(currents))
    return _canonical(list(zip(knots, values)))


def reach_staircase(
    mdp: DigitalMdp, target: Union[str, Callable[[int], bool]], mode: str = "max"
) -> Staircase:
    """Exact budget -> P(F<=budget target) step function at the initial state.

    Raises EngineUnsupported on models with cycles (their step functions have
    unboundedly many knots).
    """
    if mode not in ("max", "min"):
        raise CheckerError(f"mode must be 'max' or 'min', got {mode!r}")
    test = compile_target(mdp, target) if isinstance(target, str) else target
    memo: dict[int, Staircase] = {}
    visiting: set[int] = set()
    actions = mdp.actions

    stack: list[tuple[int, bool]] = [(mdp.initial, False)]
    while stack:
        s, ready = stack.pop()
        if ready:
            parts = []
            for act in actions[s]:
                branch_parts = [
                    _scale_shift(memo[dest], p, act.duration)
                    for p, dest in act.branches
                ]
                parts.append(list(_merge(branch_parts, "sum")))
            if parts:
                memo[s] = _merge(parts, "max" if mode == "max" else "min")
            else:
                memo[s] = ()
            visiting.discard(s)
            continue
        if s in memo:
            continue
        if s in visiting:
            raise EngineUnsupported(
                "cycle reached; the staircase engine needs an acyclic process"
            )
        if test(s):
            memo[s] = ((0, Fraction(1)),)
            continue
        visiting.add(s)
        stack.append((s, True))
        for act in actions[s]:
            for _, dest in act.branches:
                if dest not in memo:
                    stack.append((dest, False))
    return memo[mdp.initial]


# --- layered value iteration -------------------------------------------------


def _layered_arrays(mdp: DigitalMdp, test: Callable[[int], bool]):
    n = mdp.state_count
    mask = array("B", bytes(n))
    for s in range(n):
        if test(s):
            mask[s] = 1
    topo = array("q", mdp.zero_topo_order())
    act_ptr = array("q", [0]) * (n + 1)
    durs: list[int] = []
    br_ptr = [0]
    probs: list[float] = []
    dests: list[int] = []
    count = 0
    for s in range(n):
        act_ptr[s] = count
        for act in mdp.actions[s]:
            durs.append(act.duration)
            for p, dest in act.branches:
                probs.append(float(p))
                dests.append(dest)
            br_ptr.append(len(dests))
            count += 1
    act_ptr[n] = count
    return (
        mask,
        topo,
        act_ptr,
        array("q", durs),
        array("q", br_ptr),
        array("d", probs),
        array("q", dests),
    )


def layered_reach_curve(
    mdp: DigitalMdp,
    target: Union[str, Callable[[int], bool]],
    horizon: int,
    mode: str = "max",
    kernel=None,
) -> Sequence[float]:
    """curve[k] = optimal P(F<=k target) for k = 0..horizon, in float64."""
    if mode not in ("max", "min"):
        raise CheckerError(f"mode must be 'max' or 'min', got {mode!r}")
    test = compile_target(mdp, target) if isinstance(target, str) else target
    mask, topo, act_ptr, durs, br_ptr, probs, dests = _layered_arrays(mdp, test)
    run = kernel or layered_curve
    return run(
        mdp.state_count,
        mdp.initial,
        mask,
        topo,
        act_ptr,
        durs,
        br_ptr,
        probs,
        dests,
        horizon,
        mode == "max",
    )


# --- public checking API -----------------------------------------------------


def check_bounded_reachability(
    mdp: DigitalMdp,
    query: ReachabilityQuery,
    *,
    engine: str = "auto",
    cap: Optional[int] = None,
) -> ReachabilityResult:
    cap = horizon_cap() if cap is None else cap
    if query.bound > cap:
        raise HorizonError(f"bound {query.bound} exceeds horizon cap {cap}")
    if engine not in ("auto", "staircase", "layered"):
        raise CheckerError(f"unknown engine {engine!r}")

    if engine in ("auto", "staircase"):
        try:
            st = reach_staircase(mdp, query.target, query.mode)
            return ReachabilityResult(
                probability=staircase_value(st, query.bound),
                iterations=len(st),
                states_explored=mdp.state_count,
                mode=query.mode,
                engine="staircase",
            )
        except EngineUnsupported:
            if engine == "staircase":
                raise

    curve = layered_reach_curve(mdp, query.target, query.bound, query.mode)
    return ReachabilityResult(
        probability=curve[query.bound],
        iterations=query.bound + 1,
        states_explored=mdp.state_count,
        mode=query.mode,
        engine="layered",
    )


def min_max_gap(
    mdp: DigitalMdp, target: str, bound: int, *, engine: str = "auto"
) -> tuple[Number, Number]:
    """(min, max) over schedulers; equality certifies scheduler-independence."""
    lo = check_bounded_reachability(
        mdp, ReachabilityQuery(target, bound, "min"), engine=engine
    )
    hi = check_bounded_reachability(
        mdp, ReachabilityQuery(target, bound, "max"), engine=engine
    )
    return lo.probability, hi.probability


def density_sweep(
    mdp: DigitalMdp,
    target: str,
    grid: Sequence[int],
    mode: str = "max",
    *,
    engine: str = "auto",
    cap: Optional[int] = None,
) -> DensityResult:
    """Cumulative probabilities over a sorted grid plus first-difference bins."""
    if not grid:
        raise CheckerError("empty grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise CheckerError("grid must be strictly ascending")
    cap = horizon_cap() if cap is None else cap
    if grid[-1] > cap:
        raise HorizonError(f"grid end {grid[-1]} exceeds horizon cap {cap}")

    cumulative: list[Number]
    if engine in ("auto", "staircase"):
        try:
            st = reach_staircase(mdp, target, mode)
            cumulative = [staircase_value(st, t) for t in grid]
        except EngineUnsupported:
            if engine == "staircase":
                raise
            curve = layered_reach_curve(mdp, target, grid[-1], mode)
            cumulative = [curve[t] for t in grid]
    elif engine == "layered":
        curve = layered_reach_curve(mdp, target, grid[-1], mode)
        cumulative = [curve[t] for t in grid]
    else:
        raise CheckerError(f"unknown engine {engine!r}")

    bins = []
    prev_t, prev_c = -1, 0
    for t, c in zip(grid, cumulative):
        start = prev_t + 1
        bins.append(HistogramBin(start, t - start + 1, c - prev_c))
        prev_t, prev_c = t, c
    return DensityResult(tuple(zip(grid, cumulative)), tuple(bins))
