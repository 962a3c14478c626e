"""Parallel composition of PTA modules into a finite Markov decision process.

Digital-clocks semantics: states carry integer clock valuations that advance
together and saturate at one past the largest constant each clock is compared
against.  Commands are instantaneous; modules sharing a synchronisation label
fire jointly.  Under the default urgent semantics time may only pass while no
(state-changing) command is enabled, which makes the generated models' timing
deterministic; ``urgent=False`` gives the free-scheduler semantics instead.

With ``reduce=True`` runs of idle ticks are collapsed into a single duration-n
edge by computing, from each quiescent state, the next instant at which any
command can become enabled.  The reduced process is equivalent for bounded
reachability of clock-free targets because locations and flags are constant
along the collapsed run.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional

from .model import PtaNetwork, saturate_clock_bound

State = tuple[tuple[int, ...], tuple[int, ...], tuple[bool, ...]]

TICK = "tick"


class CompositionError(ValueError):
    pass


@dataclass(frozen=True)
class Action:
    """One resolvable choice: a command (duration 0) or a time advance."""

    label: Optional[str]
    duration: int
    branches: tuple[tuple[Fraction, int], ...]  # (probability, successor index)


@dataclass
class DigitalMdp:
    states: list[State]
    actions: list[list[Action]]
    initial: int
    module_names: tuple[str, ...]
    loc_vars: tuple[str, ...]
    clock_names: tuple[str, ...]
    flag_vars: tuple[str, ...]
    location_names: tuple[tuple[str, ...], ...]
    clock_bounds: tuple[int, ...]
    urgent: bool
    reduced: bool

    @property
    def state_count(self) -> int:
        return len(self.states)

    def deadlocks(self) -> list[int]:
        """States with no moves at all (absorbing non-target candidates)."""
        return [i for i, acts in enumerate(self.actions) if not acts]

    def zero_topo_order(self) -> list[int]:
        """States ordered so duration-0 successors precede their sources."""
        order: list[int] = []
        seen = [0] * len(self.states)  # 0 unvisited, 1 on stack, 2 done
        for root in range(len(self.states)):
            if seen[root]:
                continue
            stack = [(root, iter(self._zero_successors(root)))]
            seen[root] = 1
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if seen[nxt] == 0:
                        seen[nxt] = 1
                        stack.append((nxt, iter(self._zero_successors(nxt))))
                        advanced = True
                        break
                    if seen[nxt] == 1:
                        raise CompositionError(
                            "zero-duration action cycle through state "
                            f"{self.describe(nxt)}"
                        )
                if not advanced:
                    stack.pop()
                    seen[node] = 2
                    order.append(node)
        return order

    def _zero_successors(self, idx: int):
        # a branch back to the identical state is itself a zero cycle
        for act in self.actions[idx]:
            if act.duration == 0:
                for _, dest in act.branches:
                    yield dest

    def describe(self, idx: int) -> str:
        locs, clocks, flags = self.states[idx]
        parts = [f"{v}={self.location_names[m][locs[m]] if self.location_names[m] else locs[m]}"
                 for m, v in enumerate(self.loc_vars)]
        parts += [f"{c}={clocks[j]}" for j, c in enumerate(self.clock_names)]
        parts += [f"{f}={str(flags[j]).lower()}" for j, f in enumerate(self.flag_vars)]
        return "(" + ", ".join(parts) + ")"

    def dump(self) -> str:
        lines = [f"digital mdp: {len(self.states)} states, initial {self.initial}"]
        for i, acts in enumerate(self.actions):
            lines.append(f"state {i} {self.describe(i)}")
            for act in acts:
                label = act.label or ""
                branches = " + ".join(f"{p}:{d}" for p, d in act.branches)
                lines.append(f"  [{label}] +{act.duration} -> {branches}")
        return "\n".join(lines)


@dataclass(frozen=True)
class _Command:
    module: int
    label: Optional[str]
    source_loc: int
    clock_guards: tuple[tuple[int, str, int], ...]  # (clock index, op, bound)
    flag_guards: tuple[tuple[int, bool], ...]
    branches: tuple[tuple[Fraction, int, tuple[int, ...], tuple[tuple[int, bool], ...]], ...]


def _compile(network: PtaNetwork):
    clock_index: dict[str, int] = {}
    flag_index: dict[str, int] = {}
    for mod in network.modules:
        for c in mod.clocks:
            if c in clock_index:
                raise CompositionError(f"clock name {c!r} used by several modules")
            clock_index[c] = len(clock_index)
        for f in mod.flags:
            if f in flag_index:
                raise CompositionError(f"flag name {f!r} used by several modules")
            flag_index[f] = len(flag_index)

    commands: list[_Command] = []
    for m, mod in enumerate(network.modules):
        for cmd in mod.commands:
            for name, _ in cmd.flag_conditions:
                if name not in flag_index:
                    raise CompositionError(f"guard on unknown flag {name!r}")
            branches = []
            for b in cmd.branches:
                branches.append(
                    (
                        b.probability,
                        b.target_loc,
                        tuple(clock_index[c] for c in b.clock_resets),
                        tuple((flag_index[n], v) for n, v in b.flag_sets),
                    )
                )
            commands.append(
                _Command(
                    module=m,
                    label=cmd.sync_label,
                    source_loc=cmd.source_loc,
                    clock_guards=tuple(
                        (clock_index[cc.clock], cc.op, cc.bound)
                        for cc in cmd.clock_constraints
                    ),
                    flag_guards=tuple(
                        (flag_index[n], v) for n, v in cmd.flag_conditions
                    ),
                    branches=tuple(branches),
                )
            )
    return commands, clock_index, flag_index


def compose(
    network: PtaNetwork,
    *,
    urgent: bool = True,
    reduce: bool = True,
    max_states: int = 2_000_000,
) -> DigitalMdp:
    """Explore the reachable digital-clocks MDP of a module network."""
    if not urgent and reduce:
        raise CompositionError("idle-run reduction requires urgent semantics")

    commands, clock_index, flag_index = _compile(network)
    bounds_by_name = saturate_clock_bound(network)
    bounds = tuple(bounds_by_name[c] for c in clock_index)

    label_parties: dict[str, list[int]] = {}
    for cmd in commands:
        if cmd.label is not None:
            parties = label_parties.setdefault(cmd.label, [])
            if cmd.module not in parties:
                parties.append(cmd.module)

    by_module_loc: dict[tuple[int, int], list[_Command]] = {}
    for cmd in commands:
        by_module_loc.setdefault((cmd.module, cmd.source_loc), []).append(cmd)

    init: State = (
        tuple(mod.init_loc for mod in network.modules),
        tuple(0 for _ in clock_index),
        tuple(False for _ in flag_index),
    )

    def guards_hold(cmd: _Command, state: State) -> bool:
        _, clocks, flags = state
        for fi, val in cmd.flag_guards:
            if flags[fi] != val:
                return False
        for ci, op, bound in cmd.clock_guards:
            v = clocks[ci]
            if op == ">=" and v < bound:
                return False
            if op == "<=" and v > bound:
                return False
        return True

    def loc_flag_hold(cmd: _Command, state: State) -> bool:
        if state[0][cmd.module] != cmd.source_loc:
            return False
        return all(state[2][fi] == val for fi, val in cmd.flag_guards)

    def apply_branchset(state: State, parts) -> State:
        locs = list(state[0])
        clocks = list(state[1])
        flags = list(state[2])
        for module, (prob, target, resets, sets) in parts:
            locs[module] = target
            for ci in resets:
                clocks[ci] = 0
            for fi, val in sets:
                flags[fi] = val
        return (tuple(locs), tuple(clocks), tuple(flags))

    def enabled_actions(state: State):
        """State-changing actions, each a list of (prob, successor-state)."""
        locs = state[0]
        local = [
            cmd
            for m in range(len(network.modules))
            for cmd in by_module_loc.get((m, locs[m]), ())
            if guards_hold(cmd, state)
        ]
        out = []
        for cmd in (c for c in local if c.label is None):
            branches = [
                (b[0], apply_branchset(state, [(cmd.module, b)]))
                for b in cmd.branches
            ]
            if any(s != state for _, s in branches):
                out.append((None, branches))
        by_label: dict[str, dict[int, list[_Command]]] = {}
        for cmd in (c for c in local if c.label is not None):
            by_label.setdefault(cmd.label, {}).setdefault(cmd.module, []).append(cmd)
        for label in sorted(by_label):
            per_module = by_label[label]
            parties = label_parties[label]
            if any(m not in per_module for m in parties):
                continue
            choice_lists = [per_module[m] for m in sorted(per_module)]
            for combo in product(*choice_lists):
                branch_sets = []
                for pick in product(*(c.branches for c in combo)):
                    prob = Fraction(1)
                    parts = []
                    for cmd, br in zip(combo, pick):
                        prob *= br[0]
                        parts.append((cmd.module, br))
                    branch_sets.append((prob, apply_branchset(state, parts)))
                if any(s != state for _, s in branch_sets):
                    out.append((label, branch_sets))
        return out

    def future_effect(cmd: _Command, state: State) -> bool:
        """Would firing after >= 1 tick change the state?  (Resets always do.)"""
        flags = state[2]
        return any(
            target != cmd.source_loc
            or resets
            or any(flags[fi] != val for fi, val in sets)
            for _, target, resets, sets in cmd.branches
        )

    def next_enabling_delta(state: State) -> Optional[int]:
        """Smallest d >= 1 after which some state-changing action is enabled."""
        locs = state[0]
        clocks = state[1]
        candidates: list[int] = []

        def window(cmd: _Command) -> Optional[tuple[int, float]]:
            lo, hi = 0, float("inf")
            for ci, op, bound in cmd.clock_guards:
                v = clocks[ci]
                if op == ">=":
                    if v < bound:
                        lo = max(lo, bound - v)
                else:
                    if v > bound:
                        return None
                    hi = min(hi, bound - v)
            return (lo, hi) if lo <= hi else None

        live = [
            cmd
            for m in range(len(network.modules))
            for cmd in by_module_loc.get((m, locs[m]), ())
            if loc_flag_hold(cmd, state) and future_effect(cmd, state)
        ]
        for cmd in (c for c in live if c.label is None):
            w = window(cmd)
            if w and w[1] >= 1:
                candidates.append(max(1, w[0]))
        by_label: dict[str, dict[int, list[_Command]]] = {}
        for cmd in (c for c in live if c.label is not None):
            by_label.setdefault(cmd.label, {}).setdefault(cmd.module, []).append(cmd)
        for label, per_module in by_label.items():
            if any(m not in per_module for m in label_parties[label]):
                continue
            for combo in product(*(per_module[m] for m in sorted(per_module))):
                lo, hi = 0, float("inf")
                for cmd in combo:
                    w = window(cmd)
                    if w is None:
                        lo, hi = 1, 0
                        break
                    lo, hi = max(lo, w[0]), min(hi, w[1])
                if lo <= hi and hi >= 1:
                    candidates.append(max(1, lo))
        return min(candidates) if candidates else None

    def advance(state: State, delta: int) -> State:
        clocks = tuple(min(v + delta, bounds[ci]) for ci, v in enumerate(state[1]))
        return (state[0], clocks, state[2])

    states: list[State] = [init]
    index: dict[State, int] = {init: 0}
    actions: list[list[Action]] = []

    def intern(s: State) -> int:
        i = index.get(s)
        if i is None:
            if len(states) >= max_states:
                raise CompositionError(f"state space exceeds {max_states} states")
            i = len(states)
            index[s] = i
            states.append(s)
        return i

    frontier = 0
    while frontier < len(states):
        state = states[frontier]
        acts: list[Action] = []
        cmd_actions = enabled_actions(state)
        for label, branches in cmd_actions:
            acts.append(
                Action(
                    label=label,
                    duration=0,
                    branches=tuple((p, intern(s)) for p, s in branches),
                )
            )
        may_tick = not urgent or not cmd_actions
        if may_tick:
            if reduce:
                delta = next_enabling_delta(state)
            else:
                nxt = advance(state, 1)
                delta = None if nxt == state else 1
            if delta is not None:
                dest = advance(state, delta)
                if dest != state:
                    acts.append(
                        Action(TICK, delta, ((Fraction(1), intern(dest)),))
                    )
        actions.append(acts)
        frontier += 1

    mdp = DigitalMdp(
        states=states,
        actions=actions,
        initial=0,
        module_names=tuple(m.name for m in network.modules),
        loc_vars=tuple(m.location_var for m in network.modules),
        clock_names=tuple(clock_index),
        flag_vars=tuple(flag_index),
        location_names=tuple(m.location_names for m in network.modules),
        clock_bounds=bounds,
        urgent=urgent,
        reduced=reduce,
    )
    mdp.zero_topo_order()  # rejects zero-duration action cycles eagerly
    return mdp
