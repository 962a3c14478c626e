"""Interface state machines and their timed-probabilistic automaton image.

A Prtesm describes the externally visible behaviour of one component:
states, triggered transitions, clock resets and optional delay-distribution
annotations.  `prtesm_to_pta` keeps only the communication actions and
expands each one into the pending / branch / completion structure of a
probabilistic timed automaton module; `saturate_clock_bound` gives the
integer ceiling that makes the digital-clocks semantics finite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .distributions import DelayCdf, cdf_to_pmf

INIT_LABEL = "i"


class Direction(enum.Enum):
    TO_BLOCK = "to_block"
    FROM_BLOCK = "from_block"


@dataclass(frozen=True)
class ParameterEvent:
    pin: str
    direction: Direction = Direction.FROM_BLOCK


@dataclass(frozen=True)
class PrtesmTransition:
    source: str
    target: str
    trigger: Optional[ParameterEvent] = None  # None marks an internal step
    clock_resets: frozenset[str] = frozenset()
    guard: Optional[tuple[str, int, int]] = None  # (clock, low, high)
    dist_name: Optional[str] = None


@dataclass(frozen=True)
class Prtesm:
    """State machine with one distinguished state named ``initial``."""

    name: str
    states: tuple[str, ...]
    transitions: tuple[PrtesmTransition, ...]
    clocks: frozenset[str] = frozenset()

    INITIAL = "initial"


@dataclass(frozen=True)
class ModelDiagnostic:
    severity: str  # "error" | "warning"
    message: str
    subject: str  # state or transition identity


def validate_prtesm(machine: Prtesm) -> list[ModelDiagnostic]:
    """Empty result iff the machine satisfies all structural invariants."""
    out: list[ModelDiagnostic] = []
    states = set(machine.states)
    if machine.states.count(Prtesm.INITIAL) != 1:
        out.append(
            ModelDiagnostic(
                "error",
                "exactly one state named 'initial' is required",
                machine.name,
            )
        )
    seen = set()
    for s in machine.states:
        if s in seen:
            out.append(ModelDiagnostic("error", f"duplicate state {s!r}", s))
        seen.add(s)

    adjacency: dict[str, set[str]] = {s: set() for s in states}
    for i, tr in enumerate(machine.transitions):
        ident = f"{machine.name}.transitions[{i}] {tr.source}->{tr.target}"
        for endpoint in (tr.source, tr.target):
            if endpoint not in states:
                out.append(
                    ModelDiagnostic("error", f"unknown state {endpoint!r}", ident)
                )
        for clock in tr.clock_resets:
            if clock not in machine.clocks:
                out.append(
                    ModelDiagnostic(
                        "error", f"reset of undeclared clock {clock!r}", ident
                    )
                )
        if tr.guard is not None and tr.guard[0] not in machine.clocks:
            out.append(
                ModelDiagnostic(
                    "error", f"guard on undeclared clock {tr.guard[0]!r}", ident
                )
            )
        if tr.source in adjacency and tr.target in adjacency:
            adjacency[tr.source].add(tr.target)

    if Prtesm.INITIAL in states:
        reachable = {Prtesm.INITIAL}
        frontier = [Prtesm.INITIAL]
        while frontier:
            for nxt in adjacency[frontier.pop()]:
                if nxt not in reachable:
                    reachable.add(nxt)
                    frontier.append(nxt)
        for s in machine.states:
            if s not in reachable:
                out.append(
                    ModelDiagnostic("error", f"state {s!r} unreachable from initial", s)
                )
    return out


# --- PTA structures ---------------------------------------------------------


@dataclass(frozen=True)
class ClockConstraint:
    clock: str
    op: str  # ">=" or "<="
    bound: int

    def __post_init__(self):
        if self.op not in (">=", "<="):
            raise ValueError(f"bad clock operator {self.op!r}")


@dataclass(frozen=True)
class Branch:
    probability: Fraction
    target_loc: int
    clock_resets: tuple[str, ...] = ()
    flag_sets: tuple[tuple[str, bool], ...] = ()


@dataclass(frozen=True)
class PtaCommand:
    """One guarded command: ``[label] guard -> p1:(update) + p2:(update)``."""

    sync_label: Optional[str]
    source_loc: int
    clock_constraints: tuple[ClockConstraint, ...] = ()
    flag_conditions: tuple[tuple[str, bool], ...] = ()  # may reference foreign flags
    branches: tuple[Branch, ...] = ()

    def __post_init__(self):
        total = sum((b.probability for b in self.branches), Fraction(0))
        if total != 1:
            raise ValueError(f"branch probabilities sum to {total}, expected 1")
        for b in self.branches:
            if not 0 < b.probability <= 1:
                raise ValueError(f"branch probability {b.probability} outside (0, 1]")


@dataclass(frozen=True)
class PtaModule:
    name: str
    location_var: str
    max_loc: int
    init_loc: int
    clocks: tuple[str, ...]
    flags: tuple[str, ...]
    commands: tuple[PtaCommand, ...]
    location_names: tuple[str, ...] = ()

    def __post_init__(self):
        for cmd in self.commands:
            locs = [cmd.source_loc] + [b.target_loc for b in cmd.branches]
            for loc in locs:
                if not 0 <= loc <= self.max_loc:
                    raise ValueError(
                        f"location {loc} outside 0..{self.max_loc} in {self.name}"
                    )
            for cc in cmd.clock_constraints:
                if cc.clock not in self.clocks:
                    raise ValueError(f"guard on undeclared clock {cc.clock!r}")
            for b in cmd.branches:
                for clock in b.clock_resets:
                    if clock not in self.clocks:
                        raise ValueError(f"reset of undeclared clock {clock!r}")


@dataclass(frozen=True)
class PtaNetwork:
    modules: tuple[PtaModule, ...]
    sync_alphabet: frozenset[str] = frozenset()
    constants: tuple[tuple[str, object], ...] = ()  # exporter naming table

    def __post_init__(self):
        labels = {
            cmd.sync_label
            for mod in self.modules
            for cmd in mod.commands
            if cmd.sync_label is not None
        }
        missing = labels - set(self.sync_alphabet)
        if missing:
            raise ValueError(f"sync labels {sorted(missing)} missing from alphabet")

    def module(self, name: str) -> PtaModule:
        for mod in self.modules:
            if mod.name == name:
                return mod
        raise KeyError(name)


def network_of(modules: Sequence[PtaModule]) -> PtaNetwork:
    """Wrap modules in a network whose alphabet is every label they declare."""
    labels = frozenset(
        cmd.sync_label
        for mod in modules
        for cmd in mod.commands
        if cmd.sync_label is not None
    )
    return PtaNetwork(tuple(modules), labels)


class TransformError(ValueError):
    """Raised when a PRTESM cannot be compiled to a PTA module."""


def prtesm_to_pta(
    machine: Prtesm,
    comm_actions: Sequence[str],
    dists: Mapping[str, DelayCdf],
    *,
    arm_labels: Optional[Mapping[str, str]] = None,
    completion_labels: Optional[Mapping[str, str]] = None,
    arm_flag_guards: Optional[Mapping[str, str]] = None,
    completion: str = "exact",
    module_name: Optional[str] = None,
) -> PtaModule:
    """Compile the communication actions of a machine into a PTA module.

    Only self-transitions triggered by a communication action survive; all
    other behaviour is erased.  Each group of comm actions sharing (source,
    target, distribution) becomes one expansion: an arming command per pin
    (synchronised on ``arm_labels[pin]``, default the pin name) that resets
    the module clock and enters a pending location, an unsynchronised
    probabilistic branch over the distribution's masses, and per-branch
    completion commands (synchronised on ``completion_labels[pin]``, default
    ``<pin>_done``) that raise the module flag in a terminal location.

    ``completion`` selects the guard profile of the completion commands:

    * ``"exact"`` (default): branch ``i`` fires exactly at its knot tick
      (guard ``c >= t_i & c <= t_i``), so bounded reachability reproduces the
      accumulative table values at every knot.
    * ``"window"``: branch ``i`` may fire anywhere in ``[t_{i-1}, t_i]``,
      the literal published guard shape; under eager scheduling completions
      then happen at the window start.
    """
    if completion not in ("exact", "window"):
        raise TransformError(f"unknown completion profile {completion!r}")
    arm_labels = dict(arm_labels or {})
    completion_labels = dict(completion_labels or {})
    arm_flag_guards = dict(arm_flag_guards or {})

    diag = [d for d in validate_prtesm(machine) if d.severity == "error"]
    if diag:
        raise TransformError(f"invalid machine {machine.name}: {diag[0].message}")

    by_pin: dict[str, PrtesmTransition] = {}
    for tr in machine.transitions:
        if tr.trigger is not None:
            by_pin.setdefault(tr.trigger.pin, tr)
    for pin in comm_actions:
        if pin not in by_pin:
            raise TransformError(f"comm action {pin!r} triggers no transition")
        if pin not in dists:
            raise TransformError(f"no delay distribution for comm action {pin!r}")

    comm_trs = [(pin, by_pin[pin]) for pin in comm_actions]
    sources = {tr.source for _, tr in comm_trs}
    if len(sources) != 1:
        raise TransformError(
            f"comm actions of {machine.name} start from several states: "
            f"{sorted(sources)}"
        )

    name = module_name or machine.name
    clock = f"c_{name}"
    flag = f"flag_{name}"

    # Dense locations: 0 initial, 1 armed, then per expansion group a pending
    # location, one location per branch, and a shared terminal location last.
    groups: list[tuple[tuple[str, str, DelayCdf], list[str]]] = []
    group_index: dict[tuple[str, str, DelayCdf], int] = {}
    for pin, tr in comm_trs:
        key = (tr.source, tr.target, dists[pin])
        if key not in group_index:
            group_index[key] = len(groups)
            groups.append((key, []))
        groups[group_index[key]][1].append(pin)

    loc_names = ["initial", "armed"]
    group_layout = []  # (pending_loc, branch_locs, pins)
    for key, pins in groups:
        pmf = cdf_to_pmf(dists[pins[0]])
        pending = len(loc_names)
        loc_names.append(f"pending_{pins[0]}")
        branch_locs = []
        for i in range(len(pmf.masses)):
            branch_locs.append(len(loc_names))
            loc_names.append(f"wait_{pins[0]}_{i + 1}")
        group_layout.append((pending, branch_locs, pins, pmf))
    terminal = len(loc_names)
    loc_names.append("done")

    commands: list[PtaCommand] = [
        PtaCommand(
            sync_label=INIT_LABEL,
            source_loc=0,
            branches=(Branch(Fraction(1), 1),),
        )
    ]
    for pending, branch_locs, pins, pmf in group_layout:
        for pin in pins:
            flag_conds = ()
            if pin in arm_flag_guards:
                flag_conds = ((arm_flag_guards[pin], True),)
            commands.append(
                PtaCommand(
                    sync_label=arm_labels.get(pin, pin),
                    source_loc=1,
                    flag_conditions=flag_conds,
                    branches=(Branch(Fraction(1), pending, clock_resets=(clock,)),),
                )
            )
        commands.append(
            PtaCommand(
                sync_label=None,
                source_loc=pending,
                branches=tuple(
                    Branch(p, loc) for (t, p), loc in zip(pmf.masses, branch_locs)
                ),
            )
        )
        prev_tick = 0
        for (tick, _), loc in zip(pmf.masses, branch_locs):
            low = tick if completion == "exact" else prev_tick
            guards = (
                ClockConstraint(clock, ">=", low),
                ClockConstraint(clock, "<=", tick),
            )
            for pin in pins:
                commands.append(
                    PtaCommand(
                        sync_label=completion_labels.get(pin, f"{pin}_done"),
                        source_loc=loc,
                        clock_constraints=guards,
                        branches=(
                            Branch(Fraction(1), terminal, flag_sets=((flag, True),)),
                        ),
                    )
                )
            prev_tick = tick
    # Published terminal self-loop; a no-op once the flag is already raised.
    commands.append(
        PtaCommand(
            sync_label=None,
            source_loc=terminal,
            branches=(Branch(Fraction(1), terminal, flag_sets=((flag, True),)),),
        )
    )

    return PtaModule(
        name=name,
        location_var=f"s_{name}",
        max_loc=terminal,
        init_loc=0,
        clocks=(clock,),
        flags=(flag,),
        commands=tuple(commands),
        location_names=tuple(loc_names),
    )


def saturate_clock_bound(network: PtaNetwork) -> dict[str, int]:
    """Per clock, 1 + the largest constant it is compared against (1 if none)."""
    bounds: dict[str, int] = {}
    for mod in network.modules:
        for clock in mod.clocks:
            bounds.setdefault(clock, 1)
        for cmd in mod.commands:
            for cc in cmd.clock_constraints:
                bounds[cc.clock] = max(bounds.get(cc.clock, 1), cc.bound + 1)
    return bounds
