"""Shared builders and brute-force oracles used across the test suite."""

import itertools
import random
from fractions import Fraction
from pathlib import Path

from prtspace.distributions import DelayCdf, DelayPmf
from prtspace.model import (
    Branch,
    ClockConstraint,
    ParameterEvent,
    Prtesm,
    PrtesmTransition,
    PtaCommand,
    PtaModule,
    network_of,
    prtesm_to_pta,
)
from prtspace.spatial import (
    CollisionEvent,
    OccupancyEntry,
    SpatioTemporalSpec,
    box_intersection,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
MOVING_ROBOT_MODEL = REPO_ROOT / "models" / "moving_robot.prt"


def brute_force_convolve(pmfs):
    """Enumerate every outcome tuple; the convolution oracle."""
    out = {}
    for combo in itertools.product(*(p.masses for p in pmfs)):
        tick = sum(t for t, _ in combo)
        mass = Fraction(1)
        for _, p in combo:
            mass *= p
        out[tick] = out.get(tick, Fraction(0)) + mass
    return DelayPmf(sorted(out.items()))


def brute_force_collisions(a, b):
    """All-pairs spatial reference: no time index, no early exits."""
    events = []
    for ea in a.entries:
        for eb in b.entries:
            if ea.time_us != eb.time_us:
                continue
            overlap = box_intersection(ea.box, eb.box)
            if overlap is not None:
                events.append(
                    CollisionEvent(
                        ea.time_us,
                        ea.box,
                        eb.box,
                        overlap,
                        ea.probability * eb.probability,
                    )
                )
    events.sort(key=lambda e: e.time_us)
    return events


def random_spec(rng, name, cadence=5000, offset=0):
    entries = []
    t = offset
    for _ in range(rng.randint(0, 12)):
        for _ in range(rng.randint(0, 2)):
            x = rng.uniform(0, 30)
            y = rng.uniform(0, 10)
            entries.append(
                OccupancyEntry(
                    t,
                    (x, x + rng.uniform(0.5, 6), y, y + rng.uniform(0.5, 6)),
                    Fraction(rng.randint(1, 8), 8),
                )
            )
        t += cadence
    return SpatioTemporalSpec(name, tuple(entries))

CHAIN_NAMES = ("sensor_unit", "recognition_unit", "control_unit", "robot_operation")
CHAIN_PINS = ("sense_data", "recognize", "send_mode", "actuate")
CHAIN_COMPLETIONS = ("sensed", "person_detected", "set_yellow", "mode_applied")


def single_action_machine(name: str, pin: str) -> Prtesm:
    return Prtesm(
        name=name,
        states=("initial", "active"),
        transitions=(
            PrtesmTransition("initial", "active", ParameterEvent(f"start_{name}")),
            PrtesmTransition(
                "active", "active", ParameterEvent(pin), clock_resets=frozenset({"c"})
            ),
        ),
        clocks=frozenset({"c"}),
    )


def single_module_network(name: str, pin: str, dist: DelayCdf, **kwargs):
    module = prtesm_to_pta(
        single_action_machine(name, pin), [pin], {pin: dist}, **kwargs
    )
    return network_of([module])


def chain_network(dists, *, arming: str = "sync", completion: str = "exact"):
    """k delay stages in series; stage n+1 armed by stage n.

    ``arming="sync"`` shares the completion label with the next stage's arm
    command; ``arming="flag"`` guards each arm on the previous stage's flag.
    """
    modules = []
    for i, dist in enumerate(dists):
        name, pin = f"stage{i + 1}", f"act{i + 1}"
        machine = single_action_machine(name, pin)
        kwargs = {
            "completion_labels": {pin: f"done{i + 1}"},
            "completion": completion,
        }
        if i > 0:
            if arming == "sync":
                kwargs["arm_labels"] = {pin: f"done{i}"}
            else:
                kwargs["arm_flag_guards"] = {pin: f"flag_stage{i}"}
        modules.append(prtesm_to_pta(machine, [pin], {pin: dist}, **kwargs))
    return network_of(modules)


def chain_target(k: int) -> str:
    return " & ".join(f"flag_stage{i + 1}" for i in range(k))


RECONSTRUCTION_TARGET = (
    "flag_sensor_unit & flag_recognition_unit & flag_control_unit & "
    "flag_robot_operation"
)


def reaction_chain_network(completion: str = "exact"):
    """The shipped moving-robot reconstruction, elaborated from the model file."""
    from dataclasses import replace as dc_replace

    from prtspace.textio import document_to_network, parse_model

    doc = parse_model(MOVING_ROBOT_MODEL.read_text()).document
    if completion != "exact":
        doc.network = dc_replace(doc.network, profile=completion)
    network, _ = document_to_network(doc)
    return network


def random_network(seed: int):
    """Small random module network for checker-vs-enumeration comparisons.

    Each module is a forward progression 0 -> 1 -> ... -> goal so flags are
    usually reachable; scheduler gaps come from several commands being
    enabled at the same location with different timing guards, probabilistic
    branches from random splits, and cross-module coupling from shared sync
    labels and foreign-flag guards.
    """
    rng = random.Random(seed)
    n_modules = rng.choice((1, 2, 2))
    all_flags = [f"f{m}" for m in range(n_modules)]
    modules = []
    for m in range(n_modules):
        max_loc = rng.randint(2, 3)
        clock = f"k{m}"
        flag = all_flags[m]
        commands = []

        def random_branches(source):
            n_branches = rng.choice((1, 2, 2, 3))
            weights = [rng.randint(1, 4) for _ in range(n_branches)]
            total = sum(weights)
            branches = []
            remaining = Fraction(1)
            for j, w in enumerate(weights):
                prob = Fraction(w, total) if j < n_branches - 1 else remaining
                remaining -= prob
                # bias forward so the goal location is usually reachable
                if rng.random() < 0.75:
                    target_loc = min(source + rng.randint(1, 2), max_loc)
                else:
                    target_loc = rng.randint(0, max_loc)
                    if target_loc == source:
                        target_loc = min(source + 1, max_loc)
                resets = (clock,) if rng.random() < 0.35 else ()
                sets = (
                    ((flag, True),)
                    if target_loc == max_loc or rng.random() < 0.3
                    else ()
                )
                branches.append(Branch(prob, target_loc, resets, sets))
            return tuple(branches)

        for source in range(max_loc):
            # one to three competing commands per location: a scheduler choice
            for _ in range(rng.choice((1, 1, 2, 3))):
                constraints = []
                if rng.random() < 0.9:
                    low = rng.randint(1, 5)
                    constraints.append(ClockConstraint(clock, ">=", low))
                    if rng.random() < 0.4:
                        constraints.append(
                            ClockConstraint(clock, "<=", low + rng.randint(0, 4))
                        )
                flag_conditions = ()
                if n_modules == 2 and rng.random() < 0.2:
                    flag_conditions = ((all_flags[1 - m], True),)
                label = rng.choice([None, None, None, "a", "b"])
                commands.append(
                    PtaCommand(
                        sync_label=label,
                        source_loc=source,
                        clock_constraints=tuple(constraints),
                        flag_conditions=flag_conditions,
                        branches=random_branches(source),
                    )
                )
        modules.append(
            PtaModule(
                name=f"m{m}",
                location_var=f"s_m{m}",
                max_loc=max_loc,
                init_loc=0,
                clocks=(clock,),
                flags=(flag,),
                commands=tuple(commands),
            )
        )
    target = " & ".join(rng.sample(all_flags, rng.randint(1, n_modules)))
    bound = rng.randint(2, 10)
    return network_of(modules), target, bound
