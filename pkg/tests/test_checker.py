"""Bounded reachability: engines, modes, densities, gaps, and oracles."""

from fractions import Fraction

import pytest

from prtspace.checker import (
    CheckerError,
    EngineUnsupported,
    HorizonError,
    ReachabilityQuery,
    check_bounded_reachability,
    compile_target,
    density_sweep,
    layered_reach_curve,
    min_max_gap,
    reach_staircase,
    staircase_value,
)
from prtspace.composer import compose
from prtspace.distributions import (
    COMMUNICATION_TIME,
    REACTION_CHAIN,
    DelayCdf,
    cdf_to_pmf,
    convolve_many,
    prob_at_most,
)
from prtspace.model import Branch, ClockConstraint, PtaCommand, PtaModule, network_of
from .helpers import chain_network, chain_target, single_module_network
from .oracle import enumerate_reachability

F = Fraction


def delayed_flag_module(name, branch_delays, probabilities):
    """Location 0 branches probabilistically; branch i raises the flag after
    branch_delays[i] ticks."""
    clock = f"c_{name}"
    flag = f"flag_{name}"
    commands = [
        PtaCommand(
            None,
            0,
            branches=tuple(
                Branch(p, i + 1) for i, p in enumerate(probabilities)
            ),
        )
    ]
    for i, delay in enumerate(branch_delays):
        commands.append(
            PtaCommand(
                None,
                i + 1,
                clock_constraints=(ClockConstraint(clock, ">=", delay),),
                branches=(
                    Branch(F(1), len(branch_delays) + 1, flag_sets=((flag, True),)),
                ),
            )
        )
    return PtaModule(
        name=name,
        location_var=f"s_{name}",
        max_loc=len(branch_delays) + 1,
        init_loc=0,
        clocks=(clock,),
        flags=(flag,),
        commands=tuple(commands),
    )


class TestSingleModuleSoundness:
    @pytest.mark.parametrize(
        "dist", REACTION_CHAIN, ids=["fetch", "recognition", "communication", "actuation"]
    )
    def test_staircase_equals_table(self, dist):
        net = single_module_network("m", "act", dist)
        mdp = compose(net)
        staircase = reach_staircase(mdp, "flag_m", "max")
        assert staircase == dist.points

    def test_knot_818(self):
        net = single_module_network("m", "act", COMMUNICATION_TIME)
        mdp = compose(net)
        result = check_bounded_reachability(
            mdp, ReachabilityQuery("flag_m", 160, "max")
        )
        assert result.probability == F("0.98")

    def test_beyond_support_is_one(self):
        net = single_module_network("m", "act", COMMUNICATION_TIME)
        mdp = compose(net)
        for bound in (200, 201, 4000):
            result = check_bounded_reachability(
                mdp, ReachabilityQuery("flag_m", bound, "max")
            )
            assert result.probability == 1

    def test_bound_zero(self):
        net = single_module_network("m", "act", COMMUNICATION_TIME)
        mdp = compose(net)
        assert (
            check_bounded_reachability(mdp, ReachabilityQuery("flag_m", 0)).probability
            == 0
        )

    def test_max_equals_prob_at_most_everywhere(self):
        pmf = cdf_to_pmf(COMMUNICATION_TIME)
        net = single_module_network("m", "act", COMMUNICATION_TIME)
        mdp = compose(net)
        st = reach_staircase(mdp, "flag_m", "max")
        for t in range(0, 205, 7):
            assert staircase_value(st, t) == prob_at_most(pmf, t)


class TestHandBuiltMdp:
    def test_probabilistic_branch_with_unit_delays(self):
        module = delayed_flag_module("m", [1, 2], [F("0.3"), F("0.7")])
        net = network_of([module])
        mdp = compose(net)
        values = {
            bound: check_bounded_reachability(
                mdp, ReachabilityQuery("flag_m", bound, "max")
            ).probability
            for bound in (0, 1, 2)
        }
        assert values == {0: 0, 1: F("0.3"), 2: 1}
        for bound in (0, 1, 2):
            assert float(values[bound]) == pytest.approx(
                enumerate_reachability(net, "flag_m", bound, "max"), abs=1e-12
            )


class TestMinMaxGap:
    def test_deterministic_chain_no_gap(self):
        net = single_module_network("m", "act", DelayCdf([(4, 1)]))
        mdp = compose(net)
        lo, hi = min_max_gap(mdp, "flag_m", 10)
        assert lo == hi == 1

    def test_choice_between_delays(self):
        clock, flag = "c_m", "flag_m"
        module = PtaModule(
            name="m",
            location_var="s_m",
            max_loc=3,
            init_loc=0,
            clocks=(clock,),
            flags=(flag,),
            commands=(
                PtaCommand(None, 0, branches=(Branch(F(1), 1),)),
                PtaCommand(None, 0, branches=(Branch(F(1), 2),)),
                PtaCommand(
                    None,
                    1,
                    clock_constraints=(ClockConstraint(clock, ">=", 1),),
                    branches=(Branch(F(1), 3, flag_sets=((flag, True),)),),
                ),
                PtaCommand(
                    None,
                    2,
                    clock_constraints=(ClockConstraint(clock, ">=", 3),),
                    branches=(Branch(F(1), 3, flag_sets=((flag, True),)),),
                ),
            ),
        )
        mdp = compose(network_of([module]))
        assert min_max_gap(mdp, "flag_m", 2) == (0, 1)

    def test_comm_module_fully_finished(self):
        net = single_module_network("m", "act", COMMUNICATION_TIME)
        mdp = compose(net)
        assert min_max_gap(mdp, "flag_m", 200) == (1, 1)

    def test_mode_ordering(self):
        net = chain_network(REACTION_CHAIN[:2])
        mdp = compose(net)
        lo, hi = min_max_gap(mdp, chain_target(2), 4150)
        assert lo <= hi


class TestSeriesComposition:
    @pytest.mark.parametrize("k", [2, 3, 4])
    @pytest.mark.parametrize("arming", ["sync", "flag"])
    def test_chain_equals_convolution(self, k, arming):
        dists = REACTION_CHAIN[:k]
        net = chain_network(dists, arming=arming)
        mdp = compose(net)
        st = reach_staircase(mdp, chain_target(k), "max")
        conv = convolve_many([cdf_to_pmf(d) for d in dists])
        expected = []
        acc = F(0)
        for t, p in conv.masses:
            acc += p
            expected.append((t, acc))
        assert list(st) == expected


class TestDensitySweep:
    def test_comm_knot_grid(self):
        net = single_module_network("m", "act", COMMUNICATION_TIME)
        mdp = compose(net)
        result = density_sweep(mdp, "flag_m", [150, 160, 165, 169, 200])
        masses = [b.mass for b in result.density]
        assert masses == [
            F("0.8"),
            F("0.18"),
            F("0.015"),
            F("0.0049999995"),
            F("0.0000000005"),
        ]

    def test_point_mass_single_bin(self):
        net = single_module_network("m", "act", DelayCdf([(7, 1)]))
        mdp = compose(net)
        result = density_sweep(mdp, "flag_m", [5, 10, 15])
        masses = [b.mass for b in result.density]
        assert masses == [0, 1, 0]

    def test_unsorted_grid_rejected(self):
        net = single_module_network("m", "act", DelayCdf([(7, 1)]))
        mdp = compose(net)
        with pytest.raises(CheckerError, match="ascending"):
            density_sweep(mdp, "flag_m", [10, 5])

    def test_cumulative_monotone_nonnegative_bins(self):
        net = chain_network(REACTION_CHAIN[:2])
        mdp = compose(net)
        result = density_sweep(mdp, chain_target(2), list(range(200, 4401, 200)))
        assert all(b.mass >= 0 for b in result.density)
        cums = [c for _, c in result.grid]
        assert all(a <= b for a, b in zip(cums, cums[1:]))
        assert sum(b.mass for b in result.density) == cums[-1]

    def test_layered_engine_agrees(self):
        net = single_module_network("m", "act", COMMUNICATION_TIME)
        mdp = compose(net)
        grid = [150, 160, 165, 169, 200]
        exact = density_sweep(mdp, "flag_m", grid, engine="staircase")
        layered = density_sweep(mdp, "flag_m", grid, engine="layered")
        for (_, a), (_, b) in zip(exact.grid, layered.grid):
            assert b == pytest.approx(float(a), abs=1e-14)


class TestEngines:
    def test_layered_matches_staircase(self):
        net = single_module_network("m", "act", COMMUNICATION_TIME)
        mdp = compose(net)
        curve = layered_reach_curve(mdp, "flag_m", 200, "max")
        st = reach_staircase(mdp, "flag_m", "max")
        for t in range(201):
            assert curve[t] == pytest.approx(float(staircase_value(st, t)), abs=1e-14)

    def test_staircase_raises_on_cycles(self):
        clock, flag = "c_m", "flag_m"
        module = PtaModule(
            name="m",
            location_var="s_m",
            max_loc=1,
            init_loc=0,
            clocks=(clock,),
            flags=(flag,),
            commands=(
                PtaCommand(
                    None,
                    0,
                    clock_constraints=(ClockConstraint(clock, ">=", 1),),
                    branches=(
                        Branch(F(1, 2), 0, clock_resets=(clock,)),
                        Branch(F(1, 2), 1, flag_sets=((flag, True),)),
                    ),
                ),
            ),
        )
        mdp = compose(network_of([module]))
        with pytest.raises(EngineUnsupported):
            reach_staircase(mdp, "flag_m", "max")
        # auto falls back to the layered engine
        result = check_bounded_reachability(mdp, ReachabilityQuery("flag_m", 4, "max"))
        assert result.engine == "layered"
        assert result.probability == pytest.approx(
            enumerate_reachability(network_of([module]), "flag_m", 4, "max"),
            abs=1e-12,
        )

    def test_monotone_in_bound(self):
        net = chain_network(REACTION_CHAIN[:2])
        mdp = compose(net)
        st = reach_staircase(mdp, chain_target(2), "max")
        values = [staircase_value(st, t) for t in range(0, 4400, 50)]
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestPathProbabilities:
    def test_single_module_flag_times_match_pmf_by_enumeration(self):
        # every path reaching the flag does so at a support tick, with path
        # probability equal to that tick's mass: enumerating the raw
        # semantics at each knot reproduces the cumulative exactly
        dist = COMMUNICATION_TIME
        net = single_module_network("m", "act", dist)
        pmf = cdf_to_pmf(dist)
        acc = 0.0
        previous = -1
        for tick, mass in pmf.masses:
            below = enumerate_reachability(net, "flag_m", tick - 1, "max")
            at = enumerate_reachability(net, "flag_m", tick, "max")
            assert below == pytest.approx(acc, abs=1e-12)
            acc += float(mass)
            assert at == pytest.approx(acc, abs=1e-12)
            assert tick > previous
            previous = tick


class TestRandomizedOracle:
    def test_extended_seeds_both_modes(self):
        from prtspace.composer import CompositionError
        from .helpers import random_network

        compared = 0
        seed = 5000
        while compared < 60 and seed < 8000:
            seed += 1
            network, target, bound = random_network(seed)
            try:
                mdp = compose(network, reduce=False)
            except CompositionError:
                continue
            if mdp.state_count * (bound + 1) > 100_000:
                continue
            for mode in ("max", "min"):
                expected = enumerate_reachability(network, target, bound, mode)
                got = layered_reach_curve(mdp, target, bound, mode)[bound]
                assert abs(got - expected) <= 1e-10, (seed, mode)
            compared += 1
        assert compared == 60


class TestPaperNetworkShape:
    def test_control_unit_parallel_robot_operation(self):
        # the two published machines, communication completion arming the
        # actuator: finite MDP, both flags jointly reachable
        from prtspace.distributions import ROBOT_ACTUATION_TIME
        from prtspace.model import network_of, prtesm_to_pta
        from .helpers import single_action_machine
        from .test_model import control_unit_machine

        pins = ["set_normal", "set_yellow", "set_red", "sense_person"]
        control = prtesm_to_pta(
            control_unit_machine(),
            pins,
            {p: COMMUNICATION_TIME for p in pins},
            completion_labels={p: "y" for p in pins},
        )
        robot = prtesm_to_pta(
            single_action_machine("robot_operation", "actuate"),
            ["actuate"],
            {"actuate": ROBOT_ACTUATION_TIME},
            arm_labels={"actuate": "y"},
        )
        mdp = compose(network_of([control, robot]))
        st = reach_staircase(mdp, "flag_control_unit & flag_robot_operation", "max")
        assert st  # jointly reachable
        assert staircase_value(st, 1900) == 1
        conv = convolve_many(
            [cdf_to_pmf(COMMUNICATION_TIME), cdf_to_pmf(ROBOT_ACTUATION_TIME)]
        )
        assert staircase_value(st, 1740) == prob_at_most(conv, 1740)


class TestValidationErrors:
    def test_unknown_flag(self):
        net = single_module_network("m", "act", DelayCdf([(7, 1)]))
        mdp = compose(net)
        with pytest.raises(CheckerError, match="ghost"):
            compile_target(mdp, "ghost")

    def test_location_comparison(self):
        net = single_module_network("m", "act", DelayCdf([(7, 1)]))
        mdp = compose(net)
        test = compile_target(mdp, "s_m = 0 | flag_m")
        assert test(mdp.initial)

    def test_horizon_cap(self):
        net = single_module_network("m", "act", DelayCdf([(7, 1)]))
        mdp = compose(net)
        with pytest.raises(HorizonError):
            check_bounded_reachability(
                mdp, ReachabilityQuery("flag_m", 1000), cap=100
            )

    def test_bad_mode(self):
        with pytest.raises(CheckerError):
            ReachabilityQuery("flag_m", 1, "median")

    def test_negative_bound(self):
        with pytest.raises(CheckerError):
            ReachabilityQuery("flag_m", -1)
