"""Model text format: parsing, diagnostics, printing, and round trips."""

import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from prtspace.textio import (
    HEADER,
    format_prob,
    parse_model,
    print_model,
)
from .helpers import MOVING_ROBOT_MODEL

TWO_MACHINE_DOC = """prtspace model v1

distribution sensor_fetch_time {
  150: 0.10
  170: 0.40
  180: 0.85
  190: 0.99998
  200: 1
}

distribution recognition_time {
  2500: 0.10
  2600: 0.30
  2700: 0.60
  2800: 0.90
  2850: 0.99
  2900: 1
}

distribution communication_time {
  150: 0.80
  160: 0.98
  165: 0.995
  169: 0.9999999995
  200: 1
}

distribution robot_actuation_time {
  1500: 0.05
  1590: 0.90
  1600: 0.95
  1650: 0.999995
  1700: 1
}

prtesm control_unit {
  clocks c
  states initial active
  transition initial -> active on start_control
  transition active -> active on send_mode dist communication_time resets c
}

prtesm robot_operation {
  clocks c
  states initial active
  transition initial -> active on start_robot
  transition active -> active on actuate in dist robot_actuation_time resets c
}
"""


class TestParse:
    def test_four_distributions_two_machines(self):
        result = parse_model(TWO_MACHINE_DOC)
        assert result.ok
        assert len(result.document.distributions) == 4
        assert len(result.document.machines) == 2

    def test_moving_robot_model(self):
        result = parse_model(MOVING_ROBOT_MODEL.read_text())
        assert result.ok
        doc = result.document
        assert len(doc.distributions) == 4
        assert len(doc.machines) == 4
        assert doc.network is not None
        assert len(doc.network.bindings) == 4
        assert "reaction_046" in doc.queries

    def test_empty_input(self):
        result = parse_model("")
        assert result.document is None
        assert len(result.diagnostics) == 1
        diag = result.diagnostics[0]
        assert diag.message == "expected top-level declaration"
        assert (diag.line, diag.column) == (1, 1)

    def test_missing_header(self):
        result = parse_model("distribution d { 1: 1 }")
        assert result.document is None
        assert any(HEADER in d.message for d in result.diagnostics)

    def test_undeclared_flag_in_query(self):
        text = HEADER + "\nquery q { bound 10 target flag_ghost }\n"
        result = parse_model(text)
        assert result.document is None
        assert any("flag_ghost" in d.message for d in result.diagnostics)

    def test_undeclared_distribution(self):
        text = HEADER + (
            "\nprtesm m { states initial active\n"
            "transition initial -> active on go dist nothing }\n"
        )
        result = parse_model(text)
        assert result.document is None
        assert any("nothing" in d.message for d in result.diagnostics)

    def test_bad_probability_diagnosed_with_span(self):
        text = HEADER + "\ndistribution d {\n  5: 0.4\n  6: 0.2\n  7: 1\n}\n"
        result = parse_model(text)
        assert result.document is None
        assert all(d.line >= 1 and d.column >= 1 for d in result.diagnostics)

    def test_duplicate_names(self):
        text = HEADER + "\ndistribution d { 1: 1 }\ndistribution d { 2: 1 }\n"
        result = parse_model(text)
        assert any("duplicate" in d.message for d in result.diagnostics)


class TestPrint:
    def test_round_trip_moving_robot(self):
        doc = parse_model(MOVING_ROBOT_MODEL.read_text()).document
        reparsed = parse_model(print_model(doc))
        assert reparsed.ok
        assert reparsed.document == doc

    def test_round_trip_point_mass(self):
        text = HEADER + "\ndistribution pm { 10: 1 }\n"
        doc = parse_model(text).document
        printed = print_model(doc)
        assert "10: 1" in printed
        assert parse_model(printed).document == doc

    def test_declaration_order_preserved(self):
        text = HEADER + "\ndistribution zz { 1: 1 }\ndistribution aa { 2: 1 }\n"
        doc = parse_model(text).document
        printed = print_model(doc)
        assert printed.index("zz") < printed.index("aa")

    def test_full_precision_probability_literal(self):
        assert format_prob(Fraction("0.9999999995")) == "0.9999999995"
        assert format_prob(Fraction(1, 2_000_000_000)) == "0.0000000005"
        assert format_prob(Fraction(1, 3)) == "1/3"
        doc = parse_model(MOVING_ROBOT_MODEL.read_text()).document
        assert "0.9999999995" in print_model(doc)


class TestTotality:
    @given(st.text(max_size=300))
    @settings(max_examples=300, deadline=None)
    def test_never_raises(self, text):
        result = parse_model(text)
        assert result.document is not None or result.diagnostics

    @given(st.binary(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_bytes_decoded_lossily_never_raise(self, blob):
        parse_model(blob.decode("utf-8", errors="replace"))

    def test_token_soup(self):
        rng = random.Random(20260810)
        vocab = [
            "distribution", "prtesm", "network", "query", "scenario", "machine",
            "comm", "target", "bound", "mode", "{", "}", ":", "->", "on", "dist",
            "resets", "0.5", "1", "150", "name", "(", ")", "&", "|", "!", "=",
        ]
        for _ in range(500):
            text = HEADER + "\n" + " ".join(
                rng.choice(vocab) for _ in range(rng.randint(0, 60))
            )
            result = parse_model(text)
            assert result.document is not None or result.diagnostics

    def test_diagnostic_spans_inside_source(self):
        text = HEADER + "\n???\nprtesm { }"
        result = parse_model(text)
        lines = text.splitlines()
        for diag in result.diagnostics:
            assert 1 <= diag.line <= len(lines) + 1
            assert diag.column >= 1


def test_scenario_block_values():
    text = HEADER + (
        "\nscenario { reaction_delay 0.47 human_present true human_entry ahead }\n"
    )
    doc = parse_model(text).document
    assert doc.scenario == {
        "reaction_delay": 0.47,
        "human_present": True,
        "human_entry": "ahead",
    }
    assert parse_model(print_model(doc)).document == doc


def test_unknown_scenario_key():
    text = HEADER + "\nscenario { warp_factor 9 }\n"
    result = parse_model(text)
    assert any("warp_factor" in d.message for d in result.diagnostics)
