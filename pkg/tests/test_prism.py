"""PRISM-dialect export shapes, golden fixture, and subset-reader round trip."""

import re
from pathlib import Path

import pytest

from prtspace.distributions import COMMUNICATION_TIME, DelayCdf
from prtspace.model import (
    ParameterEvent,
    Prtesm,
    PrtesmTransition,
    network_of,
    prtesm_to_pta,
)
from prtspace.prism import (
    ExportError,
    PrismSyntaxError,
    export_prism,
    read_prism_subset,
    sanitize,
    structure,
)
from prtspace.textio import document_to_network, parse_model
from .helpers import MOVING_ROBOT_MODEL, single_module_network

GOLDEN = Path(__file__).parent / "fixtures" / "control_unit.pta"


def control_unit_network():
    pins = ("set_normal", "set_yellow", "set_red", "sense_person")
    transitions = [
        PrtesmTransition("initial", "active", ParameterEvent("start_robot")),
        PrtesmTransition("initial", "active", ParameterEvent("start_person")),
    ]
    for pin in pins:
        transitions.append(
            PrtesmTransition(
                "active", "active", ParameterEvent(pin), clock_resets=frozenset({"c"})
            )
        )
    machine = Prtesm(
        "control_unit", ("initial", "active"), tuple(transitions), frozenset({"c"})
    )
    module = prtesm_to_pta(
        machine,
        list(pins),
        {p: COMMUNICATION_TIME for p in pins},
        completion_labels={
            "set_normal": "n",
            "set_yellow": "y",
            "set_red": "r",
            "sense_person": "seen",
        },
    )
    return network_of([module])


class TestExportShapes:
    def test_golden_fixture(self):
        assert export_prism(control_unit_network()) == GOLDEN.read_text()

    def test_fig6_style_lines(self):
        text = export_prism(control_unit_network())
        lines = [line.strip() for line in text.splitlines()]
        assert lines[0] == "pta"
        assert "s_control_unit : [0..8] init 0;" in lines
        assert "c_control_unit : clock;" in lines
        assert "flag_control_unit : bool init false;" in lines
        assert "[i] s_control_unit=0 -> (s_control_unit'=1);" in lines
        assert any(
            re.match(r"\[\] s_control_unit=2 -> 0\.8 : .* \+ 0\.18 : ", line)
            for line in lines
        )
        assert any(
            line.startswith("[y] ") and "c_control_unit>=" in line for line in lines
        )
        assert "[] s_control_unit=8 -> (s_control_unit'=8)&(flag_control_unit'=true);" in lines

    def test_unit_and_probability_comments(self):
        text = export_prism(control_unit_network())
        assert "// time unit 0.0001 s" in text
        assert "// accumulative probability" in text

    def test_probability_literals_exact(self):
        text = export_prism(control_unit_network())
        assert "0.0049999995 :" in text
        assert "0.0000000005 :" in text

    def test_single_branch_without_plus(self):
        net = single_module_network("m", "act", DelayCdf([(10, 1)]))
        text = export_prism(net)
        branch_line = next(
            line for line in text.splitlines() if "s_m=2" in line
        )
        assert "+" not in branch_line
        assert " : " not in branch_line

    def test_newline_terminated(self):
        assert export_prism(control_unit_network()).endswith("endmodule\n")

    def test_deterministic(self):
        net = control_unit_network()
        assert export_prism(net) == export_prism(net)

    def test_sanitization(self):
        assert sanitize("Control Unit/2") == "Control_Unit_2"

    def test_collision_after_sanitization(self):
        point = DelayCdf([(1, 1)])
        a = single_module_network("m x", "act", point).modules[0]
        b = single_module_network("m_x", "act", point).modules[0]
        with pytest.raises(ExportError, match="collide"):
            export_prism(network_of([a, b]))


class TestRoundTrip:
    def test_control_unit(self):
        net = control_unit_network()
        assert structure(read_prism_subset(export_prism(net))) == structure(net)

    def test_moving_robot_document(self):
        doc = parse_model(MOVING_ROBOT_MODEL.read_text()).document
        net, _ = document_to_network(doc)
        back = read_prism_subset(export_prism(net))
        assert structure(back) == structure(net)
        assert back.sync_alphabet == net.sync_alphabet


class TestReaderErrors:
    def test_missing_pta_header(self):
        with pytest.raises(PrismSyntaxError, match="pta"):
            read_prism_subset("module m_prtesm\nendmodule\n")

    def test_unknown_constant(self):
        bad = (
            "pta\nmodule m_prtesm\n  s : [0..1] init 0;\n"
            "  [] s=0&c>=mystery -> (s'=1);\nendmodule\n"
        )
        with pytest.raises(PrismSyntaxError, match="mystery"):
            read_prism_subset(bad)

    def test_error_carries_line(self):
        try:
            read_prism_subset("pta\nnonsense here\n")
        except PrismSyntaxError as exc:
            assert exc.line == 2
        else:
            pytest.fail("expected PrismSyntaxError")
