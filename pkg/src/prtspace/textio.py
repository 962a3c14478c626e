"""Model text format: parser, printer and document-to-network elaboration.

The format is this project's own (grammar in docs/dsl.md, version header
``prtspace model v1``).  A document declares delay distributions, machines,
one network block wiring machines into a synchronised chain, named
reachability queries and an optional scenario override block.

Parsing is total: any byte sequence yields either a document or at least one
diagnostic carrying a 1-based (line, column) span; it never raises on bad
input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .distributions import DelayCdf
from .model import (
    Direction,
    ParameterEvent,
    Prtesm,
    PrtesmTransition,
    PtaNetwork,
    network_of,
    prtesm_to_pta,
)

HEADER = "prtspace model v1"

ScenarioValue = Union[float, bool, str]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class CommBinding:
    pin: str
    arm_label: Optional[str] = None
    completion_label: Optional[str] = None


@dataclass(frozen=True)
class MachineBinding:
    machine: str
    comm: tuple[CommBinding, ...]


@dataclass(frozen=True)
class NetworkDecl:
    bindings: tuple[MachineBinding, ...]
    target: Optional[str] = None
    profile: str = "exact"


@dataclass(frozen=True)
class QueryDecl:
    name: str
    bound: int
    mode: str = "max"
    target: Optional[str] = None


@dataclass
class ModelDocument:
    distributions: dict[str, DelayCdf] = field(default_factory=dict)
    machines: dict[str, Prtesm] = field(default_factory=dict)
    network: Optional[NetworkDecl] = None
    queries: dict[str, QueryDecl] = field(default_factory=dict)
    scenario: dict[str, ScenarioValue] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, ModelDocument):
            return NotImplemented
        return (
            list(self.distributions.items()) == list(other.distributions.items())
            and list(self.machines.items()) == list(other.machines.items())
            and self.network == other.network
            and list(self.queries.items()) == list(other.queries.items())
            and list(self.scenario.items()) == list(other.scenario.items())
        )


@dataclass
class ParseResult:
    document: Optional[ModelDocument]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.document is not None and not any(
            d.severity == "error" for d in self.diagnostics
        )


# --- tokenizer ----------------------------------------------------------------

_PUNCT = ("->", "{", "}", ":", "&", "|", "!", "(", ")", "=")


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident" | "number" | punct | "eof"
    text: str
    line: int
    column: int


def _tokenize(text: str, diags: list[Diagnostic]) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            elif j < n and text[j] == "/" and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(_Token("number", text[i:j], line, col))
            col += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two == "->":
            tokens.append(_Token("->", two, line, col))
            i += 2
            col += 2
            continue
        if ch in "{}:&|!()=":
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        diags.append(Diagnostic("error", f"unexpected character {ch!r}", line, col))
        i += 1
        col += 1
    tokens.append(_Token("eof", "", line, col))
    return tokens


def _parse_prob(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(int(num), int(den))
    return Fraction(text)


_TOP_KEYWORDS = ("distribution", "prtesm", "network", "query", "scenario")

_SCENARIO_KEYS = {
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
    "poll_phase",
    "reaction_delay",
    "human_speed",
    "human_present",
    "human_entry_distance",
    "human_spawn_time",
    "human_aim",
    "human_entry",
    "robot_start",
    "time_cap",
}


class _Parser:
    def __init__(self, text: str):
        self.diags: list[Diagnostic] = []
        self.tokens = _tokenize(text, self.diags)
        self.pos = 0
        self.doc = ModelDocument()

    # -- token helpers --

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[_Token] = None):
        tok = tok or self.peek()
        self.diags.append(Diagnostic("error", message, tok.line, tok.column))

    def expect(self, kind: str, what: str) -> Optional[_Token]:
        tok = self.peek()
        if tok.kind != kind:
            self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
            return None
        return self.take()

    def expect_ident(self, what: str) -> Optional[str]:
        tok = self.expect("ident", what)
        return tok.text if tok else None

    def expect_keyword(self, word: str) -> bool:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == word:
            self.take()
            return True
        self.error(f"expected {word!r}, found {tok.text or 'end of input'!r}")
        return False

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text == word

    def skip_to_sync(self):
        """Panic-mode recovery: skip to a top-level keyword or past a '}'."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if tok.kind == "{":
                depth += 1
            elif tok.kind == "}":
                self.take()
                if depth == 0:
                    return
                depth -= 1
                continue
            elif depth == 0 and tok.kind == "ident" and tok.text in _TOP_KEYWORDS:
                return
            self.take()

    # -- grammar --

    def parse(self) -> ParseResult:
        first = self.peek()
        if first.kind == "eof":
            self.error("expected top-level declaration", first)
            return ParseResult(None, self.diags)
        if not (
            first.kind == "ident"
            and first.text == "prtspace"
            and self.tokens[self.pos + 1 : self.pos + 3]
            and all(
                t.kind == "ident" for t in self.tokens[self.pos + 1 : self.pos + 3]
            )
            and self.tokens[self.pos + 1].text == "model"
            and self.tokens[self.pos + 2].text == "v1"
        ):
            self.error(f"expected header {HEADER!r}", first)
            return ParseResult(None, self.diags)
        self.pos += 3

        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind != "ident" or tok.text not in _TOP_KEYWORDS:
                self.error(
                    "expected top-level declaration "
                    "(distribution, prtesm, network, query or scenario)",
                    tok,
                )
                self.skip_to_sync()
                continue
            if tok.text == "distribution":
                self.parse_distribution()
            elif tok.text == "prtesm":
                self.parse_machine()
            elif tok.text == "network":
                self.parse_network()
            elif tok.text == "query":
                self.parse_query()
            else:
                self.parse_scenario()

        if any(d.severity == "error" for d in self.diags):
            return ParseResult(None, self.diags)
        self.resolve()
        if any(d.severity == "error" for d in self.diags):
            return ParseResult(None, self.diags)
        return ParseResult(self.doc, self.diags)

    def parse_distribution(self):
        self.take()
        name_tok = self.peek()
        name = self.expect_ident("distribution name")
        if name is None or self.expect("{", "'{'") is None:
            self.skip_to_sync()
            return
        points = []
        bad = False
        while not self.at_end_of_block():
            tick = self.expect("number", "tick")
            if tick is None or self.expect(":", "':'") is None:
                bad = True
                break
            prob = self.expect("number", "cumulative probability")
            if prob is None:
                bad = True
                break
            if "." in tick.text or "/" in tick.text:
                self.error("tick must be an integer number of 100us units", tick)
                bad = True
                break
            try:
                points.append((int(tick.text), _parse_prob(prob.text)))
            except ValueError as exc:
                self.error(f"bad probability literal: {exc}", prob)
                bad = True
                break
        if bad:
            self.skip_to_sync()
            return
        self.expect("}", "'}'")
        try:
            cdf = DelayCdf(points)
        except ValueError as exc:  # DistributionError included
            self.error(f"invalid distribution {name!r}: {exc}", name_tok)
            return
        if name in self.doc.distributions:
            self.error(f"duplicate distribution {name!r}", name_tok)
            return
        self.doc.distributions[name] = cdf

    def parse_machine(self):
        self.take()
        name_tok = self.peek()
        name = self.expect_ident("machine name")
        if name is None or self.expect("{", "'{'") is None:
            self.skip_to_sync()
            return
        clocks: list[str] = []
        states: list[str] = []
        transitions: list[PrtesmTransition] = []
        while not self.at_end_of_block():
            tok = self.peek()
            if tok.kind != "ident":
                self.error("expected clocks, states or transition", tok)
                self.skip_to_sync()
                return
            if tok.text == "clocks":
                self.take()
                while self.peek().kind == "ident" and self.peek().text not in (
                    "clocks",
                    "states",
                    "transition",
                ):
                    clocks.append(self.take().text)
            elif tok.text == "states":
                self.take()
                while self.peek().kind == "ident" and self.peek().text not in (
                    "clocks",
                    "states",
                    "transition",
                ):
                    states.append(self.take().text)
            elif tok.text == "transition":
                tr = self.parse_transition()
                if tr is None:
                    self.skip_to_sync()
                    return
                transitions.append(tr)
            else:
                self.error(f"unexpected {tok.text!r} in machine body", tok)
                self.skip_to_sync()
                return
        self.expect("}", "'}'")
        if name in self.doc.machines:
            self.error(f"duplicate machine {name!r}", name_tok)
            return
        self.doc.machines[name] = Prtesm(
            name=name,
            states=tuple(states),
            transitions=tuple(transitions),
            clocks=frozenset(clocks),
        )

    def parse_transition(self) -> Optional[PrtesmTransition]:
        self.take()
        source = self.expect_ident("source state")
        if source is None or self.expect("->", "'->'") is None:
            return None
        target = self.expect_ident("target state")
        if target is None:
            return None
        trigger = None
        dist_name = None
        resets: list[str] = []
        while True:
            tok = self.peek()
            if tok.kind != "ident" or tok.text not in ("on", "dist", "resets"):
                break
            word = self.take().text
            if word == "on":
                pin = self.expect_ident("pin name")
                if pin is None:
                    return None
                direction = Direction.FROM_BLOCK
                if self.at_keyword("in"):
                    self.take()
                    direction = Direction.TO_BLOCK
                elif self.at_keyword("out"):
                    self.take()
                trigger = ParameterEvent(pin, direction)
            elif word == "dist":
                dist_name = self.expect_ident("distribution name")
                if dist_name is None:
                    return None
            else:
                while self.peek().kind == "ident" and self.peek().text not in (
                    "on",
                    "dist",
                    "resets",
                    "transition",
                    "clocks",
                    "states",
                ):
                    resets.append(self.take().text)
        return PrtesmTransition(
            source=source,
            target=target,
            trigger=trigger,
            clock_resets=frozenset(resets),
            dist_name=dist_name,
        )

    def parse_network(self):
        start = self.take()
        if self.doc.network is not None:
            self.error("duplicate network block", start)
        if self.expect("{", "'{'") is None:
            self.skip_to_sync()
            return
        bindings: list[MachineBinding] = []
        target: Optional[str] = None
        profile = "exact"
        while not self.at_end_of_block():
            tok = self.peek()
            if tok.kind != "ident":
                self.error("expected machine, target or profile", tok)
                self.skip_to_sync()
                return
            if tok.text == "machine":
                self.take()
                mname = self.expect_ident("machine name")
                if mname is None or self.expect("{", "'{'") is None:
                    self.skip_to_sync()
                    return
                comm: list[CommBinding] = []
                while not self.at_end_of_block():
                    if not self.expect_keyword("comm"):
                        self.skip_to_sync()
                        return
                    pin = self.expect_ident("pin name")
                    if pin is None:
                        self.skip_to_sync()
                        return
                    arm = completion = None
                    while self.peek().kind == "ident" and self.peek().text in (
                        "arm",
                        "completion",
                    ):
                        word = self.take().text
                        value = self.expect_ident(f"{word} label")
                        if value is None:
                            self.skip_to_sync()
                            return
                        if word == "arm":
                            arm = value
                        else:
                            completion = value
                    comm.append(CommBinding(pin, arm, completion))
                self.expect("}", "'}'")
                bindings.append(MachineBinding(mname, tuple(comm)))
            elif tok.text == "target":
                self.take()
                target = self.parse_target_text()
            elif tok.text == "profile":
                self.take()
                value = self.expect_ident("profile name")
                if value not in ("exact", "window"):
                    self.error("profile must be 'exact' or 'window'", tok)
                else:
                    profile = value
            else:
                self.error(f"unexpected {tok.text!r} in network body", tok)
                self.skip_to_sync()
                return
        self.expect("}", "'}'")
        self.doc.network = NetworkDecl(tuple(bindings), target, profile)

    def parse_target_text(self) -> str:
        """Collect a boolean expression verbatim up to the next clause."""
        parts: list[str] = []
        stops = {"machine", "target", "profile", "bound", "mode"}
        while True:
            tok = self.peek()
            if tok.kind in ("eof", "}"):
                break
            if tok.kind == "ident" and tok.text in stops:
                break
            self.take()
            parts.append(tok.text)
        return " ".join(parts)

    def parse_query(self):
        self.take()
        name_tok = self.peek()
        name = self.expect_ident("query name")
        if name is None or self.expect("{", "'{'") is None:
            self.skip_to_sync()
            return
        bound: Optional[int] = None
        mode = "max"
        target: Optional[str] = None
        while not self.at_end_of_block():
            tok = self.peek()
            if tok.kind != "ident":
                self.error("expected bound, mode or target", tok)
                self.skip_to_sync()
                return
            if tok.text == "bound":
                self.take()
                num = self.expect("number", "bound in ticks")
                if num is None:
                    self.skip_to_sync()
                    return
                if "." in num.text or "/" in num.text:
                    self.error("bound must be an integer tick count", num)
                else:
                    bound = int(num.text)
            elif tok.text == "mode":
                self.take()
                value = self.expect_ident("'max', 'min' or 'both'")
                if value not in ("max", "min", "both"):
                    self.error(f"unknown mode {value!r}", tok)
                else:
                    mode = value
            elif tok.text == "target":
                self.take()
                target = self.parse_target_text()
            else:
                self.error(f"unexpected {tok.text!r} in query body", tok)
                self.skip_to_sync()
                return
        self.expect("}", "'}'")
        if bound is None:
            self.error(f"query {name!r} has no bound", name_tok)
            return
        if name in self.doc.queries:
            self.error(f"duplicate query {name!r}", name_tok)
            return
        self.doc.queries[name] = QueryDecl(name, bound, mode, target)

    def parse_scenario(self):
        self.take()
        if self.expect("{", "'{'") is None:
            self.skip_to_sync()
            return
        while not self.at_end_of_block():
            key_tok = self.peek()
            key = self.expect_ident("scenario setting name")
            if key is None:
                self.skip_to_sync()
                return
            if key not in _SCENARIO_KEYS:
                self.error(f"unknown scenario setting {key!r}", key_tok)
            tok = self.peek()
            if tok.kind == "number":
                self.take()
                try:
                    self.doc.scenario[key] = float(_parse_prob(tok.text))
                except ValueError as exc:
                    self.error(f"bad number: {exc}", tok)
            elif tok.kind == "ident" and tok.text in ("true", "false"):
                self.take()
                self.doc.scenario[key] = tok.text == "true"
            elif tok.kind == "ident":
                self.take()
                self.doc.scenario[key] = tok.text
            else:
                self.error("expected a value", tok)
                self.skip_to_sync()
                return
        self.expect("}", "'}'")

    def at_end_of_block(self) -> bool:
        return self.peek().kind in ("}", "eof")

    # -- cross-reference resolution --

    def resolve(self):
        doc = self.doc
        for name, machine in doc.machines.items():
            for tr in machine.transitions:
                if tr.dist_name is not None and tr.dist_name not in doc.distributions:
                    self.diags.append(
                        Diagnostic(
                            "error",
                            f"machine {name!r} references undeclared "
                            f"distribution {tr.dist_name!r}",
                            1,
                            1,
                        )
                    )
        flags: set[str] = set()
        loc_vars: set[str] = set()
        if doc.network is not None:
            for binding in doc.network.bindings:
                if binding.machine not in doc.machines:
                    self.diags.append(
                        Diagnostic(
                            "error",
                            f"network references undeclared machine "
                            f"{binding.machine!r}",
                            1,
                            1,
                        )
                    )
                    continue
                machine = doc.machines[binding.machine]
                pins = {
                    tr.trigger.pin
                    for tr in machine.transitions
                    if tr.trigger is not None
                }
                for comm in binding.comm:
                    if comm.pin not in pins:
                        self.diags.append(
                            Diagnostic(
                                "error",
                                f"comm action {comm.pin!r} is not a pin of "
                                f"machine {binding.machine!r}",
                                1,
                                1,
                            )
                        )
                flags.add(f"flag_{binding.machine}")
                loc_vars.add(f"s_{binding.machine}")
            if doc.network.target:
                self.check_target(doc.network.target, flags, loc_vars, "network")
        for query in doc.queries.values():
            if query.target:
                self.check_target(
                    query.target, flags, loc_vars, f"query {query.name!r}"
                )
            elif doc.network is None or not doc.network.target:
                self.diags.append(
                    Diagnostic(
                        "error",
                        f"query {query.name!r} has no target and the network "
                        "declares none",
                        1,
                        1,
                    )
                )

    def check_target(self, text: str, flags: set[str], loc_vars: set[str], where: str):
        for word in text.replace("(", " ").replace(")", " ").split():
            if word in ("and", "or", "not", "&", "|", "!", "=", "true", "false"):
                continue
            if word.isdigit():
                continue
            if "=" in word:
                word = word.split("=", 1)[0]
            if word and (word[0].isalpha() or word[0] == "_"):
                if word not in flags and word not in loc_vars:
                    self.diags.append(
                        Diagnostic(
                            "error",
                            f"{where} target references undeclared flag or "
                            f"location {word!r}",
                            1,
                            1,
                        )
                    )


def parse_model(text: str) -> ParseResult:
    """Parse model text; total over arbitrary input."""
    return _Parser(text).parse()


# --- printing ------------------------------------------------------------------


def format_prob(p: Fraction) -> str:
    """Exact literal: decimal when the denominator is 10-smooth, else p/q."""
    den = p.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{p.numerator}/{p.denominator}"
    digits = max(twos, fives)
    if digits == 0:
        return str(p.numerator)
    scaled = p.numerator * 10**digits // p.denominator
    text = str(scaled).rjust(digits + 1, "0")
    return f"{text[:-digits]}.{text[-digits:]}"


def print_model(doc: ModelDocument) -> str:
    """Canonical text form; parse_model(print_model(doc)) equals doc."""
    out = [HEADER, ""]
    for name, cdf in doc.distributions.items():
        out.append(f"distribution {name} {{")
        for tick, prob in cdf.points:
            out.append(f"  {tick}: {format_prob(prob)}")
        out.append("}")
        out.append("")
    for name, machine in doc.machines.items():
        out.append(f"prtesm {name} {{")
        if machine.clocks:
            out.append("  clocks " + " ".join(sorted(machine.clocks)))
        out.append("  states " + " ".join(machine.states))
        for tr in machine.transitions:
            line = f"  transition {tr.source} -> {tr.target}"
            if tr.trigger is not None:
                line += f" on {tr.trigger.pin}"
                if tr.trigger.direction is Direction.TO_BLOCK:
                    line += " in"
            if tr.dist_name is not None:
                line += f" dist {tr.dist_name}"
            if tr.clock_resets:
                line += " resets " + " ".join(sorted(tr.clock_resets))
            out.append(line)
        out.append("}")
        out.append("")
    if doc.network is not None:
        out.append("network {")
        for binding in doc.network.bindings:
            out.append(f"  machine {binding.machine} {{")
            for comm in binding.comm:
                line = f"    comm {comm.pin}"
                if comm.arm_label:
                    line += f" arm {comm.arm_label}"
                if comm.completion_label:
                    line += f" completion {comm.completion_label}"
                out.append(line)
            out.append("  }")
        if doc.network.profile != "exact":
            out.append(f"  profile {doc.network.profile}")
        if doc.network.target:
            out.append(f"  target {doc.network.target}")
        out.append("}")
        out.append("")
    for query in doc.queries.values():
        out.append(f"query {query.name} {{")
        if query.target:
            out.append(f"  target {query.target}")
        out.append(f"  bound {query.bound}")
        out.append(f"  mode {query.mode}")
        out.append("}")
        out.append("")
    if doc.scenario:
        out.append("scenario {")
        for key, value in doc.scenario.items():
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = format_prob(Fraction(value).limit_denominator(10**9))
            else:
                text = str(value)
            out.append(f"  {key} {text}")
        out.append("}")
        out.append("")
    return "\n".join(out)


# --- elaboration ----------------------------------------------------------------


class ElaborationError(ValueError):
    pass


def document_to_network(doc: ModelDocument) -> tuple[PtaNetwork, Optional[str]]:
    """Compile every bound machine and assemble the synchronised network."""
    if doc.network is None:
        raise ElaborationError("document has no network block")
    modules = []
    for binding in doc.network.bindings:
        machine = doc.machines[binding.machine]
        dist_by_pin: dict[str, DelayCdf] = {}
        for tr in machine.transitions:
            if tr.trigger is not None and tr.dist_name is not None:
                dist_by_pin[tr.trigger.pin] = doc.distributions[tr.dist_name]
        pins = [c.pin for c in binding.comm]
        arm = {c.pin: c.arm_label for c in binding.comm if c.arm_label}
        done = {
            c.pin: c.completion_label for c in binding.comm if c.completion_label
        }
        missing = [p for p in pins if p not in dist_by_pin]
        if missing:
            raise ElaborationError(
                f"machine {binding.machine!r}: comm pins {missing} carry no "
                "distribution annotation"
            )
        modules.append(
            prtesm_to_pta(
                machine,
                pins,
                dist_by_pin,
                arm_labels=arm,
                completion_labels=done,
                completion=doc.network.profile,
            )
        )
    return network_of(modules), doc.network.target
