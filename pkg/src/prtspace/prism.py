"""PRISM-language export of PTA networks, plus a reader for the same dialect.

The emitted dialect is deliberately small: a ``pta`` header, ``const int``
tick constants, ``const double`` accumulative probabilities, and one module
block per automaton with location variable, clocks, flags and guarded
commands.  ``read_prism_subset`` parses exactly this dialect back; it exists
so tests can close the loop, not to read arbitrary PRISM files.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .model import (
    Branch,
    ClockConstraint,
    PtaCommand,
    PtaModule,
    PtaNetwork,
)
from .textio import format_prob


class ExportError(ValueError):
    pass


class PrismSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


def export_prism(network: PtaNetwork) -> str:
    """Render the network in the published PTA code shape."""
    sanitized = [sanitize(m.name) for m in network.modules]
    if len(set(sanitized)) != len(sanitized):
        raise ExportError("module names collide after sanitization")

    lines = ["pta", ""]

    tick_names: dict[tuple[str, int], str] = {}
    first_const = True
    for mod, short in zip(network.modules, sanitized):
        bounds = sorted(
            {cc.bound for cmd in mod.commands for cc in cmd.clock_constraints}
        )
        for i, bound in enumerate(bounds, start=1):
            name = f"{short}_k{i}"
            tick_names[(mod.name, bound)] = name
            suffix = " // time unit 0.0001 s" if first_const else ""
            lines.append(f"const int {name} = {bound};{suffix}")
            first_const = False
    if not first_const:
        lines.append("")

    first_prob = True
    for mod, short in zip(network.modules, sanitized):
        counter = 0
        for cmd in mod.commands:
            if len(cmd.branches) < 2:
                continue
            acc = Fraction(0)
            for branch in cmd.branches:
                counter += 1
                acc += branch.probability
                if not 0 <= acc <= 1:
                    raise ExportError(f"probability {acc} outside [0, 1]")
                suffix = " // accumulative probability" if first_prob else ""
                lines.append(
                    f"const double {short}_r{counter} = {format_prob(acc)};{suffix}"
                )
                first_prob = False
    if not first_prob:
        lines.append("")

    for mod, short in zip(network.modules, sanitized):
        lines.append(f"module {short}_prtesm")
        lines.append(
            f"        {mod.location_var} : [0..{mod.max_loc}] init {mod.init_loc};"
        )
        for clock in mod.clocks:
            lines.append(f"        {clock} : clock;")
        for flag in mod.flags:
            lines.append(f"        {flag} : bool init false;")
        for cmd in mod.commands:
            guard = [f"{mod.location_var}={cmd.source_loc}"]
            for cc in cmd.clock_constraints:
                guard.append(
                    f"{cc.clock}{cc.op}{tick_names[(mod.name, cc.bound)]}"
                )
            for flag, value in cmd.flag_conditions:
                guard.append(f"{flag}={'true' if value else 'false'}")
            branches = []
            for branch in cmd.branches:
                updates = [f"({mod.location_var}'={branch.target_loc})"]
                updates += [f"({c}'=0)" for c in branch.clock_resets]
                updates += [
                    f"({f}'={'true' if v else 'false'})"
                    for f, v in branch.flag_sets
                ]
                update = "&".join(updates)
                if branch.probability == 1 and len(cmd.branches) == 1:
                    branches.append(update)
                else:
                    branches.append(f"{format_prob(branch.probability)} : {update}")
            label = cmd.sync_label or ""
            lines.append(f"        [{label}] {'&'.join(guard)} -> {' + '.join(branches)};")
        lines.append("endmodule")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


# --- subset reader -------------------------------------------------------------

_CONST_RE = re.compile(
    r"const\s+(int|double)\s+([A-Za-z_]\w*)\s*=\s*([^;]+);"
)
_VAR_RE = re.compile(r"([A-Za-z_]\w*)\s*:\s*\[(\d+)\.\.(\d+)\]\s*init\s*(\d+);")
_CLOCK_RE = re.compile(r"([A-Za-z_]\w*)\s*:\s*clock;")
_FLAG_RE = re.compile(r"([A-Za-z_]\w*)\s*:\s*bool\s*init\s*(true|false);")
_CMD_RE = re.compile(r"\[([A-Za-z_]\w*)?\]\s*(.*?)\s*->\s*(.*);")


def _strip_comment(line: str) -> str:
    return line.split("//", 1)[0].strip()


def read_prism_subset(text: str) -> PtaNetwork:
    """Parse the dialect produced by export_prism back into a network."""
    consts: dict[str, Fraction] = {}
    modules: list[PtaModule] = []
    lines = text.splitlines()
    idx = 0
    seen_pta = False

    def value_of(token: str, line_no: int) -> Fraction:
        token = token.strip()
        if re.fullmatch(r"\d+", token):
            return Fraction(int(token))
        if re.fullmatch(r"\d+\.\d+", token):
            return Fraction(token)
        if re.fullmatch(r"\d+/\d+", token):
            num, den = token.split("/")
            return Fraction(int(num), int(den))
        if token in consts:
            return consts[token]
        raise PrismSyntaxError(f"unknown constant or literal {token!r}", line_no)

    while idx < len(lines):
        raw = lines[idx]
        line_no = idx + 1
        line = _strip_comment(raw)
        idx += 1
        if not line:
            continue
        if line == "pta":
            seen_pta = True
            continue
        m = _CONST_RE.fullmatch(line)
        if m:
            _, name, value = m.groups()
            consts[name] = value_of(value, line_no)
            continue
        if line.startswith("module"):
            if not seen_pta:
                raise PrismSyntaxError("module before 'pta' header", line_no)
            mod_name = line.split()[1]
            if mod_name.endswith("_prtesm"):
                mod_name = mod_name[: -len("_prtesm")]
            loc_var = None
            max_loc = init_loc = 0
            clocks: list[str] = []
            flags: list[str] = []
            commands: list[PtaCommand] = []
            while idx < len(lines):
                body_no = idx + 1
                body = _strip_comment(lines[idx])
                idx += 1
                if not body:
                    continue
                if body == "endmodule":
                    break
                mv = _VAR_RE.fullmatch(body)
                if mv:
                    if loc_var is not None:
                        raise PrismSyntaxError("second location variable", body_no)
                    loc_var, lo, hi, init = mv.groups()
                    if int(lo) != 0:
                        raise PrismSyntaxError("location range must start at 0", body_no)
                    max_loc, init_loc = int(hi), int(init)
                    continue
                mc = _CLOCK_RE.fullmatch(body)
                if mc:
                    clocks.append(mc.group(1))
                    continue
                mf = _FLAG_RE.fullmatch(body)
                if mf:
                    flags.append(mf.group(1))
                    continue
                mcmd = _CMD_RE.fullmatch(body)
                if mcmd:
                    if loc_var is None:
                        raise PrismSyntaxError("command before location variable", body_no)
                    label, guard_text, branch_text = mcmd.groups()
                    source_loc = None
                    ccs: list[ClockConstraint] = []
                    fconds: list[tuple[str, bool]] = []
                    for part in guard_text.split("&"):
                        part = part.strip()
                        cmp_m = re.fullmatch(
                            r"([A-Za-z_]\w*)\s*(>=|<=|=)\s*([A-Za-z_]\w*|\d+)", part
                        )
                        if not cmp_m:
                            raise PrismSyntaxError(f"bad guard conjunct {part!r}", body_no)
                        name, op, rhs = cmp_m.groups()
                        if op == "=":
                            if name == loc_var:
                                source_loc = int(rhs)
                            elif rhs in ("true", "false"):
                                fconds.append((name, rhs == "true"))
                            else:
                                raise PrismSyntaxError(
                                    f"unknown variable {name!r} in guard", body_no
                                )
                        else:
                            bound = value_of(rhs, body_no)
                            if bound.denominator != 1:
                                raise PrismSyntaxError(
                                    "clock bounds must be integers", body_no
                                )
                            ccs.append(ClockConstraint(name, op, int(bound)))
                    if source_loc is None:
                        raise PrismSyntaxError("command without location guard", body_no)
                    branches: list[Branch] = []
                    for alt in branch_text.split("+"):
                        alt = alt.strip()
                        if ":" in alt:
                            prob_text, update_text = alt.split(":", 1)
                            prob = value_of(prob_text.strip(), body_no)
                        else:
                            prob, update_text = Fraction(1), alt
                        target_loc = None
                        resets: list[str] = []
                        fsets: list[tuple[str, bool]] = []
                        for upd in update_text.strip().split("&"):
                            upd = upd.strip()
                            um = re.fullmatch(
                                r"\(\s*([A-Za-z_]\w*)'\s*=\s*(\d+|true|false)\s*\)", upd
                            )
                            if not um:
                                raise PrismSyntaxError(f"bad update {upd!r}", body_no)
                            name, value = um.groups()
                            if name == loc_var:
                                target_loc = int(value)
                            elif value in ("true", "false"):
                                fsets.append((name, value == "true"))
                            elif value == "0" and name in clocks:
                                resets.append(name)
                            else:
                                raise PrismSyntaxError(
                                    f"unknown update target {name!r}", body_no
                                )
                        if target_loc is None:
                            raise PrismSyntaxError(
                                "branch without location update", body_no
                            )
                        branches.append(
                            Branch(prob, target_loc, tuple(resets), tuple(fsets))
                        )
                    commands.append(
                        PtaCommand(
                            sync_label=label,
                            source_loc=source_loc,
                            clock_constraints=tuple(ccs),
                            flag_conditions=tuple(fconds),
                            branches=tuple(branches),
                        )
                    )
                    continue
                raise PrismSyntaxError(f"unrecognised line {body!r}", body_no)
            if loc_var is None:
                raise PrismSyntaxError(f"module {mod_name} has no location variable", line_no)
            modules.append(
                PtaModule(
                    name=mod_name,
                    location_var=loc_var,
                    max_loc=max_loc,
                    init_loc=init_loc,
                    clocks=tuple(clocks),
                    flags=tuple(flags),
                    commands=tuple(commands),
                )
            )
            continue
        raise PrismSyntaxError(f"unrecognised line {line!r}", line_no)

    if not seen_pta:
        raise PrismSyntaxError("missing 'pta' header", 1)
    labels = frozenset(
        cmd.sync_label
        for mod in modules
        for cmd in mod.commands
        if cmd.sync_label is not None
    )
    consts_tuple = tuple(sorted(consts.items()))
    return PtaNetwork(tuple(modules), labels, consts_tuple)


def structure(network: PtaNetwork):
    """Comparable shape of a network, ignoring presentation-only fields."""
    return tuple(
        (
            mod.name,
            mod.location_var,
            mod.max_loc,
            mod.init_loc,
            mod.clocks,
            mod.flags,
            mod.commands,
        )
        for mod in network.modules
    )
