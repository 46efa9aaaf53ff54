"""Register safety specification: XML reader, validation and the Model of Things.

Input schema::

    <block name="top" clock="clk" reset="rst_n">
      <register name="c" width="32" reset_value="0">
        <protect range="29:0" method="secded" selftest="false"/>
      </register>
      <options optimize="ilp" max_width="32" cost_table="builtin-paper"/>
    </block>

``<protect>`` may override ``clock`` and ``reset``; ``<options>`` may list the
property classes to emit with ``properties="params,safety,conn,normal,selftest"``.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Any
from xml.parsers import expat

from .ecc import ProtectionMethod

IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
MAX_REGISTER_WIDTH = 1024


class SpecError(ValueError):
    """Specification cannot be turned into a valid Model of Things."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class Algorithm(str, enum.Enum):
    NONE = "none"
    BFD = "bfd"
    ILP = "ilp"

    @classmethod
    def parse(cls, name: str) -> Algorithm:
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown optimization algorithm {name!r}") from None


class PropertyClass(str, enum.Enum):
    PARAMETERS = "params"
    SAFETY = "safety"
    CONNECTIVITY = "conn"
    NORMAL = "normal"
    SELFTEST = "selftest"


ALL_CLASSES = tuple(PropertyClass)


@dataclass(frozen=True)
class RegisterSpec:
    name: str
    width: int
    reset_value: int = 0
    index: int = 0
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ProtectedRange:
    register: str
    msb: int
    lsb: int
    method: ProtectionMethod = ProtectionMethod.SECDED
    self_test: bool = False
    clock: str = "clk"
    reset: str = "rst_n"
    index: int = 0
    line: int | None = field(default=None, compare=False)

    @property
    def width(self) -> int:
        return self.msb - self.lsb + 1


@dataclass(frozen=True)
class GeneratorOptions:
    algorithm: Algorithm = Algorithm.NONE
    max_width: int = 32
    cost_table: str = "builtin-paper"
    classes: tuple[PropertyClass, ...] = ALL_CLASSES


@dataclass(frozen=True)
class ModelOfThings:
    block: str
    registers: tuple[RegisterSpec, ...] = ()
    protections: tuple[ProtectedRange, ...] = ()
    options: GeneratorOptions = GeneratorOptions()
    clock: str = "clk"
    reset: str = "rst_n"

    def register(self, name: str) -> RegisterSpec:
        for reg in self.registers:
            if reg.name == name:
                return reg
        raise KeyError(name)

    @property
    def protected_bits(self) -> int:
        return sum(p.width for p in self.protections)

    @property
    def clocks(self) -> list[str]:
        return sorted({self.clock} | {p.clock for p in self.protections})

    @property
    def resets(self) -> list[str]:
        return sorted({self.reset} | {p.reset for p in self.protections})


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    location: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.location}: {self.message}"


def _loc(line: int | None, what: str) -> str:
    return f"line {line}" if line is not None else what


def validate_mot(mot: ModelOfThings) -> list[Diagnostic]:
    """Check every MoT invariant; an empty list means the model is valid."""
    diags: list[Diagnostic] = []

    def error(msg: str, line: int | None, what: str) -> None:
        diags.append(Diagnostic("error", msg, _loc(line, what)))

    if not IDENT_RE.match(mot.block):
        error(f"invalid block name {mot.block!r}", None, "block")
    regs: dict[str, RegisterSpec] = {}
    for reg in mot.registers:
        what = f"register {reg.name}"
        if reg.name in regs:
            error(f"duplicate register name {reg.name!r}", reg.line, what)
            continue
        regs[reg.name] = reg
        if not IDENT_RE.match(reg.name):
            error(f"invalid register name {reg.name!r}", reg.line, what)
        if not 1 <= reg.width <= MAX_REGISTER_WIDTH:
            error(f"width {reg.width} outside 1..{MAX_REGISTER_WIDTH}", reg.line, what)
        elif not 0 <= reg.reset_value < (1 << reg.width):
            error(f"reset value {reg.reset_value:#x} does not fit in {reg.width} bits",
                  reg.line, what)

    opts = mot.options
    if opts.max_width < 1:
        error(f"max_width {opts.max_width} must be >= 1", None, "options")

    seen: dict[str, list[ProtectedRange]] = {}
    for prot in mot.protections:
        what = f"protect {prot.register}[{prot.msb}:{prot.lsb}]"
        reg = regs.get(prot.register)
        if reg is None:
            error(f"protected range refers to unknown register {prot.register!r}",
                  prot.line, what)
            continue
        if not 0 <= prot.lsb <= prot.msb:
            error(f"malformed range {prot.msb}:{prot.lsb}", prot.line, what)
            continue
        if prot.msb >= reg.width:
            error(f"range {prot.msb}:{prot.lsb} exceeds width {reg.width} of register "
                  f"{reg.name!r}", prot.line, what)
            continue
        for other in seen.get(prot.register, []):
            if prot.lsb <= other.msb and other.lsb <= prot.msb:
                error(f"range {prot.msb}:{prot.lsb} overlaps {other.msb}:{other.lsb}",
                      prot.line, what)
        if seen.get(prot.register) and opts.algorithm is Algorithm.NONE:
            error(f"register {reg.name!r} has more than one protected range without "
                  "optimization", prot.line, what)
        seen.setdefault(prot.register, []).append(prot)
        for name in (prot.clock, prot.reset):
            if not IDENT_RE.match(name):
                error(f"invalid clock/reset name {name!r}", prot.line, what)
        if opts.max_width >= 1 and prot.width > opts.max_width:
            error(f"protected range of {prot.width} bits exceeds max_width "
                  f"{opts.max_width}", prot.line, what)
    return diags


def check_mot(mot: ModelOfThings) -> ModelOfThings:
    diags = [d for d in validate_mot(mot) if d.severity == "error"]
    if diags:
        first = diags[0]
        line = int(first.location[5:]) if first.location.startswith("line ") else None
        raise SpecError(first.message, line)
    return mot


# --------------------------------------------------------------------------- XML


@dataclass
class _Node:
    tag: str
    attrs: dict[str, str]
    line: int
    children: list[_Node] = field(default_factory=list)


def _read_tree(xml_text: str | bytes) -> _Node:
    parser = expat.ParserCreate()
    stack: list[_Node] = []
    root: list[_Node] = []

    def start(tag: str, attrs: dict[str, str]) -> None:
        node = _Node(tag, dict(attrs), parser.CurrentLineNumber)
        if stack:
            stack[-1].children.append(node)
        else:
            root.append(node)
        stack.append(node)

    def end(tag: str) -> None:
        stack.pop()

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    try:
        parser.Parse(xml_text, True)
    except expat.ExpatError as exc:
        raise SpecError(f"malformed XML: {expat.ErrorString(exc.code)}", exc.lineno) from None
    return root[0]


def _required(node: _Node, attr: str) -> str:
    try:
        return node.attrs[attr]
    except KeyError:
        raise SpecError(f"<{node.tag}> is missing attribute {attr!r}", node.line) from None


def _int(node: _Node, attr: str, value: str) -> int:
    try:
        return int(value, 0)
    except ValueError:
        raise SpecError(f"attribute {attr!r} of <{node.tag}> is not an integer: {value!r}",
                        node.line) from None


def _bool(node: _Node, attr: str, default: bool = False) -> bool:
    value = node.attrs.get(attr)
    if value is None:
        return default
    if value.lower() in ("true", "1", "yes"):
        return True
    if value.lower() in ("false", "0", "no"):
        return False
    raise SpecError(f"attribute {attr!r} of <{node.tag}> is not a boolean: {value!r}",
                    node.line)


_RANGE_RE = re.compile(r"^\s*(\d+)\s*:\s*(\d+)\s*$")


def _options(node: _Node | None) -> GeneratorOptions:
    if node is None:
        return GeneratorOptions()
    try:
        algorithm = Algorithm.parse(node.attrs.get("optimize", "none"))
    except ValueError as exc:
        raise SpecError(str(exc), node.line) from None
    max_width = _int(node, "max_width", node.attrs.get("max_width", "32"))
    classes = ALL_CLASSES
    if "properties" in node.attrs:
        try:
            wanted = {PropertyClass(c.strip()) for c in node.attrs["properties"].split(",")
                      if c.strip()}
        except ValueError as exc:
            raise SpecError(str(exc), node.line) from None
        classes = tuple(c for c in ALL_CLASSES if c in wanted)
    return GeneratorOptions(algorithm, max_width,
                            node.attrs.get("cost_table", "builtin-paper"), classes)


def parse_spec(xml_text: str | bytes) -> ModelOfThings:
    """Parse a register safety specification into a validated ModelOfThings."""
    root = _read_tree(xml_text)
    if root.tag != "block":
        raise SpecError(f"root element must be <block>, got <{root.tag}>", root.line)
    block = _required(root, "name")
    clock = root.attrs.get("clock", "clk")
    reset = root.attrs.get("reset", "rst_n")

    registers: list[RegisterSpec] = []
    protections: list[ProtectedRange] = []
    options_node: _Node | None = None
    for child in root.children:
        if child.tag == "options":
            if options_node is not None:
                raise SpecError("more than one <options> element", child.line)
            options_node = child
            continue
        if child.tag != "register":
            raise SpecError(f"unexpected element <{child.tag}> in <block>", child.line)
        name = _required(child, "name")
        registers.append(RegisterSpec(
            name,
            _int(child, "width", _required(child, "width")),
            _int(child, "reset_value", child.attrs.get("reset_value", "0")),
            len(registers),
            child.line,
        ))
        for prot in child.children:
            if prot.tag != "protect":
                raise SpecError(f"unexpected element <{prot.tag}> in <register>", prot.line)
            m = _RANGE_RE.match(_required(prot, "range"))
            if not m:
                raise SpecError(f"range must look like 'msb:lsb', got {prot.attrs['range']!r}",
                                prot.line)
            try:
                method = ProtectionMethod.parse(_required(prot, "method"))
            except ValueError as exc:
                raise SpecError(str(exc), prot.line) from None
            protections.append(ProtectedRange(
                name, int(m.group(1)), int(m.group(2)), method,
                _bool(prot, "selftest"),
                prot.attrs.get("clock", clock),
                prot.attrs.get("reset", reset),
                len(protections),
                prot.line,
            ))

    mot = ModelOfThings(block, tuple(registers), tuple(protections), _options(options_node),
                        clock, reset)
    return check_mot(mot)


def mot_to_xml(mot: ModelOfThings) -> str:
    """Render a MoT back to the input XML schema."""
    lines = [f'<block name="{mot.block}" clock="{mot.clock}" reset="{mot.reset}">']
    for reg in mot.registers:
        prots = [p for p in mot.protections if p.register == reg.name]
        head = f'  <register name="{reg.name}" width="{reg.width}" reset_value="{reg.reset_value}"'
        if not prots:
            lines.append(head + "/>")
            continue
        lines.append(head + ">")
        for p in prots:
            lines.append(
                f'    <protect range="{p.msb}:{p.lsb}" method="{p.method.value}" '
                f'selftest="{str(p.self_test).lower()}" clock="{p.clock}" reset="{p.reset}"/>')
        lines.append("  </register>")
    o = mot.options
    lines.append(
        f'  <options optimize="{o.algorithm.value}" max_width="{o.max_width}" '
        f'cost_table="{o.cost_table}" properties="{",".join(c.value for c in o.classes)}"/>')
    lines.append("</block>")
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------------------- JSON


def mot_to_dict(mot: ModelOfThings) -> dict[str, Any]:
    return {
        "block": mot.block,
        "clock": mot.clock,
        "reset": mot.reset,
        "registers": [
            {"name": r.name, "width": r.width, "reset_value": r.reset_value, "index": r.index}
            for r in mot.registers
        ],
        "protections": [
            {"register": p.register, "msb": p.msb, "lsb": p.lsb, "method": p.method.value,
             "selftest": p.self_test, "clock": p.clock, "reset": p.reset, "index": p.index}
            for p in mot.protections
        ],
        "options": {
            "optimize": mot.options.algorithm.value,
            "max_width": mot.options.max_width,
            "cost_table": mot.options.cost_table,
            "properties": [c.value for c in mot.options.classes],
        },
    }


def mot_from_dict(data: dict[str, Any]) -> ModelOfThings:
    o = data.get("options", {})
    options = GeneratorOptions(
        Algorithm.parse(o.get("optimize", "none")),
        int(o.get("max_width", 32)),
        o.get("cost_table", "builtin-paper"),
        tuple(PropertyClass(c) for c in o.get("properties", [c.value for c in ALL_CLASSES])),
    )
    return ModelOfThings(
        data["block"],
        tuple(RegisterSpec(r["name"], r["width"], r.get("reset_value", 0), r.get("index", i))
              for i, r in enumerate(data.get("registers", []))),
        tuple(ProtectedRange(p["register"], p["msb"], p["lsb"],
                             ProtectionMethod.parse(p["method"]), bool(p.get("selftest", False)),
                             p.get("clock", data.get("clock", "clk")),
                             p.get("reset", data.get("reset", "rst_n")), p.get("index", i))
              for i, p in enumerate(data.get("protections", []))),
        options,
        data.get("clock", "clk"),
        data.get("reset", "rst_n"),
    )


def dumps(obj: dict[str, Any]) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def mot_to_json(mot: ModelOfThings) -> str:
    return dumps({"kind": "mot", **mot_to_dict(mot)})


def mot_from_json(text: str) -> ModelOfThings:
    return check_mot(mot_from_dict(json.loads(text)))
