"""Property generation: Model of Properties (IR) and its SVA view.

Properties only use the ``antecedent |-> term && term ...;`` fragment.
Wrapper port contract: ``d_i``, ``d_o``, ``we_i``, ``err_o``, ``cor_o``,
``clk_i``, ``rst_ni``, ``test_done_o`` and the ``dw`` parameter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .optimizer import MergePlan, Wrapper
from .spec_model import Algorithm, ModelOfThings, PropertyClass

CLASS_ORDER = tuple(PropertyClass)

CLASS_TITLES = {
    PropertyClass.PARAMETERS: "Configurable parameters",
    PropertyClass.SAFETY: "Safety mode (fault injection)",
    PropertyClass.CONNECTIVITY: "Connectivity",
    PropertyClass.NORMAL: "Normal mode",
    PropertyClass.SELFTEST: "Self-test mode",
}

RECONSTRUCTED = (PropertyClass.NORMAL, PropertyClass.SELFTEST)

_NAME_SUFFIX = {Algorithm.NONE: "", Algorithm.BFD: "_optimized_1", Algorithm.ILP: "_optimized_2"}


@dataclass(frozen=True)
class PropertyIR:
    cls: PropertyClass
    name: str
    antecedent: str
    terms: tuple[str, ...]
    implication: str = "|->"
    clocking: str | None = None
    fault_budget: int | None = None
    comments: tuple[str, ...] = ()


def wrapper_index(plan: MergePlan, wrapper: Wrapper) -> int:
    return plan.wrappers.index(wrapper) + 1


def _clocking(mot: ModelOfThings, w: Wrapper) -> str:
    return f"@(posedge {mot.block}.{w.clock}) disable iff (!{mot.block}.{w.reset})"


def selftest_window(mot: ModelOfThings) -> int:
    """Cycles after the trigger within which every wrapper's test fault shows."""
    return len(mot.clocks) + 1


def gen_parameter_props(mot: ModelOfThings, plan: MergePlan) -> list[PropertyIR]:
    if not plan.wrappers:
        return []
    terms = tuple(f"{w.name}.dw == {w.dw}" for w in plan.wrappers)
    return [PropertyIR(PropertyClass.PARAMETERS, "param_dw_safety_registers", "1", terms)]


def gen_safety_props(mot: ModelOfThings, plan: MergePlan) -> list[PropertyIR]:
    props = []
    for w in plan.wrappers:
        k = wrapper_index(plan, w)
        terms = [f"{w.name}.err_o == 1"]
        if w.method.corrects:
            terms.append(f"(!{w.name}.cor_o || {w.name}.d_o == `Fault_Golden_{k})")
        props.append(PropertyIR(
            PropertyClass.SAFETY, f"fault_injection_{w.name}", f"`Fault_Injection_{k}",
            tuple(terms), fault_budget=w.method.max_errors,
            comments=("Num. fault patterns decided by its data width",)))
    return props


def gen_connectivity_props(mot: ModelOfThings, plan: MergePlan) -> list[PropertyIR]:
    if not plan.wrappers:
        return []
    top = mot.block
    suffix = _NAME_SUFFIX[plan.algorithm]
    inputs = tuple(f"{top}.{e.register}_i[{e.msb}:{e.lsb}] == "
                   f"{e.wrapper}.d_i[{e.dest_msb}:{e.dest_lsb}]" for e in plan.mapping)
    outputs = tuple(f"{e.wrapper}.d_o[{e.dest_msb}:{e.dest_lsb}] == "
                    f"{top}.{e.register}_o[{e.msb}:{e.lsb}]" for e in plan.mapping)
    clk_rst = []
    for w in plan.wrappers:
        clk_rst.append(f"{w.name}.clk_i == {top}.{w.clock}")
        clk_rst.append(f"{w.name}.rst_ni == {top}.{w.reset}")
    cls = PropertyClass.CONNECTIVITY
    return [
        PropertyIR(cls, f"conn_{top}_input_safety_registers{suffix}", "1", inputs),
        PropertyIR(cls, f"conn_{top}_output_safety_registers{suffix}", "1", outputs),
        PropertyIR(cls, f"conn_{top}_clk_rst_safety_registers{suffix}", "1", tuple(clk_rst)),
    ]


def gen_normal_props(mot: ModelOfThings, plan: MergePlan) -> list[PropertyIR]:
    props = []
    for w in plan.wrappers:
        k = wrapper_index(plan, w)
        props.append(PropertyIR(
            PropertyClass.NORMAL, f"normal_write_{w.name}",
            f"{w.name}.we_i && !`Fault_Active_{k}",
            (f"{w.name}.d_o == $past({w.name}.d_i)", f"{w.name}.err_o == 0"),
            implication="|=>", clocking=_clocking(mot, w)))
    return props


def gen_selftest_props(mot: ModelOfThings, plan: MergePlan) -> list[PropertyIR]:
    window = selftest_window(mot)
    return [
        PropertyIR(
            PropertyClass.SELFTEST, f"selftest_{w.name}", f"{mot.block}.smu_test_trigger_i",
            (f"##[1:{window}] {w.name}.err_o == 1 ##1 {w.name}.test_done_o == 1",),
            clocking=_clocking(mot, w))
        for w in plan.wrappers if w.self_test
    ]


GENERATORS = {
    PropertyClass.PARAMETERS: gen_parameter_props,
    PropertyClass.SAFETY: gen_safety_props,
    PropertyClass.CONNECTIVITY: gen_connectivity_props,
    PropertyClass.NORMAL: gen_normal_props,
    PropertyClass.SELFTEST: gen_selftest_props,
}


def generate_properties(mot: ModelOfThings, plan: MergePlan,
                        classes: tuple[PropertyClass, ...] | None = None) -> list[PropertyIR]:
    wanted = mot.options.classes if classes is None else classes
    props = []
    for cls in CLASS_ORDER:
        if cls in wanted:
            props.extend(GENERATORS[cls](mot, plan))
    return props


# ---------------------------------------------------------------------- SVA view


def render_property(prop: PropertyIR) -> str:
    lines = [f"property {prop.name};"]
    lines += [f"    // {c}" for c in prop.comments]
    if prop.fault_budget is not None:
        lines.append(f"    // fault budget: {prop.fault_budget}")
    if prop.clocking:
        lines.append(f"    {prop.clocking}")
    lines.append(f"    {prop.antecedent} {prop.implication}")
    for i, term in enumerate(prop.terms):
        end = ";" if i == len(prop.terms) - 1 else " &&"
        lines.append(f"    {term}{end}")
    lines.append("endproperty")
    lines.append(f"assert_{prop.name}: assert property ({prop.name});")
    return "\n".join(lines) + "\n"


def sva_filename(block: str, cls: PropertyClass) -> str:
    return f"{block}_{cls.value}.sva"


def _header(mot: ModelOfThings, plan: MergePlan, cls: PropertyClass, count: int) -> str:
    lines = [
        f"// {CLASS_TITLES[cls]} properties for block {mot.block}",
        f"// optimization: {plan.algorithm.value}",
        f"// {count} {'property' if count == 1 else 'properties'} generated",
    ]
    if cls in RECONSTRUCTED:
        lines.append("// reconstructed template: no reference listing exists for this class")
    return "\n".join(lines) + "\n"


def render_macros(mot: ModelOfThings, plan: MergePlan) -> str:
    top = mot.block
    lines = [
        f"// Fault-injection hooks for block {top}.",
        f"// Bound to the checker interface {top}.sff_fi: per-wrapper active flag, injected",
        "// fault weight and the golden data captured before injection.",
        f"`ifndef {top.upper()}_SFF_MACROS_SVH",
        f"`define {top.upper()}_SFF_MACROS_SVH",
    ]
    for k, w in enumerate(plan.wrappers, start=1):
        i = k - 1
        budget = w.method.max_errors
        lines.append(f"`define Fault_Injection_{k} ({top}.sff_fi.active[{i}] && "
                     f"{top}.sff_fi.weight[{i}] inside {{[1:{budget}]}})")
        lines.append(f"`define Fault_Active_{k} ({top}.sff_fi.active[{i}])")
        lines.append(f"`define Fault_Golden_{k} ({top}.sff_fi.golden_{k}[{w.dw - 1}:0])")
    lines.append("`endif")
    return "\n".join(lines) + "\n"


def emit_sva(props: list[PropertyIR], mot: ModelOfThings, plan: MergePlan) -> dict[str, str]:
    """Render properties into one file per class plus the macro header.

    Returns a mapping filename -> text; iteration order is fixed.
    """
    files = {}
    for cls in CLASS_ORDER:
        mine = [p for p in props if p.cls is cls]
        body = "\n".join(render_property(p) for p in mine)
        text = _header(mot, plan, cls, len(mine))
        if body:
            text += "\n" + body
        files[sva_filename(mot.block, cls)] = text
    files[f"{mot.block}_macros.svh"] = render_macros(mot, plan)
    return files


def write_files(files: dict[str, str], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        paths.append(path)
    return paths


# ------------------------------------------------------------------- SVA reader

_PROPERTY_RE = re.compile(r"^property\s+(\w+)\s*;(.*?)^endproperty", re.S | re.M)
_IMPLICATION_RE = re.compile(r"\s(\|->|\|=>)\s*$")
_BUDGET_RE = re.compile(r"^fault budget:\s*(\d+)$")


class SvaParseError(ValueError):
    pass


def parse_sva(text: str, cls: PropertyClass) -> list[PropertyIR]:
    """Read back properties rendered by :func:`render_property`."""
    props = []
    for m in _PROPERTY_RE.finditer(text):
        name, body = m.group(1), m.group(2)
        comments: list[str] = []
        budget = None
        clocking = None
        antecedent = implication = None
        terms: list[str] = []
        for raw in body.splitlines():
            line = raw.strip()
            if not line:
                continue
            if antecedent is None:
                if line.startswith("//"):
                    comment = line[2:].strip()
                    b = _BUDGET_RE.match(comment)
                    if b:
                        budget = int(b.group(1))
                    else:
                        comments.append(comment)
                    continue
                if line.startswith("@("):
                    clocking = line
                    continue
                op = _IMPLICATION_RE.search(" " + line)
                if not op:
                    raise SvaParseError(f"property {name}: expected '|->' or '|=>' in {line!r}")
                implication = op.group(1)
                antecedent = (" " + line)[:op.start()].strip()
                continue
            term = line.rstrip(";").strip()
            if term.endswith("&&"):
                term = term[:-2].strip()
            if term:
                terms.append(term)
        if antecedent is None or not terms:
            raise SvaParseError(f"property {name}: missing antecedent or consequent")
        props.append(PropertyIR(cls, name, antecedent, tuple(terms), implication, clocking,
                                budget, tuple(comments)))
    return props


def read_sva_dir(sva_dir: str | Path, block: str) -> list[PropertyIR]:
    props = []
    for cls in CLASS_ORDER:
        path = Path(sva_dir) / sva_filename(block, cls)
        if path.exists():
            props.extend(parse_sva(path.read_text(), cls))
    return props
