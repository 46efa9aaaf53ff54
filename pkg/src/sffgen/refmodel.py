"""Cycle-based reference model of a safety structure and a bounded property checker.

The structure mirrors the library components: one wrapper per plan wrapper,
one OR-reduction alarm node per clock domain and a single controller that
talks to the SMU and sequences self-tests.

Checks produce a :class:`CheckReport`; failing reports carry a trace of
``(cycle, signal, value)`` events that :func:`replay_trace` re-simulates.
Trace signals prefixed ``in:`` are stimulus, ``pre:`` are stored-data
preloads applied before cycle 0, ``term`` names the failing consequent term;
everything else is an observation.
"""

from __future__ import annotations

import copy
import enum
import json
import random
import re
import zlib
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Any, Callable, Iterator

from . import ecc
from .ecc import CodeGeometry, ProtectionMethod, error_state_count
from .optimizer import MergePlan, SliceMapEntry, validate_plan
from .propgen import PropertyIR
from .spec_model import ModelOfThings, PropertyClass

DEFAULT_SEED = 20250101
TRIGGER = "smu_test_trigger_i"


class ElaborationError(ValueError):
    pass


class CheckError(ValueError):
    """Property references a signal the structure does not have."""


class MutationError(ValueError):
    pass


class Verdict(str, enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    VACUOUS = "Vacuous"


class MutationKind(str, enum.Enum):
    DROPPED_SLICE = "DroppedSlice"
    SWAPPED_SLICES = "SwappedSlices"
    WRONG_WIDTH = "WrongWidth"
    CLOCK_MISWIRE = "ClockMiswire"
    RESET_MISWIRE = "ResetMiswire"


# class expected to catch each defect
MUTATION_CLASS = {
    MutationKind.DROPPED_SLICE: PropertyClass.CONNECTIVITY,
    MutationKind.SWAPPED_SLICES: PropertyClass.CONNECTIVITY,
    MutationKind.WRONG_WIDTH: PropertyClass.PARAMETERS,
    MutationKind.CLOCK_MISWIRE: PropertyClass.CONNECTIVITY,
    MutationKind.RESET_MISWIRE: PropertyClass.CONNECTIVITY,
}


@dataclass
class WrapperState:
    name: str
    geometry: CodeGeometry
    clock: str
    reset: str
    self_test: bool
    reset_value: int
    codeword: int = 0
    test_state: str = "idle"

    @property
    def dw(self) -> int:
        return self.geometry.data_width

    @property
    def method(self) -> ProtectionMethod:
        return self.geometry.method

    def store(self, data: int) -> None:
        self.codeword = ecc.encode(self.method, data & ((1 << self.dw) - 1), self.dw)

    def read(self, fault_mask: int = 0) -> tuple[int, bool, bool]:
        """(d_o, err_o, cor_o) seen through ``fault_mask`` and any self-test fault."""
        if self.test_state == "running":
            fault_mask ^= 1
        seen = (self.codeword ^ fault_mask) & ((1 << self.geometry.total_width) - 1)
        return ecc.decode(self.method, seen, self.dw)


@dataclass
class AlarmNode:
    domain: str
    children: tuple[str, ...]
    reduced_alarm: bool = False


@dataclass
class ControllerState:
    domains: tuple[str, ...]
    error_flag_to_smu: bool = False
    test_trigger: bool = False
    # domain -> cycles until its test_i pulse
    pending: dict[str, int] = field(default_factory=dict)


@dataclass
class SafetyStructure:
    block: str
    clocks: tuple[str, ...]
    resets: tuple[str, ...]
    registers: dict[str, int]
    wrappers: list[WrapperState]
    slices: tuple[SliceMapEntry, ...]
    # (wrapper, dest bit) -> (register, source bit)
    in_map: dict[tuple[str, int], tuple[str, int]]
    # (register, source bit) -> (wrapper, dest bit)
    out_map: dict[tuple[str, int], tuple[str, int]]
    alarms: list[AlarmNode]
    controller: ControllerState
    cycle: int = 0
    mutations: list[str] = field(default_factory=list)

    def wrapper(self, name: str) -> WrapperState:
        for w in self.wrappers:
            if w.name == name:
                return w
        raise CheckError(f"unknown wrapper {name!r}")

    def clone(self) -> SafetyStructure:
        """Copy of the mutable simulation state; wiring maps are shared."""
        return replace(
            self,
            wrappers=[replace(w) for w in self.wrappers],
            alarms=[replace(a) for a in self.alarms],
            controller=replace(self.controller, pending=dict(self.controller.pending)),
        )


def elaborate(mot: ModelOfThings, plan: MergePlan) -> SafetyStructure:
    """Build the wired safety structure for a MoT and its merge plan."""
    diags = validate_plan(mot, plan)
    if diags:
        raise ElaborationError(f"plan does not match specification: {diags[0]}")
    registers = {r.name: r.width for r in mot.registers}
    resets = {r.name: r.reset_value for r in mot.registers}
    in_map, out_map = {}, {}
    reset_values = {w.name: 0 for w in plan.wrappers}
    for e in plan.mapping:
        for k in range(e.width):
            in_map[(e.wrapper, e.dest_lsb + k)] = (e.register, e.lsb + k)
            out_map[(e.register, e.lsb + k)] = (e.wrapper, e.dest_lsb + k)
            if (resets[e.register] >> (e.lsb + k)) & 1:
                reset_values[e.wrapper] |= 1 << (e.dest_lsb + k)
    wrappers = []
    for w in plan.wrappers:
        state = WrapperState(w.name, CodeGeometry.of(w.method, w.dw), w.clock, w.reset,
                             w.self_test, reset_values[w.name])
        state.store(state.reset_value)
        wrappers.append(state)
    domains = sorted({w.clock for w in plan.wrappers})
    alarms = [AlarmNode(d, tuple(w.name for w in plan.wrappers if w.clock == d))
              for d in domains]
    clocks = tuple(mot.clocks)
    return SafetyStructure(mot.block, clocks, tuple(mot.resets), registers, wrappers,
                           plan.mapping, in_map, out_map, alarms, ControllerState(clocks))


def _wrapper_input(s: SafetyStructure, w: WrapperState, inputs: dict[str, int]) -> int:
    value = 0
    for b in range(w.dw):
        src = s.in_map.get((w.name, b))
        if src is not None and (inputs.get(f"{src[0]}_i", 0) >> src[1]) & 1:
            value |= 1 << b
    return value


def step(structure: SafetyStructure, inputs: dict[str, int],
         ) -> tuple[SafetyStructure, dict[str, int]]:
    """Advance one clock cycle.

    Outputs are combinational functions of the state at the start of the cycle
    and of ``inputs``; state updates happen at the closing clock edge.
    Missing inputs default to 0, except resets (active low) which default to 1.
    """
    s = structure.clone()
    out: dict[str, int] = {}
    test_now = {d for d, n in s.controller.pending.items() if n == 0}
    d_o: dict[str, int] = {}
    err: dict[str, bool] = {}
    for w in s.wrappers:
        d_in = _wrapper_input(s, w, inputs)
        data, e, c = w.read(inputs.get(f"fault.{w.name}", 0))
        d_o[w.name], err[w.name] = data, e
        out[f"{w.name}.d_i"] = d_in
        out[f"{w.name}.d_o"] = data
        out[f"{w.name}.err_o"] = int(e)
        out[f"{w.name}.cor_o"] = int(c)
        out[f"{w.name}.test_done_o"] = int(w.test_state == "done")
        out[f"{w.name}.test_i"] = int(w.self_test and w.clock in test_now)
    for reg, width in s.registers.items():
        value = 0
        for b in range(width):
            dst = s.out_map.get((reg, b))
            if dst is not None and (d_o.get(dst[0], 0) >> dst[1]) & 1:
                value |= 1 << b
        out[f"{reg}_o"] = value
    for node in s.alarms:
        node.reduced_alarm = any(err.get(c, False) for c in node.children)
        out[f"alarm.{node.domain}"] = int(node.reduced_alarm)
    s.controller.error_flag_to_smu = any(n.reduced_alarm for n in s.alarms)
    out["smu_err_o"] = int(s.controller.error_flag_to_smu)

    # clock edge
    for w in s.wrappers:
        if w.clock not in s.clocks:
            continue  # tied-off clock never ticks
        if w.reset in s.resets and not inputs.get(w.reset, 1):
            w.store(w.reset_value)
            w.test_state = "idle"
            continue
        if inputs.get("we", 0):
            w.store(out[f"{w.name}.d_i"])
        if w.test_state == "running":
            w.test_state = "done"
        elif w.test_state == "done":
            w.test_state = "idle"
        elif out[f"{w.name}.test_i"]:
            w.test_state = "running"
    ctrl = s.controller
    ctrl.pending = {d: n - 1 for d, n in ctrl.pending.items() if n > 0}
    ctrl.test_trigger = bool(inputs.get(TRIGGER, 0))
    if ctrl.test_trigger:
        ctrl.pending = {d: j for j, d in enumerate(ctrl.domains)}
    s.cycle += 1
    return s, out


# ------------------------------------------------------------------- scenarios


@dataclass
class Scenario:
    preload: dict[str, int] = field(default_factory=dict)
    inputs: list[dict[str, int]] = field(default_factory=list)


def simulate(structure: SafetyStructure, scenario: Scenario) -> list[dict[str, int]]:
    s = structure.clone()
    for name, data in scenario.preload.items():
        s.wrapper(name).store(data)
    outputs = []
    for inputs in scenario.inputs:
        s, out = step(s, inputs)
        outputs.append(out)
    return outputs


def _scenario_trace(scenario: Scenario) -> list[tuple[int, str, Any]]:
    trace: list[tuple[int, str, Any]] = [(0, f"pre:{w}", v) for w, v in scenario.preload.items()]
    for cycle, inputs in enumerate(scenario.inputs):
        trace += [(cycle, f"in:{k}", v) for k, v in sorted(inputs.items())]
    return trace


def _trace_scenario(trace: list[tuple[int, str, Any]]) -> Scenario:
    scenario = Scenario()
    cycles = max((c for c, _, _ in trace), default=0) + 1
    scenario.inputs = [{} for _ in range(cycles)]
    for cycle, signal, value in trace:
        if signal.startswith("pre:"):
            scenario.preload[signal[4:]] = value
        elif signal.startswith("in:"):
            scenario.inputs[cycle][signal[3:]] = value
    return scenario


# ------------------------------------------------------------------------ terms

_IDENT = r"[A-Za-z_]\w*"
_TERM_PATTERNS = {
    "param": re.compile(rf"^({_IDENT})\.dw == (\d+)$"),
    "conn_in": re.compile(
        rf"^({_IDENT})\.({_IDENT})_i\[(\d+):(\d+)\] == ({_IDENT})\.d_i\[(\d+):(\d+)\]$"),
    "conn_out": re.compile(
        rf"^({_IDENT})\.d_o\[(\d+):(\d+)\] == ({_IDENT})\.({_IDENT})_o\[(\d+):(\d+)\]$"),
    "net": re.compile(rf"^({_IDENT})\.(clk_i|rst_ni) == ({_IDENT})\.({_IDENT})$"),
    "err": re.compile(rf"^({_IDENT})\.err_o == ([01])$"),
    "corr": re.compile(rf"^\(!({_IDENT})\.cor_o \|\| ({_IDENT})\.d_o == `Fault_Golden_(\d+)\)$"),
    "past": re.compile(rf"^({_IDENT})\.d_o == \$past\(({_IDENT})\.d_i\)$"),
    "selftest": re.compile(
        rf"^##\[1:(\d+)\] ({_IDENT})\.err_o == 1 ##1 ({_IDENT})\.test_done_o == 1$"),
}


@dataclass(frozen=True)
class Term:
    kind: str
    args: tuple[Any, ...]
    text: str


def parse_term(text: str, s: SafetyStructure) -> Term:
    for kind, pattern in _TERM_PATTERNS.items():
        m = pattern.match(text.strip())
        if m:
            args = tuple(int(g) if g.isdigit() else g for g in m.groups())
            _resolve(kind, args, s, text)
            return Term(kind, args, text)
    raise CheckError(f"unsupported property term {text!r}")


def _resolve(kind: str, args: tuple[Any, ...], s: SafetyStructure, text: str) -> None:
    def reg(top: str, name: str, msb: int, lsb: int) -> None:
        if top != s.block:
            raise CheckError(f"unknown top-level instance {top!r} in {text!r}")
        if name not in s.registers:
            raise CheckError(f"unknown register port {name!r} in {text!r}")
        if not 0 <= lsb <= msb < s.registers[name]:
            raise CheckError(f"slice out of range in {text!r}")

    if kind == "conn_in":
        reg(args[0], args[1], args[2], args[3])
        s.wrapper(args[4])
    elif kind == "conn_out":
        s.wrapper(args[0])
        reg(args[3], args[4], args[5], args[6])
    elif kind == "net":
        s.wrapper(args[0])
        if args[2] != s.block:
            raise CheckError(f"unknown top-level instance {args[2]!r} in {text!r}")
    elif kind == "selftest":
        s.wrapper(args[1])
        s.wrapper(args[2])
    else:
        for a in args:
            if isinstance(a, str):
                s.wrapper(a)


# ------------------------------------------------------------------------ check


@dataclass(frozen=True)
class CheckBudget:
    exhaustive_limit: int = 13
    data_exhaustive_limit: int = 8
    samples: int = 256
    seed: int = DEFAULT_SEED


@dataclass
class CheckReport:
    property: str
    cls: PropertyClass
    verdict: Verdict
    trace: list[tuple[int, str, Any]] = field(default_factory=list)
    states_explored: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "property": self.property,
            "class": self.cls.value,
            "verdict": self.verdict.value,
            "states_explored": self.states_explored,
            "trace": [{"cycle": c, "signal": s, "value": v} for c, s, v in self.trace],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CheckReport:
        return cls(data["property"], PropertyClass(data["class"]), Verdict(data["verdict"]),
                   [(t["cycle"], t["signal"], t["value"]) for t in data.get("trace", [])],
                   data.get("states_explored", 0))


def _rng(budget: CheckBudget, name: str) -> random.Random:
    return random.Random(budget.seed ^ zlib.crc32(name.encode()))


def _data_values(width: int, budget: CheckBudget, rng: random.Random) -> Iterator[int]:
    if width <= budget.data_exhaustive_limit:
        yield from range(1 << width)
    else:
        for _ in range(budget.samples):
            yield rng.getrandbits(width)


# An evaluator inspects one simulated scenario and returns the index of the
# first violated term, or None.
Evaluator = Callable[[SafetyStructure, list[Term], Scenario, list[dict[str, int]]], "int | None"]


def _bit(value: int, i: int) -> int:
    return (value >> i) & 1


def _eval_static(s: SafetyStructure, terms: list[Term], which: int) -> tuple[bool, Any, str]:
    """Evaluate a structural term; returns (holds, observed value, signal)."""
    t = terms[which]
    if t.kind == "param":
        w = s.wrapper(t.args[0])
        return w.dw == t.args[1], w.dw, f"{w.name}.dw"
    w = s.wrapper(t.args[0])
    port, net = t.args[1], t.args[3]
    actual = w.clock if port == "clk_i" else w.reset
    return actual == net, f"{s.block}.{actual}", f"{w.name}.{port}"


def _eval_conn(s: SafetyStructure, terms: list[Term], scenario: Scenario,
               out: list[dict[str, int]]) -> int | None:
    for i, t in enumerate(terms):
        if t.kind == "conn_in":
            _, reg, msb, lsb, w, dmsb, dlsb = t.args
            src, dst = scenario.inputs[0].get(f"{reg}_i", 0), out[0][f"{w}.d_i"]
            if any(_bit(src, lsb + k) != _bit(dst, dlsb + k) for k in range(msb - lsb + 1)):
                return i
        elif t.kind == "conn_out":
            w, dmsb, dlsb, _, reg, msb, lsb = t.args
            src, dst = out[0][f"{w}.d_o"], out[0][f"{reg}_o"]
            if any(_bit(src, dlsb + k) != _bit(dst, lsb + k) for k in range(msb - lsb + 1)):
                return i
    return None


def _eval_safety(s: SafetyStructure, terms: list[Term], scenario: Scenario,
                 out: list[dict[str, int]]) -> int | None:
    golden = next(iter(scenario.preload.values()))
    for i, t in enumerate(terms):
        if t.kind == "err":
            if out[0][f"{t.args[0]}.err_o"] != t.args[1]:
                return i
        elif t.kind == "corr":
            w = t.args[0]
            if out[0][f"{w}.cor_o"] and out[0][f"{t.args[1]}.d_o"] != golden:
                return i
    return None


def _eval_normal(s: SafetyStructure, terms: list[Term], scenario: Scenario,
                 out: list[dict[str, int]]) -> int | None:
    for i, t in enumerate(terms):
        if t.kind == "past":
            if out[1][f"{t.args[0]}.d_o"] != out[0][f"{t.args[1]}.d_i"]:
                return i
        elif t.kind == "err":
            if out[1][f"{t.args[0]}.err_o"] != t.args[1]:
                return i
    return None


def _eval_selftest(s: SafetyStructure, terms: list[Term], scenario: Scenario,
                   out: list[dict[str, int]]) -> int | None:
    for i, t in enumerate(terms):
        window, w_err, w_done = t.args
        ok = any(out[c][f"{w_err}.err_o"] and out[c + 1][f"{w_done}.test_done_o"]
                 for c in range(1, window + 1) if c + 1 < len(out))
        if not ok:
            return i
    return None


_EVALUATORS: dict[PropertyClass, Evaluator] = {
    PropertyClass.CONNECTIVITY: _eval_conn,
    PropertyClass.SAFETY: _eval_safety,
    PropertyClass.NORMAL: _eval_normal,
    PropertyClass.SELFTEST: _eval_selftest,
}

_OBSERVED = {
    "conn_in": lambda a: [f"{a[1]}_i", f"{a[4]}.d_i"],
    "conn_out": lambda a: [f"{a[0]}.d_o", f"{a[4]}_o"],
    "err": lambda a: [f"{a[0]}.err_o"],
    "corr": lambda a: [f"{a[0]}.cor_o", f"{a[1]}.d_o"],
    "past": lambda a: [f"{a[1]}.d_i", f"{a[0]}.d_o"],
    "selftest": lambda a: [f"{a[1]}.err_o", f"{a[2]}.test_done_o"],
}


def _fail_trace(scenario: Scenario, out: list[dict[str, int]], term: Term,
                index: int) -> list[tuple[int, str, Any]]:
    trace = [(0, "term", index)] + _scenario_trace(scenario)
    signals = _OBSERVED.get(term.kind, lambda a: [])(term.args)
    for cycle, values in enumerate(out):
        trace += [(cycle, sig, values[sig]) for sig in signals if sig in values]
    return trace


def _scenarios(s: SafetyStructure, prop: PropertyIR, terms: list[Term],
               budget: CheckBudget) -> Iterator[Scenario]:
    rng = _rng(budget, prop.name)
    if prop.cls is PropertyClass.CONNECTIVITY:
        for t in terms:
            if t.kind == "conn_in":
                _, reg, msb, lsb, *_ = t.args
                for k in range(msb - lsb + 1):
                    yield Scenario({}, [{f"{reg}_i": 1 << (lsb + k)}])
            elif t.kind == "conn_out":
                w, dmsb, dlsb, *_ = t.args
                # every other wrapper cleared so reset values can't mask a miswire
                for k in range(dmsb - dlsb + 1):
                    preload = {x.name: 0 for x in s.wrappers}
                    preload[w] = 1 << (dlsb + k)
                    yield Scenario(preload, [{}])
    elif prop.cls is PropertyClass.SAFETY:
        m = re.match(r"^`Fault_Injection_(\d+)$", prop.antecedent)
        if not m or not 1 <= int(m.group(1)) <= len(s.wrappers):
            raise CheckError(f"unknown fault-injection target {prop.antecedent!r}")
        w = s.wrappers[int(m.group(1)) - 1]
        n = w.geometry.total_width
        weights = range(1, min(prop.fault_budget or 0, n) + 1)
        if n <= budget.exhaustive_limit:
            masks = [sum(1 << p for p in pos) for k in weights for pos in combinations(range(n), k)]
            for data in range(1 << w.dw):
                for mask in masks:
                    yield Scenario({w.name: data}, [{f"fault.{w.name}": mask}])
        elif weights:
            for _ in range(budget.samples):
                k = rng.choice(weights)
                mask = sum(1 << p for p in rng.sample(range(n), k))
                yield Scenario({w.name: rng.getrandbits(w.dw)}, [{f"fault.{w.name}": mask}])
    elif prop.cls is PropertyClass.NORMAL:
        w = s.wrapper(terms[0].args[0])
        for data in _data_values(w.dw, budget, rng):
            yield Scenario({}, [_drive(s, w, data, we=1), {}])
    elif prop.cls is PropertyClass.SELFTEST:
        w = s.wrapper(terms[0].args[1])
        window = max(t.args[0] for t in terms)
        for data in _data_values(w.dw, budget, rng):
            yield Scenario({w.name: data}, [{TRIGGER: 1}] + [{} for _ in range(window + 1)])


def _drive(s: SafetyStructure, w: WrapperState, data: int, we: int) -> dict[str, int]:
    """Top-level inputs that present ``data`` on the wrapper's d_i where wired."""
    inputs = {"we": we}
    for b in range(w.dw):
        src = s.in_map.get((w.name, b))
        if src is not None and _bit(data, b):
            key = f"{src[0]}_i"
            inputs[key] = inputs.get(key, 0) | (1 << src[1])
    return inputs


def check_property(structure: SafetyStructure, prop: PropertyIR,
                   budget: CheckBudget = CheckBudget()) -> CheckReport:
    """Bounded check of one property against the structure."""
    terms = [parse_term(t, structure) for t in prop.terms]
    if prop.antecedent.strip() == "0":
        return CheckReport(prop.name, prop.cls, Verdict.VACUOUS)
    explored = 0
    # structural terms
    for i, t in enumerate(terms):
        if t.kind in ("param", "net"):
            explored += 1
            holds, observed, signal = _eval_static(structure, terms, i)
            if not holds:
                return CheckReport(prop.name, prop.cls, Verdict.FAIL,
                                   [(0, "term", i), (0, signal, observed)], explored)
    evaluator = _EVALUATORS.get(prop.cls)
    if prop.cls is PropertyClass.SAFETY and _single_wrapper(terms):
        return _check_safety_fast(structure, prop, terms, budget, explored)
    if evaluator is not None:
        for scenario in _scenarios(structure, prop, terms, budget):
            explored += 1
            out = simulate(structure, scenario)
            failed = evaluator(structure, terms, scenario, out)
            if failed is not None:
                return CheckReport(prop.name, prop.cls, Verdict.FAIL,
                                   _fail_trace(scenario, out, terms[failed], failed), explored)
    if explored == 0:
        return CheckReport(prop.name, prop.cls, Verdict.VACUOUS)
    return CheckReport(prop.name, prop.cls, Verdict.PASS, [], explored)


def _single_wrapper(terms: list[Term]) -> bool:
    names = {a for t in terms for a in t.args if isinstance(a, str)}
    return len(names) == 1 and all(t.kind in ("err", "corr") for t in terms)


def _check_safety_fast(structure: SafetyStructure, prop: PropertyIR, terms: list[Term],
                       budget: CheckBudget, explored: int) -> CheckReport:
    """Safety checking on the wrapper alone: encode once per data word, decode per mask.

    Only the targeted wrapper's outputs feed the safety terms, so this matches a
    full simulation; a failing case is re-simulated to produce the trace.
    """
    name = terms[0].args[0]
    w = structure.wrapper(name)
    for scenario in _scenarios(structure, prop, terms, budget):
        explored += 1
        if scenario.preload.keys() != {name}:
            out = simulate(structure, scenario)
        else:
            probe = replace(w)
            probe.store(scenario.preload[name])
            d_o, err, cor = probe.read(scenario.inputs[0].get(f"fault.{name}", 0))
            out = [{f"{name}.d_o": d_o, f"{name}.err_o": int(err), f"{name}.cor_o": int(cor)}]
        failed = _eval_safety(structure, terms, scenario, out)
        if failed is not None:
            out = simulate(structure, scenario)
            return CheckReport(prop.name, prop.cls, Verdict.FAIL,
                               _fail_trace(scenario, out, terms[failed], failed), explored)
    if explored == 0:
        return CheckReport(prop.name, prop.cls, Verdict.VACUOUS)
    return CheckReport(prop.name, prop.cls, Verdict.PASS, [], explored)


def replay_trace(structure: SafetyStructure, prop: PropertyIR,
                 trace: list[tuple[int, str, Any]]) -> Verdict:
    """Re-simulate a failing trace; returns Fail iff the violation reproduces."""
    terms = [parse_term(t, structure) for t in prop.terms]
    which = next(v for _, sig, v in trace if sig == "term")
    if terms[which].kind in ("param", "net"):
        holds, _, _ = _eval_static(structure, terms, which)
        return Verdict.PASS if holds else Verdict.FAIL
    scenario = _trace_scenario([e for e in trace if e[1] != "term"])
    out = simulate(structure, scenario)
    failed = _EVALUATORS[prop.cls](structure, terms, scenario, out)
    return Verdict.FAIL if failed is not None else Verdict.PASS


def check_all(structure: SafetyStructure, props: list[PropertyIR],
              budget: CheckBudget = CheckBudget()) -> list[CheckReport]:
    return [check_property(structure, p, budget) for p in props]


def safety_case_count(structure: SafetyStructure, wrapper: str, budget: int) -> int:
    w = structure.wrapper(wrapper)
    return error_state_count(w.dw, w.geometry.redundant_bits, budget)


# --------------------------------------------------------------------- mutation


def inject_mutation(structure: SafetyStructure, kind: MutationKind | str,
                    seed: int = DEFAULT_SEED) -> SafetyStructure:
    """Return a copy of the structure carrying exactly one seeded defect."""
    kind = MutationKind(kind)
    s = copy.deepcopy(structure)
    rng = random.Random(seed)
    if not s.wrappers:
        raise MutationError(f"{kind.value} needs at least one wrapper")

    if kind is MutationKind.DROPPED_SLICE:
        e = rng.choice(s.slices)
        side = rng.choice(("input", "output"))
        for k in range(e.width):
            if side == "input":
                s.in_map.pop((e.wrapper, e.dest_lsb + k), None)
            else:
                s.out_map.pop((e.register, e.lsb + k), None)
        s.mutations.append(f"{kind.value}: {side} {e.register}[{e.msb}:{e.lsb}] unwired")
    elif kind is MutationKind.SWAPPED_SLICES:
        if len(s.slices) < 2:
            raise MutationError("SwappedSlices needs at least two slices")
        a, b = rng.sample(list(s.slices), 2)
        side = rng.choice(("input", "output"))
        for k in range(min(a.width, b.width)):
            if side == "input":
                ka, kb = (a.wrapper, a.dest_lsb + k), (b.wrapper, b.dest_lsb + k)
                s.in_map[ka], s.in_map[kb] = s.in_map[kb], s.in_map[ka]
            else:
                ka, kb = (a.register, a.lsb + k), (b.register, b.lsb + k)
                s.out_map[ka], s.out_map[kb] = s.out_map[kb], s.out_map[ka]
        s.mutations.append(f"{kind.value}: {side} {a.register}[{a.msb}:{a.lsb}] <-> "
                           f"{b.register}[{b.msb}:{b.lsb}]")
    elif kind is MutationKind.WRONG_WIDTH:
        w = rng.choice(s.wrappers)
        data, _, _ = w.read()
        w.geometry = CodeGeometry.of(w.method, w.dw + 1)
        w.store(data)
        s.mutations.append(f"{kind.value}: {w.name}.dw {w.dw - 1} -> {w.dw}")
    else:
        w = rng.choice(s.wrappers)
        attr, nets = ("clock", s.clocks) if kind is MutationKind.CLOCK_MISWIRE \
            else ("reset", s.resets)
        current = getattr(w, attr)
        others = [n for n in nets if n != current]
        wrong = rng.choice(others) if others else f"{current}_unconnected"
        setattr(w, attr, wrong)
        s.mutations.append(f"{kind.value}: {w.name} {attr} {current} -> {wrong}")
    return s
