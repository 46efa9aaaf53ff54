"""Merging of protected ranges into wrapper instances.

Two strategies are provided:

* :func:`pack_bfd` - best-fit decreasing bin packing, chunks are never split.
* :func:`pack_ilp` - exact area-minimal covering of the protected bits by a
  multiset of wrapper widths, chunks may be split across wrappers.

Both work per compatibility group; chunks with different protection method,
clock, reset or self-test setting never share a wrapper.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby
from pathlib import Path
from typing import Any, Iterable, Mapping

from .ecc import ProtectionMethod, redundant_bits
from .spec_model import Algorithm, Diagnostic, ModelOfThings, dumps

CompatKey = tuple[str, str, str, bool]

WRAPPER_PREFIX = "sff_wrapper_"

# builtin-paper table: per-instance overhead (alarm and controller hookup)
PAPER_INSTANCE_OVERHEAD = 8
PAPER_QUADRATIC = Fraction(1, 20)


class OptimizerError(ValueError):
    pass


@dataclass(frozen=True)
class Chunk:
    register: str
    msb: int
    lsb: int
    method: ProtectionMethod = ProtectionMethod.SECDED
    clock: str = "clk"
    reset: str = "rst_n"
    self_test: bool = False
    index: int = 0

    @property
    def size(self) -> int:
        return self.msb - self.lsb + 1

    @property
    def compat_key(self) -> CompatKey:
        return (self.method.value, self.clock, self.reset, self.self_test)


@dataclass(frozen=True)
class Wrapper:
    name: str
    dw: int
    method: ProtectionMethod = ProtectionMethod.SECDED
    clock: str = "clk"
    reset: str = "rst_n"
    self_test: bool = False


@dataclass(frozen=True)
class SliceMapEntry:
    register: str
    msb: int
    lsb: int
    wrapper: str
    dest_msb: int
    dest_lsb: int

    @property
    def width(self) -> int:
        return self.msb - self.lsb + 1


@dataclass(frozen=True)
class MergePlan:
    algorithm: Algorithm
    wrappers: tuple[Wrapper, ...] = ()
    mapping: tuple[SliceMapEntry, ...] = ()
    total_area: float | None = None

    def wrapper(self, name: str) -> Wrapper:
        for w in self.wrappers:
            if w.name == name:
                return w
        raise KeyError(name)

    def slices_of(self, wrapper: str) -> list[SliceMapEntry]:
        return [e for e in self.mapping if e.wrapper == wrapper]


# ---------------------------------------------------------------- cost tables


class CostTable(dict):
    """Mapping width -> area in cost units (exact Fractions)."""

    def require(self, widths: Iterable[int]) -> None:
        missing = sorted(w for w in set(widths) if w not in self)
        if missing:
            raise OptimizerError(f"cost table has no entry for widths {missing}")


def builtin_cost_table(name: str, max_width: int) -> CostTable:
    """``builtin-linear``: flip-flop count of a SECDED wrapper.
    ``builtin-paper``: flip-flops plus instance overhead and a quadratic
    encoder/decoder logic term; calibrated so that 34 bits split as 17 + 17.
    """
    rb = {w: redundant_bits(ProtectionMethod.SECDED, w) for w in range(1, max_width + 1)}
    if name == "builtin-linear":
        return CostTable({w: Fraction(w + rb[w]) for w in rb})
    if name == "builtin-paper":
        return CostTable({w: PAPER_INSTANCE_OVERHEAD + w + rb[w] + PAPER_QUADRATIC * w * w
                          for w in rb})
    raise OptimizerError(f"unknown builtin cost table {name!r}")


def read_cost_table(path: str | Path) -> CostTable:
    """Read a ``width,area`` CSV (header required)."""
    table = CostTable()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["width", "area"]:
            raise OptimizerError(f"{path}: header must be 'width,area'")
        for lineno, row in enumerate(reader, start=2):
            try:
                width = int(row["width"])
                area = Fraction(row["area"].strip())
            except (TypeError, ValueError):
                raise OptimizerError(f"{path}:{lineno}: malformed row {row}") from None
            if width < 1 or area <= 0:
                raise OptimizerError(f"{path}:{lineno}: width and area must be positive")
            table[width] = area
    return table


def load_cost_table(spec: str, max_width: int) -> CostTable:
    if spec.startswith("builtin-"):
        return builtin_cost_table(spec, max_width)
    return read_cost_table(spec)


# -------------------------------------------------------------------- chunks


def chunks_from_mot(mot: ModelOfThings) -> list[Chunk]:
    return [Chunk(p.register, p.msb, p.lsb, p.method, p.clock, p.reset, p.self_test, p.index)
            for p in mot.protections]


def _groups(chunks: Iterable[Chunk]) -> list[list[Chunk]]:
    ordered = sorted(chunks, key=lambda c: (c.compat_key, c.index))
    return [list(g) for _, g in groupby(ordered, key=lambda c: c.compat_key)]


def _decreasing(chunks: Iterable[Chunk]) -> list[Chunk]:
    return sorted(chunks, key=lambda c: (-c.size, c.index))


def _new_wrapper(k: int, dw: int, proto: Chunk) -> Wrapper:
    return Wrapper(f"{WRAPPER_PREFIX}{k}", dw, proto.method, proto.clock, proto.reset,
                   proto.self_test)


def identity_plan(chunks: list[Chunk]) -> MergePlan:
    """Original design: one wrapper per protected range, declaration order."""
    wrappers, mapping = [], []
    for k, c in enumerate(sorted(chunks, key=lambda c: c.index), start=1):
        w = _new_wrapper(k, c.size, c)
        wrappers.append(w)
        mapping.append(SliceMapEntry(c.register, c.msb, c.lsb, w.name, c.size - 1, 0))
    return MergePlan(Algorithm.NONE, tuple(wrappers), tuple(mapping))


def pack_bfd(chunks: list[Chunk], max_width: int) -> MergePlan:
    """Best-fit decreasing: largest chunk first into the tightest bin that fits."""
    for c in chunks:
        if c.size > max_width:
            raise OptimizerError(
                f"chunk {c.register}[{c.msb}:{c.lsb}] of {c.size} bits exceeds max width "
                f"{max_width}")
    wrappers: list[Wrapper] = []
    mapping: list[SliceMapEntry] = []
    for group in _groups(chunks):
        # each bin: [fill, [chunks in placement order]]
        bins: list[list[Any]] = []
        for c in _decreasing(group):
            best = None
            for i, b in enumerate(bins):
                residual = max_width - b[0]
                if c.size <= residual and (best is None or residual < max_width - bins[best][0]):
                    best = i
            if best is None:
                bins.append([0, []])
                best = len(bins) - 1
            bins[best][0] += c.size
            bins[best][1].append(c)
        for fill, placed in bins:
            w = _new_wrapper(len(wrappers) + 1, fill, group[0])
            wrappers.append(w)
            offset = 0
            for c in placed:
                mapping.append(SliceMapEntry(c.register, c.msb, c.lsb, w.name,
                                             offset + c.size - 1, offset))
                offset += c.size
    return MergePlan(Algorithm.BFD, tuple(wrappers), tuple(mapping))


def optimal_widths(total: int, max_width: int, costs: Mapping[int, Fraction]) -> tuple[int, ...]:
    """Cheapest multiset of widths summing exactly to ``total``, largest first.

    Ties go to fewer wrappers, then to the lexicographically largest
    descending width tuple. Unbounded-knapsack DP where level ``m`` allows
    parts <= m; preferring to take ``m`` on ties realises the tie-break.
    """
    if total == 0:
        return ()
    widths = [w for w in range(1, max_width + 1) if w in costs]
    best: list[tuple[Fraction, int] | None] = [(Fraction(0), 0)] + [None] * total
    takes: set[tuple[int, int]] = set()
    for m in widths:
        for t in range(m, total + 1):
            prev = best[t - m]
            if prev is None:
                continue
            cand = (prev[0] + costs[m], prev[1] + 1)
            if best[t] is None or cand <= best[t]:
                best[t] = cand
                takes.add((m, t))
    if best[total] is None:
        raise OptimizerError(f"no exact cover of {total} bits with widths {widths}")
    result = []
    t, i = total, len(widths) - 1
    while t:
        if (widths[i], t) in takes:
            result.append(widths[i])
            t -= widths[i]
        else:
            i -= 1
    return tuple(result)


def pack_ilp(chunks: list[Chunk], max_width: int, costs: Mapping[int, Fraction]) -> MergePlan:
    """Exact area-minimizing covering; chunks are split at wrapper boundaries."""
    if max_width < 1:
        raise OptimizerError("max width must be >= 1")
    if chunks:
        CostTable(costs).require(range(1, max_width + 1))
    wrappers: list[Wrapper] = []
    mapping: list[SliceMapEntry] = []
    for group in _groups(chunks):
        total = sum(c.size for c in group)
        bins = sorted(optimal_widths(total, max_width, costs), reverse=True)
        group_wrappers = []
        for dw in bins:
            w = _new_wrapper(len(wrappers) + 1, dw, group[0])
            wrappers.append(w)
            group_wrappers.append(w)
        k, offset = 0, 0
        for c in _decreasing(group):
            lsb = c.lsb
            while lsb <= c.msb:
                w = group_wrappers[k]
                take = min(c.msb - lsb + 1, w.dw - offset)
                mapping.append(SliceMapEntry(c.register, lsb + take - 1, lsb, w.name,
                                             offset + take - 1, offset))
                lsb += take
                offset += take
                if offset == w.dw:
                    k, offset = k + 1, 0
    return MergePlan(Algorithm.ILP, tuple(wrappers), tuple(mapping))


def plan_area(plan: MergePlan, costs: Mapping[int, Fraction]) -> Fraction:
    CostTable(costs).require(w.dw for w in plan.wrappers)
    return sum((Fraction(costs[w.dw]) for w in plan.wrappers), Fraction(0))


def optimize(mot: ModelOfThings, algorithm: Algorithm | None = None,
             max_width: int | None = None, costs: Mapping[int, Fraction] | None = None,
             ) -> MergePlan:
    """Produce the MergePlan for a MoT; arguments override the MoT options."""
    algorithm = mot.options.algorithm if algorithm is None else Algorithm(algorithm)
    max_width = mot.options.max_width if max_width is None else max_width
    if costs is None:
        costs = load_cost_table(mot.options.cost_table, max_width)
    chunks = chunks_from_mot(mot)
    if algorithm is Algorithm.BFD:
        plan = pack_bfd(chunks, max_width)
    elif algorithm is Algorithm.ILP:
        plan = pack_ilp(chunks, max_width, costs)
    else:
        plan = identity_plan(chunks)
    area = None
    if all(w.dw in costs for w in plan.wrappers):
        area = float(plan_area(plan, costs))
    return MergePlan(plan.algorithm, plan.wrappers, plan.mapping, area)


def crosscheck_plans(a: MergePlan, b: MergePlan) -> list[Diagnostic]:
    """Compare two independently produced plans wrapper by wrapper, slice by slice."""
    diags = []
    if a.algorithm != b.algorithm:
        diags.append(Diagnostic("error", f"algorithm {a.algorithm.value} != {b.algorithm.value}",
                                "plan"))
    for i in range(max(len(a.wrappers), len(b.wrappers))):
        wa = a.wrappers[i] if i < len(a.wrappers) else None
        wb = b.wrappers[i] if i < len(b.wrappers) else None
        if wa != wb:
            diags.append(Diagnostic("error", f"wrapper {_describe(wa)} != {_describe(wb)}",
                                    f"wrapper #{i + 1}"))
    for i in range(max(len(a.mapping), len(b.mapping))):
        ea = a.mapping[i] if i < len(a.mapping) else None
        eb = b.mapping[i] if i < len(b.mapping) else None
        if ea != eb:
            diags.append(Diagnostic("error", f"slice {_describe(ea)} != {_describe(eb)}",
                                    f"slice #{i + 1}"))
    return diags


def _describe(item: Wrapper | SliceMapEntry | None) -> str:
    if item is None:
        return "<missing>"
    if isinstance(item, Wrapper):
        return (f"{item.name}(dw={item.dw}, {item.method.value}, {item.clock}, {item.reset}, "
                f"selftest={item.self_test})")
    return (f"{item.register}[{item.msb}:{item.lsb}]->"
            f"{item.wrapper}[{item.dest_msb}:{item.dest_lsb}]")


def validate_plan(mot: ModelOfThings, plan: MergePlan, max_width: int | None = None,
                  ) -> list[Diagnostic]:
    """Check a plan against the MoT: bit conservation, disjoint cover, Wmax, compat."""
    diags: list[Diagnostic] = []

    def error(msg: str, where: str) -> None:
        diags.append(Diagnostic("error", msg, where))

    limit = mot.options.max_width if max_width is None else max_width
    names = [w.name for w in plan.wrappers]
    if len(set(names)) != len(names):
        error("duplicate wrapper names", "plan")
    wrappers = {w.name: w for w in plan.wrappers}
    if plan.algorithm is not Algorithm.NONE:
        for w in plan.wrappers:
            if w.dw > limit:
                error(f"width {w.dw} exceeds max width {limit}", w.name)
    protected = {}
    for p in mot.protections:
        for bit in range(p.lsb, p.msb + 1):
            protected[(p.register, bit)] = p
    covered: set[tuple[str, int]] = set()
    dest: dict[str, set[int]] = {name: set() for name in wrappers}
    for e in plan.mapping:
        where = _describe(e)
        w = wrappers.get(e.wrapper)
        if w is None:
            error("unknown wrapper", where)
            continue
        if e.msb - e.lsb != e.dest_msb - e.dest_lsb or e.lsb > e.msb or e.dest_lsb < 0:
            error("source and destination widths differ", where)
            continue
        for k in range(e.width):
            src = (e.register, e.lsb + k)
            prot = protected.get(src)
            if prot is None:
                error(f"bit {e.register}[{e.lsb + k}] is not protected by the specification", where)
                break
            if src in covered:
                error(f"bit {e.register}[{e.lsb + k}] mapped twice", where)
            covered.add(src)
            if (prot.method, prot.clock, prot.reset, prot.self_test) != (
                    w.method, w.clock, w.reset, w.self_test):
                error("incompatible protection settings merged", where)
                break
            d = e.dest_lsb + k
            if d in dest[w.name]:
                error(f"destination bit {w.name}[{d}] driven twice", where)
            dest[w.name].add(d)
    for src in sorted(set(protected) - covered):
        error(f"protected bit {src[0]}[{src[1]}] is not mapped", "plan")
    for name, bits in dest.items():
        if bits != set(range(wrappers[name].dw)):
            error(f"destination bits do not cover [{wrappers[name].dw - 1}:0]", name)
    return diags


# ---------------------------------------------------------------- serialization


def plan_to_dict(plan: MergePlan) -> dict[str, Any]:
    return {
        "kind": "plan",
        "algorithm": plan.algorithm.value,
        "total_area": plan.total_area,
        "wrappers": [
            {"name": w.name, "dw": w.dw, "method": w.method.value, "clock": w.clock,
             "reset": w.reset, "selftest": w.self_test}
            for w in plan.wrappers
        ],
        "mapping": [
            {"register": e.register, "msb": e.msb, "lsb": e.lsb, "wrapper": e.wrapper,
             "dest_msb": e.dest_msb, "dest_lsb": e.dest_lsb}
            for e in plan.mapping
        ],
    }


def plan_from_dict(data: dict[str, Any]) -> MergePlan:
    return MergePlan(
        Algorithm.parse(data["algorithm"]),
        tuple(Wrapper(w["name"], w["dw"], ProtectionMethod.parse(w["method"]),
                      w.get("clock", "clk"), w.get("reset", "rst_n"),
                      bool(w.get("selftest", False)))
              for w in data.get("wrappers", [])),
        tuple(SliceMapEntry(e["register"], e["msb"], e["lsb"], e["wrapper"], e["dest_msb"],
                            e["dest_lsb"])
              for e in data.get("mapping", [])),
        data.get("total_area"),
    )


def plan_to_json(plan: MergePlan) -> str:
    return dumps(plan_to_dict(plan))


def plan_from_json(text: str) -> MergePlan:
    return plan_from_dict(json.loads(text))
