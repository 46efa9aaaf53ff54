"""Shared builders for tests: the three-register example and seeded random specs."""

from __future__ import annotations

import random
from dataclasses import replace
from pathlib import Path

from sffgen.ecc import ProtectionMethod
from sffgen.spec_model import (Algorithm, GeneratorOptions, ModelOfThings, ProtectedRange,
                               RegisterSpec, parse_spec)

DATA = Path(__file__).parent / "data"
SAMPLE_XML = (DATA / "three_registers.xml").read_text()


def sample_mot(algorithm: Algorithm = Algorithm.NONE, **opts) -> ModelOfThings:
    mot = parse_spec(SAMPLE_XML)
    return replace(mot, options=replace(mot.options, algorithm=algorithm, **opts))


def random_mot(rng: random.Random, max_regs: int = 6, max_width: int = 13,
               algorithm: Algorithm | None = None) -> ModelOfThings:
    """A valid random MoT: <= max_regs registers of width <= max_width."""
    if algorithm is None:
        algorithm = rng.choice(list(Algorithm))
    clocks = ["clk", "clk_aon"]
    resets = ["rst_n", "rst_aon_n"]
    registers, protections = [], []
    for i in range(rng.randint(1, max_regs)):
        width = rng.randint(1, max_width)
        name = f"r{i}"
        registers.append(RegisterSpec(name, width, rng.getrandbits(width), i))
        if rng.random() < 0.15:
            continue
        # one range per register unless merging; two disjoint ranges sometimes
        cuts = [(width - 1, 0)]
        if algorithm is not Algorithm.NONE and width >= 2 and rng.random() < 0.3:
            split = rng.randint(1, width - 1)
            cuts = [(split - 1, 0), (width - 1, split)]
        for msb, lsb in cuts:
            lo = rng.randint(lsb, msb)
            hi = rng.randint(lo, msb)
            method = rng.choice(list(ProtectionMethod))
            protections.append(ProtectedRange(
                name, hi, lo, method, rng.random() < 0.3,
                rng.choice(clocks) if rng.random() < 0.3 else "clk",
                rng.choice(resets) if rng.random() < 0.3 else "rst_n",
                len(protections)))
    wmax = rng.randint(max_width, 32)
    return ModelOfThings("blk", tuple(registers), tuple(protections),
                         GeneratorOptions(algorithm, wmax, "builtin-paper"))


LISTINGS = DATA / "listings"


def normalize_listing(text: str) -> str:
    """Whitespace-free form of an SVA snippet. Instance names are unified and
    doubled terminators collapsed, so listing typos don't mask real diffs."""
    text = text.replace("inst_wrapper_", "sff_wrapper_").replace(";;", ";")
    return "".join(text.split())


def listing_blocks(text: str) -> list[str]:
    """Each ``property ... endproperty`` block, normalized."""
    import re
    return [normalize_listing(m.group(0))
            for m in re.finditer(r"property\s.*?endproperty", text, re.S)]


def missing_listing_blocks(listing_file: str, generated: str) -> list[str]:
    have = normalize_listing(generated)
    return [b for b in listing_blocks((LISTINGS / listing_file).read_text()) if b not in have]


# acceptance bookkeeping: criterion number -> (title, passed, seconds, limit)
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, float, float]] = {}
