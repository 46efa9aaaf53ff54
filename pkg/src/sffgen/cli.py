"""Command-line flow: extract -> optimize -> generate -> check, plus crosscheck/report.

Stages talk over stdout/stdin with a JSON bundle ``{"kind": "bundle", "mot": ...,
"plan": ..., "sva_dir": ...}`` so they can be piped::

    sffgen extract block.xml | sffgen optimize --alg ilp | sffgen generate --out out/ \\
        | sffgen check | sffgen report

With ``--out DIR`` every stage also writes its artifact into DIR; ``run`` does
all stages at once and writes the same files.

Exit codes: 0 success, 1 failing checks or crosscheck diagnostics, 2 usage or
input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .optimizer import (OptimizerError, crosscheck_plans, load_cost_table, optimize,
                        plan_from_dict, plan_to_dict)
from .propgen import SvaParseError, emit_sva, generate_properties, read_sva_dir, write_files
from .refmodel import (DEFAULT_SEED, CheckBudget, CheckError, CheckReport, ElaborationError,
                       MutationError, MutationKind, Verdict, check_all, elaborate,
                       inject_mutation)
from .spec_model import (Algorithm, SpecError, check_mot, dumps, mot_from_dict, mot_to_dict,
                         parse_spec)

log = logging.getLogger("sffgen")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[str]
    out_dir: str | None = None
    algorithm: str | None = None
    max_width: int | None = None
    cost_table: str | None = None
    seed: int = DEFAULT_SEED
    exhaustive_limit: int = 13
    samples: int = 256
    mutate: str | None = None
    json_output: bool = False

    @property
    def budget(self) -> CheckBudget:
        return CheckBudget(exhaustive_limit=self.exhaustive_limit, samples=self.samples,
                           seed=self.seed)


# ------------------------------------------------------------------------- I/O


def _read(path: str) -> tuple[str, str]:
    if path == "-":
        return sys.stdin.read(), "<stdin>"
    try:
        return Path(path).read_text(), path
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None


def _load_json(text: str, where: str) -> dict[str, Any]:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{where}:{exc.lineno}: invalid JSON: {exc.msg}") from None


def _write(out_dir: str | None, name: str, text: str) -> None:
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text)


def _apply_overrides(mot, cfg: RunConfig):
    opts = mot.options
    if cfg.algorithm is not None:
        opts = replace(opts, algorithm=Algorithm.parse(cfg.algorithm))
    if cfg.max_width is not None:
        opts = replace(opts, max_width=cfg.max_width)
    if cfg.cost_table is not None:
        opts = replace(opts, cost_table=cfg.cost_table)
    return check_mot(replace(mot, options=opts))


def _load_bundle(path: str) -> dict[str, Any]:
    text, where = _read(path)
    if text.lstrip().startswith("<"):
        try:
            mot = parse_spec(text)
        except SpecError as exc:
            raise UsageError(f"{where}: {exc}") from None
        return {"kind": "bundle", "mot": mot_to_dict(mot)}
    data = _load_json(text, where)
    if data.get("kind") == "mot":
        data = {"kind": "bundle", "mot": {k: v for k, v in data.items() if k != "kind"}}
    if data.get("kind") != "bundle" or "mot" not in data:
        raise UsageError(f"{where}: expected a specification bundle")
    return data


def _bundle_mot(bundle: dict[str, Any], cfg: RunConfig):
    try:
        return _apply_overrides(mot_from_dict(bundle["mot"]), cfg)
    except (SpecError, KeyError, ValueError) as exc:
        raise UsageError(f"invalid specification: {exc}") from None


def _emit(text: str) -> None:
    sys.stdout.write(text)


# -------------------------------------------------------------------- commands


def cmd_extract(cfg: RunConfig) -> int:
    text, where = _read(cfg.inputs[0] if cfg.inputs else "-")
    try:
        mot = _apply_overrides(parse_spec(text), cfg)
    except SpecError as exc:
        raise UsageError(f"{where}: {exc}") from None
    out = dumps({"kind": "bundle", "mot": mot_to_dict(mot)})
    _write(cfg.out_dir, f"{mot.block}.mot.json", dumps({"kind": "mot", **mot_to_dict(mot)}))
    _emit(out)
    return EXIT_OK


def _optimize_bundle(bundle: dict[str, Any], cfg: RunConfig) -> dict[str, Any]:
    mot = _bundle_mot(bundle, cfg)
    try:
        costs = load_cost_table(mot.options.cost_table, mot.options.max_width)
        plan = optimize(mot, costs=costs)
    except (OptimizerError, OSError) as exc:
        raise UsageError(str(exc)) from None
    return {"kind": "bundle", "mot": mot_to_dict(mot), "plan": plan_to_dict(plan)}


def cmd_optimize(cfg: RunConfig) -> int:
    bundle = _optimize_bundle(_load_bundle(cfg.inputs[0] if cfg.inputs else "-"), cfg)
    block = bundle["mot"]["block"]
    # overrides may have changed the options; keep the written MoT in sync
    _write(cfg.out_dir, f"{block}.mot.json", dumps({"kind": "mot", **bundle["mot"]}))
    _write(cfg.out_dir, f"{block}.plan.json", dumps(bundle["plan"]))
    _emit(dumps(bundle))
    return EXIT_OK


def _generate_bundle(bundle: dict[str, Any], cfg: RunConfig) -> dict[str, Any]:
    if "plan" not in bundle:
        bundle = _optimize_bundle(bundle, cfg)
    mot = _bundle_mot(bundle, cfg)
    plan = plan_from_dict(bundle["plan"])
    files = emit_sva(generate_properties(mot, plan), mot, plan)
    sva_dir = cfg.out_dir or "."
    write_files(files, sva_dir)
    return {**bundle, "sva_dir": str(sva_dir)}


def cmd_generate(cfg: RunConfig) -> int:
    bundle = _generate_bundle(_load_bundle(cfg.inputs[0] if cfg.inputs else "-"), cfg)
    _emit(dumps(bundle))
    return EXIT_OK


def _check_bundle(bundle: dict[str, Any], cfg: RunConfig, sva_dir: str | None,
                  ) -> list[CheckReport]:
    mot = _bundle_mot(bundle, cfg)
    if "plan" not in bundle:
        raise UsageError("check needs an optimized bundle (run optimize first)")
    plan = plan_from_dict(bundle["plan"])
    sva_dir = sva_dir or bundle.get("sva_dir")
    if not sva_dir:
        raise UsageError("no SVA directory given (use --sva-dir or pipe from generate)")
    try:
        props = read_sva_dir(sva_dir, mot.block)
        structure = elaborate(mot, plan)
        if cfg.mutate:
            structure = inject_mutation(structure, MutationKind(cfg.mutate), cfg.seed)
            for m in structure.mutations:
                log.info("injected %s", m)
        return check_all(structure, props, cfg.budget)
    except (SvaParseError, ElaborationError, CheckError, MutationError) as exc:
        raise UsageError(str(exc)) from None


def _reports_text(reports: list[CheckReport]) -> str:
    return "".join(r.to_json() + "\n" for r in reports)


def cmd_check(cfg: RunConfig, sva_dir: str | None = None) -> int:
    bundle = _load_bundle(cfg.inputs[0] if cfg.inputs else "-")
    reports = _check_bundle(bundle, cfg, sva_dir)
    text = _reports_text(reports)
    _write(cfg.out_dir, f"{bundle['mot']['block']}.reports.jsonl", text)
    _emit(text)
    return EXIT_FAIL if any(r.verdict is Verdict.FAIL for r in reports) else EXIT_OK


def _load_plan(path: str):
    text, where = _read(path)
    data = _load_json(text, where)
    if data.get("kind") == "bundle":
        data = data.get("plan", {})
    try:
        return plan_from_dict(data)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{where}: not a merge plan ({exc})") from None


def cmd_crosscheck(cfg: RunConfig) -> int:
    if len(cfg.inputs) != 2:
        raise UsageError("crosscheck takes exactly two plan files")
    diags = crosscheck_plans(_load_plan(cfg.inputs[0]), _load_plan(cfg.inputs[1]))
    if cfg.json_output:
        _emit(json.dumps([{"severity": d.severity, "location": d.location,
                           "message": d.message} for d in diags], indent=2) + "\n")
    else:
        _emit("".join(f"{d}\n" for d in diags) or "plans are identical\n")
    return EXIT_FAIL if diags else EXIT_OK


def summarize(reports: list[CheckReport]) -> dict[str, dict[str, int]]:
    table: dict[str, Counter] = {}
    for r in reports:
        row = table.setdefault(r.cls.value, Counter())
        row[r.verdict.value.lower()] += 1
        row["states"] += r.states_explored
    return {cls: {k: row.get(k, 0) for k in ("pass", "fail", "vacuous", "states")}
            for cls, row in table.items()}


def cmd_report(cfg: RunConfig) -> int:
    reports = []
    for path in cfg.inputs or ["-"]:
        text, where = _read(path)
        for lineno, line in enumerate(text.splitlines(), start=1):
            if line.strip():
                try:
                    reports.append(CheckReport.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise UsageError(f"{where}:{lineno}: not a check report ({exc})") from None
    table = summarize(reports)
    if cfg.json_output:
        _emit(json.dumps(table, indent=2, sort_keys=True) + "\n")
    else:
        lines = [f"{'class':<10} {'pass':>6} {'fail':>6} {'vacuous':>8} {'states':>10}"]
        for cls, row in table.items():
            lines.append(f"{cls:<10} {row['pass']:>6} {row['fail']:>6} {row['vacuous']:>8} "
                         f"{row['states']:>10}")
        _emit("\n".join(lines) + "\n")
    return EXIT_FAIL if any(row["fail"] for row in table.values()) else EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    """All stages in one go; writes the same files as the piped stages."""
    if not cfg.out_dir:
        raise UsageError("run needs --out DIR")
    text, where = _read(cfg.inputs[0] if cfg.inputs else "-")
    try:
        mot = _apply_overrides(parse_spec(text), cfg)
    except SpecError as exc:
        raise UsageError(f"{where}: {exc}") from None
    _write(cfg.out_dir, f"{mot.block}.mot.json", dumps({"kind": "mot", **mot_to_dict(mot)}))
    bundle = _optimize_bundle({"kind": "bundle", "mot": mot_to_dict(mot)}, cfg)
    _write(cfg.out_dir, f"{mot.block}.plan.json", dumps(bundle["plan"]))
    bundle = _generate_bundle(bundle, cfg)
    reports = _check_bundle(bundle, cfg, None)
    text = _reports_text(reports)
    _write(cfg.out_dir, f"{mot.block}.reports.jsonl", text)
    _emit(text)
    return EXIT_FAIL if any(r.verdict is Verdict.FAIL for r in reports) else EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "optimize": cmd_optimize,
    "generate": cmd_generate,
    "check": cmd_check,
    "crosscheck": cmd_crosscheck,
    "report": cmd_report,
    "run": cmd_run,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alg", dest="algorithm", choices=[a.value for a in Algorithm])
    common.add_argument("--max-width", type=int)
    common.add_argument("--cost-table", help="CSV path, builtin-linear or builtin-paper")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--exhaustive-limit", type=int, default=13,
                        help="largest codeword width checked exhaustively")
    common.add_argument("--samples", type=int, default=256,
                        help="random samples above the exhaustive limit")
    common.add_argument("--out", dest="out_dir")
    common.add_argument("--json", dest="json_output", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sffgen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("extract", parents=[common], help="XML spec -> MoT bundle") \
        .add_argument("inputs", nargs="?", default="-")
    sub.add_parser("optimize", parents=[common], help="bundle -> bundle with merge plan") \
        .add_argument("inputs", nargs="?", default="-")
    sub.add_parser("generate", parents=[common], help="write SVA files for a bundle") \
        .add_argument("inputs", nargs="?", default="-")
    p = sub.add_parser("check", parents=[common], help="check SVA properties on the model")
    p.add_argument("inputs", nargs="?", default="-")
    p.add_argument("--sva-dir")
    p.add_argument("--mutate", choices=[k.value for k in MutationKind],
                   help="inject one seeded defect before checking")
    sub.add_parser("crosscheck", parents=[common], help="compare two merge plans") \
        .add_argument("inputs", nargs=2)
    sub.add_parser("report", parents=[common], help="summarize check reports") \
        .add_argument("inputs", nargs="*")
    p = sub.add_parser("run", parents=[common], help="extract, optimize, generate and check")
    p.add_argument("inputs", nargs="?", default="-")
    p.add_argument("--mutate", choices=[k.value for k in MutationKind])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    inputs = args.inputs if isinstance(args.inputs, list) else [args.inputs]
    cfg = RunConfig(args.subcommand, inputs, args.out_dir, args.algorithm, args.max_width,
                    args.cost_table, args.seed, args.exhaustive_limit, args.samples,
                    getattr(args, "mutate", None), args.json_output)
    try:
        if cfg.subcommand == "check":
            return cmd_check(cfg, args.sva_dir)
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"sffgen {cfg.subcommand}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
