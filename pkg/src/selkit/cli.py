"""Command-line surface: compile, score, inspect, convert, sample.

``compile`` turns a canonical corpus into stage-labeled prompt/target files;
``score`` evaluates raw model generations against a gold corpus; the other
subcommands are inspection and data-preparation helpers. Stage ordering for
training is a trainer concern: the compiler only labels stages.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .compose import build_hard_set
from .dataio import (
    STAGES,
    CompiledExample,
    DataError,
    convert_conll_bio,
    read_canonical,
    read_compiled,
    read_predictions,
    read_schema,
    sample_low_resource,
    write_canonical,
    write_compiled,
)
from .model import CanonicalInstance, Schema, is_empty_target, validate_instance
from .prompts import TEXT_MARKER, build_prompt, main_prompt_spec
from .scoring import score
from .sel import parse, render_tree, serialize, structure_of
from .skills import decompose


@dataclass
class CompileConfig:
    task: str
    schema_path: Path
    input_path: Path
    out_dir: Path
    stages: tuple[str, ...] = STAGES
    m: int = 1
    seed: int = 42
    low_resource_ratio: float | None = None
    merge_stages: bool = False

    def validate(self) -> None:
        unknown = set(self.stages) - set(STAGES)
        if unknown:
            raise ValueError(f"unknown stages: {sorted(unknown)}")
        if not self.stages:
            raise ValueError("at least one stage must be requested")
        if "hard" in self.stages and self.m < 1:
            raise ValueError("m must be >= 1 when the hard stage is requested")
        if self.low_resource_ratio is not None and not (0 < self.low_resource_ratio <= 1):
            raise ValueError("low_resource_ratio must be in (0, 1]")


def _check_example(ex: CompiledExample, schema: Schema) -> None:
    if ex.input.count(TEXT_MARKER) != 1:
        raise DataError(f"example {ex.id!r}: input must contain exactly one {TEXT_MARKER}")
    _, diags = parse(ex.target, schema)
    if diags.recovered:
        raise DataError(f"example {ex.id!r}: target does not parse cleanly: {diags.notes}")


def _sanitize_meta(inst: CanonicalInstance) -> dict:
    spans = [e.span.text for e in inst.entities]
    spans += [ev.trigger.span.text for ev in inst.events]
    spans += [a.span.text for ev in inst.events for a in ev.arguments]
    spans += [s.aspect.text for s in inst.sentiments] + [s.opinion.text for s in inst.sentiments]
    if any("(" in t or ")" in t for t in spans):
        return {"sanitized_parens": True}
    return {}


def compile_dataset(config: CompileConfig) -> dict:
    """Run the full compilation and write stage files plus a manifest.

    Returns the summary dict that is also embedded in the manifest. Output is
    byte-identical across runs for identical config and inputs.
    """

    config.validate()
    schema = read_schema(config.schema_path)
    if schema.task != config.task:
        raise DataError(
            f"schema task {schema.task!r} does not match requested task {config.task!r}"
        )
    train = read_canonical(config.input_path)
    for inst in train:
        violations = validate_instance(inst, schema)
        if violations:
            raise DataError(f"instance {inst.id!r}: " + "; ".join(violations))

    if config.low_resource_ratio is not None:
        train = sample_low_resource(train, config.low_resource_ratio, config.seed)

    main_spec = main_prompt_spec(config.task, schema)
    by_stage: dict[str, list[CompiledExample]] = {}
    skill_counts: dict[str, int] = {}

    if "easy" in config.stages:
        easy: list[CompiledExample] = []
        for inst in train:
            per_skill: dict[str, int] = {}
            for si in decompose(inst, schema):
                k = per_skill.get(si.skill, 0)
                per_skill[si.skill] = k + 1
                meta = {"parent": inst.id, **_sanitize_meta(inst)}
                if si.prompt_spec.constraint is not None:
                    meta["constraint"] = si.prompt_spec.constraint.render()
                easy.append(
                    CompiledExample(
                        id=f"{inst.id}/{si.skill}.{k}",
                        stage="easy",
                        skill=si.skill,
                        input=build_prompt(si.prompt_spec, inst.text),
                        target=serialize(si.target),
                        meta=meta,
                    )
                )
                skill_counts[si.skill] = skill_counts.get(si.skill, 0) + 1
        by_stage["easy"] = easy

    if "hard" in config.stages:
        hard = []
        per_base: dict[str, int] = {}
        for hi in build_hard_set(train, config.m, config.seed):
            k = per_base.get(hi.base_id, 0)
            per_base[hi.base_id] = k + 1
            hard.append(
                CompiledExample(
                    id=f"{hi.base_id}/hard.{k}",
                    stage="hard",
                    skill=None,
                    input=build_prompt(main_spec, hi.text),
                    target=serialize(hi.target),
                    meta={
                        "base": hi.base_id,
                        "partner": hi.partner_id,
                        "offset_shift": hi.offset_shift,
                    },
                )
            )
        by_stage["hard"] = hard

    if "main" in config.stages:
        by_stage["main"] = [
            CompiledExample(
                id=inst.id,
                stage="main",
                skill=None,
                input=build_prompt(main_spec, inst.text),
                target=serialize(structure_of(inst, config.task)),
                meta={"parent": inst.id, **_sanitize_meta(inst)},
            )
            for inst in train
        ]

    for examples in by_stage.values():
        for ex in examples:
            _check_example(ex, schema)

    config.out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, str] = {}
    ordered = [s for s in STAGES if s in by_stage]
    if config.merge_stages:
        merged = [ex for s in ordered for ex in by_stage[s]]
        path = config.out_dir / "merged.jsonl"
        write_compiled(merged, path)
        written["merged"] = str(path)
    else:
        for stage in ordered:
            path = config.out_dir / f"{stage}.jsonl"
            write_compiled(by_stage[stage], path)
            written[stage] = str(path)

    n_train = len(train)
    empty = sum(1 for inst in train if is_empty_target(inst))
    summary = {
        "task": config.task,
        "instances": n_train,
        "empty_target_ratio": (empty / n_train) if n_train else 0.0,
        "stage_counts": {s: len(by_stage[s]) for s in ordered},
        "skill_counts": dict(sorted(skill_counts.items())),
        "files": written,
    }
    manifest = {
        "config": {
            "task": config.task,
            "schema": str(config.schema_path),
            "input": str(config.input_path),
            "out_dir": str(config.out_dir),
            "stages": list(config.stages),
            "m": config.m,
            "seed": config.seed,
            "low_resource_ratio": config.low_resource_ratio,
            "merge_stages": config.merge_stages,
        },
        "summary": summary,
    }
    (config.out_dir / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return summary


# --- subcommands ------------------------------------------------------------


def _cmd_compile(args: argparse.Namespace) -> int:
    config = CompileConfig(
        task=args.task,
        schema_path=Path(args.schema),
        input_path=Path(args.input),
        out_dir=Path(args.out_dir),
        stages=tuple(args.stages.split(",")),
        m=args.m,
        seed=args.seed,
        low_resource_ratio=args.low_resource_ratio,
        merge_stages=args.merge_stages,
    )
    summary = compile_dataset(config)
    print(json.dumps(summary, ensure_ascii=False, indent=2))
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    schema = read_schema(args.schema)
    gold = read_canonical(args.gold)
    preds = read_predictions(args.predictions)
    report = score(gold, preds, args.task, schema)
    print(report.format_table())
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    examples = read_compiled(args.file)
    matches = [ex for ex in examples if ex.id == args.id]
    if not matches:
        raise DataError(f"no example with id {args.id!r} in {args.file}")
    ex = matches[0]
    schema = read_schema(args.schema) if args.schema else None
    structure, diags = parse(ex.target, schema)
    print(f"id:     {ex.id}")
    print(f"stage:  {ex.stage}")
    print(f"skill:  {ex.skill or '-'}")
    print(f"input:  {ex.input}")
    print(f"target: {ex.target}")
    print("tree:")
    tree = render_tree(structure)
    print("\n".join("  " + line for line in tree.splitlines()) if tree else "  (empty)")
    if diags.recovered:
        print(f"parse notes: {diags.notes}")
    print(f"meta:   {json.dumps(ex.meta, ensure_ascii=False)}")
    return 0


def _cmd_convert(args: argparse.Namespace) -> int:
    label_map = json.loads(Path(args.label_map).read_text(encoding="utf-8")) if args.label_map else None
    instances, report = convert_conll_bio(args.input, label_map=label_map)
    write_canonical(instances, args.output)
    print(
        f"converted {report.sentences} sentences, {report.entities} entities, "
        f"{report.dangling_i_tags} dangling I- tags"
    )
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    instances = read_canonical(args.input)
    sampled = sample_low_resource(instances, args.ratio, args.seed)
    write_canonical(sampled, args.output)
    print(f"sampled {len(sampled)} of {len(instances)} instances")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selkit",
        description="Compile staged extraction training files and score generated structures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile canonical instances into stage files")
    p.add_argument("--task", required=True, choices=["ner", "re", "ee", "aste", "asqp"])
    p.add_argument("--schema", required=True, help="schema JSON file")
    p.add_argument("--input", required=True, help="canonical JSONL file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stages", default="easy,hard,main", help="comma-separated subset of easy,hard,main")
    p.add_argument("-m", type=int, default=1, help="hard-stage partners per base instance")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--low-resource-ratio", type=float, default=None)
    p.add_argument("--merge-stages", action="store_true", help="emit one mixed file instead of per-stage files")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("score", help="score raw generations against a gold corpus")
    p.add_argument("--task", required=True, choices=["ner", "re", "ee", "aste", "asqp"])
    p.add_argument("--schema", required=True)
    p.add_argument("--gold", required=True, help="canonical JSONL file")
    p.add_argument("--predictions", required=True, help="prediction JSONL file")
    p.add_argument("--out", default=None, help="write the report as JSON")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("inspect", help="pretty-print one compiled example")
    p.add_argument("--file", required=True, help="compiled JSONL file")
    p.add_argument("--id", required=True)
    p.add_argument("--schema", default=None)
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("convert", help="convert a token-per-line BIO file to canonical JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--label-map", default=None, help="JSON file mapping tag types to categories")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("sample", help="draw a low-resource subsample")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_sample)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
