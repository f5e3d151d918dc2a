"""Line-delimited readers and writers for corpora, compiled stages, and
predictions, plus the BIO converter and the low-resource subsampler.

All files are UTF-8. Canonical, compiled, and prediction files carry one
JSON record per line; schema files are a single JSON object.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .model import (
    IMPLICIT_SPAN,
    Argument,
    CanonicalInstance,
    Entity,
    Event,
    RelationTriple,
    Schema,
    SentimentTuple,
    Span,
    structural_violations,
)

STAGES = ("easy", "hard", "main")


class DataError(Exception):
    """Malformed input file or record; the message carries file context."""


@dataclass(frozen=True)
class CompiledExample:
    id: str
    stage: str
    skill: str | None
    input: str
    target: str
    meta: dict


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    output: str


# --- span / instance JSON codecs -------------------------------------------


def _span_to_json(span: Span) -> dict | None:
    if span.is_implicit:
        return None
    return {"start": span.start, "end": span.end, "text": span.text}


def _span_from_json(obj: dict | None) -> Span:
    if obj is None:
        return IMPLICIT_SPAN
    return Span(int(obj["start"]), int(obj["end"]), str(obj["text"]))


def instance_to_json(inst: CanonicalInstance) -> dict:
    return {
        "id": inst.id,
        "task": inst.task,
        "text": inst.text,
        "entities": [
            {**_span_to_json(e.span), "category": e.category} for e in inst.entities
        ],
        "relations": [
            {"head": r.head, "relation": r.relation, "tail": r.tail} for r in inst.relations
        ],
        "events": [
            {
                "trigger": {**_span_to_json(ev.trigger.span), "category": ev.trigger.category},
                "arguments": [{**_span_to_json(a.span), "role": a.role} for a in ev.arguments],
            }
            for ev in inst.events
        ],
        "sentiments": [
            {
                "category": st.category,
                "aspect": _span_to_json(st.aspect),
                "opinion": _span_to_json(st.opinion),
                "polarity": st.polarity,
            }
            for st in inst.sentiments
        ],
    }


def instance_from_json(obj: dict) -> CanonicalInstance:
    return CanonicalInstance(
        id=str(obj["id"]),
        task=str(obj["task"]),
        text=str(obj["text"]),
        entities=tuple(
            Entity(_span_from_json(e), str(e["category"])) for e in obj.get("entities", [])
        ),
        relations=tuple(
            RelationTriple(int(r["head"]), str(r["relation"]), int(r["tail"]))
            for r in obj.get("relations", [])
        ),
        events=tuple(
            Event(
                Entity(_span_from_json(ev["trigger"]), str(ev["trigger"]["category"])),
                tuple(Argument(_span_from_json(a), str(a["role"])) for a in ev.get("arguments", [])),
            )
            for ev in obj.get("events", [])
        ),
        sentiments=tuple(
            SentimentTuple(
                aspect=_span_from_json(st.get("aspect")),
                opinion=_span_from_json(st.get("opinion")),
                polarity=str(st["polarity"]),
                category=None if st.get("category") is None else str(st["category"]),
            )
            for st in obj.get("sentiments", [])
        ),
    )


# --- canonical files --------------------------------------------------------


def read_canonical(path: str | Path) -> list[CanonicalInstance]:
    """Read and structurally validate instances, preserving file order.

    Raises DataError with the line number for malformed records and with the
    instance id for invariant breaches (e.g. span/text disagreement).
    """

    path = Path(path)
    out: list[CanonicalInstance] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                inst = instance_from_json(obj)
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
            violations = structural_violations(inst)
            if violations:
                raise DataError(
                    f"{path}:{lineno}: instance {inst.id!r}: " + "; ".join(violations)
                )
            out.append(inst)
    return out


def write_canonical(instances: list[CanonicalInstance], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(instance_to_json(inst), ensure_ascii=False) + "\n")


# --- schema files -----------------------------------------------------------

_SCHEMA_SETS = (
    "entity_categories",
    "relations",
    "event_types",
    "argument_roles",
    "aspect_categories",
    "polarities",
)


def read_schema(path: str | Path) -> Schema:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        return Schema(
            task=str(obj["task"]),
            **{name: frozenset(obj.get(name, [])) for name in _SCHEMA_SETS},
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed schema: {exc}") from exc


def write_schema(schema: Schema, path: str | Path) -> None:
    obj = {"task": schema.task}
    obj.update({name: sorted(getattr(schema, name)) for name in _SCHEMA_SETS})
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


# --- BIO conversion ---------------------------------------------------------


@dataclass
class ConversionReport:
    sentences: int = 0
    entities: int = 0
    dangling_i_tags: int = 0


def convert_conll_bio(
    path: str | Path,
    label_map: dict[str, str] | None = None,
    id_prefix: str | None = None,
) -> tuple[list[CanonicalInstance], ConversionReport]:
    """Convert a token-per-line BIO file into canonical NER instances.

    Tokens are joined by single spaces and offsets computed on the joined
    text. A dangling I- tag (no open run of the same type) leniently starts a
    new entity and is counted in the report. Tag types are lowercased unless
    remapped via ``label_map``.
    """

    path = Path(path)
    prefix = id_prefix if id_prefix is not None else path.stem
    label_map = label_map or {}
    report = ConversionReport()
    instances: list[CanonicalInstance] = []
    sentence: list[tuple[str, str]] = []

    def category(tag_type: str) -> str:
        return label_map.get(tag_type, tag_type.lower())

    def flush() -> None:
        if not sentence:
            return
        tokens = [tok for tok, _ in sentence]
        text = " ".join(tokens)
        offsets = []
        pos = 0
        for tok in tokens:
            offsets.append((pos, pos + len(tok)))
            pos += len(tok) + 1
        entities: list[Entity] = []
        open_start: int | None = None
        open_type: str | None = None

        def close(upto: int) -> None:
            nonlocal open_start, open_type
            if open_start is None:
                return
            start = offsets[open_start][0]
            end = offsets[upto][1]
            entities.append(Entity(Span(start, end, text[start:end]), category(open_type)))
            open_start = open_type = None

        for i, (_, tag) in enumerate(sentence):
            if tag == "O" or tag == "":
                close(i - 1)
            elif tag.startswith("B-"):
                close(i - 1)
                open_start, open_type = i, tag[2:]
            elif tag.startswith("I-"):
                if open_type != tag[2:]:
                    close(i - 1)
                    report.dangling_i_tags += 1
                    open_start, open_type = i, tag[2:]
            else:
                close(i - 1)
        close(len(sentence) - 1)

        instances.append(
            CanonicalInstance(
                id=f"{prefix}.{report.sentences}",
                task="ner",
                text=text,
                entities=tuple(entities),
            )
        )
        report.sentences += 1
        report.entities += len(entities)
        sentence.clear()

    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                flush()
                continue
            cols = line.split()
            if cols[0] == "-DOCSTART-":
                flush()
                continue
            sentence.append((cols[0], cols[-1] if len(cols) > 1 else "O"))
    flush()
    return instances, report


# --- low-resource sampling --------------------------------------------------


def sample_low_resource(
    train: list[CanonicalInstance], ratio: float, seed: int
) -> list[CanonicalInstance]:
    """Uniform sample without replacement of size max(1, round(N * ratio)).

    Rounding is round-half-to-even; survivors keep their original order and
    the draw is reproducible per seed.
    """

    if not (0 < ratio <= 1):
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    if not train:
        return []
    size = max(1, round(len(train) * ratio))
    rng = random.Random(seed)
    keep = sorted(rng.sample(range(len(train)), size))
    return [train[i] for i in keep]


# --- compiled files ---------------------------------------------------------


def write_compiled(examples: list[CompiledExample], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            record = {
                "id": ex.id,
                "stage": ex.stage,
                "skill": ex.skill,
                "input": ex.input,
                "target": ex.target,
                "meta": ex.meta,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_compiled(
    path: str | Path, stages: set[str] | None = None
) -> list[CompiledExample]:
    path = Path(path)
    out: list[CompiledExample] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                ex = CompiledExample(
                    id=str(obj["id"]),
                    stage=str(obj["stage"]),
                    skill=None if obj.get("skill") is None else str(obj["skill"]),
                    input=str(obj["input"]),
                    target=str(obj["target"]),
                    meta=dict(obj.get("meta", {})),
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
            if stages is None or ex.stage in stages:
                out.append(ex)
    return out


# --- prediction files -------------------------------------------------------


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    path = Path(path)
    out: list[PredictionRecord] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(PredictionRecord(id=str(obj["id"]), output=str(obj["output"])))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
    return out


def write_predictions(records: list[PredictionRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({"id": rec.id, "output": rec.output}, ensure_ascii=False) + "\n")
