"""Canonical in-memory model for offset-annotated extraction instances.

All types are frozen; collection fields are coerced to tuples/frozensets so
instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

TASKS = ("ner", "re", "ee", "aste", "asqp")


@dataclass(frozen=True)
class Span:
    """Character span [start, end) plus its surface text.

    The implicit span (start == end == -1, text == "null") stands for an
    absent aspect/opinion term.
    """

    start: int
    end: int
    text: str

    @property
    def is_implicit(self) -> bool:
        return self.start == -1 and self.end == -1 and self.text == "null"


IMPLICIT_SPAN = Span(-1, -1, "null")


@dataclass(frozen=True)
class Entity:
    span: Span
    category: str


@dataclass(frozen=True)
class RelationTriple:
    """Directed relation between two entities, referenced by list index."""

    head: int
    relation: str
    tail: int


@dataclass(frozen=True)
class Argument:
    span: Span
    role: str


@dataclass(frozen=True)
class Event:
    trigger: Entity
    arguments: tuple[Argument, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "arguments", tuple(self.arguments))


@dataclass(frozen=True)
class SentimentTuple:
    """Aspect/opinion/polarity triple, plus an aspect category for quads."""

    aspect: Span
    opinion: Span
    polarity: str
    category: str | None = None


@dataclass(frozen=True)
class Schema:
    """Label inventory of a dataset; only the sets relevant to `task` are set."""

    task: str
    entity_categories: frozenset[str] = frozenset()
    relations: frozenset[str] = frozenset()
    event_types: frozenset[str] = frozenset()
    argument_roles: frozenset[str] = frozenset()
    aspect_categories: frozenset[str] = frozenset()
    polarities: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name != "task":
                object.__setattr__(self, f.name, frozenset(getattr(self, f.name)))


@dataclass(frozen=True)
class CanonicalInstance:
    id: str
    task: str
    text: str
    entities: tuple[Entity, ...] = ()
    relations: tuple[RelationTriple, ...] = ()
    events: tuple[Event, ...] = ()
    sentiments: tuple[SentimentTuple, ...] = ()

    def __post_init__(self) -> None:
        for name in ("entities", "relations", "events", "sentiments"):
            object.__setattr__(self, name, tuple(getattr(self, name)))


def _check_span(span: Span, text: str, where: str, allow_implicit: bool) -> list[str]:
    if span.is_implicit:
        return [] if allow_implicit else [f"{where}: implicit span not allowed here"]
    out = []
    if not (0 <= span.start < span.end <= len(text)):
        out.append(f"{where}: span [{span.start}, {span.end}) out of bounds for text of length {len(text)}")
    elif text[span.start : span.end] != span.text:
        out.append(f"{where}: span text {span.text!r} != text[{span.start}:{span.end}] {text[span.start:span.end]!r}")
    return out


def structural_violations(inst: CanonicalInstance) -> list[str]:
    """Invariant violations that are checkable without a schema."""

    out: list[str] = []
    if inst.task not in TASKS:
        out.append(f"unknown task {inst.task!r}")
        return out

    allow_implicit = inst.task == "asqp"
    for i, ent in enumerate(inst.entities):
        out += _check_span(ent.span, inst.text, f"entities[{i}]", allow_implicit=False)
        if not ent.category:
            out.append(f"entities[{i}]: empty category")
    for i, rel in enumerate(inst.relations):
        for side, idx in (("head", rel.head), ("tail", rel.tail)):
            if not (0 <= idx < len(inst.entities)):
                out.append(f"relations[{i}]: dangling {side} index {idx}")
        if not rel.relation:
            out.append(f"relations[{i}]: empty relation label")
    for i, ev in enumerate(inst.events):
        out += _check_span(ev.trigger.span, inst.text, f"events[{i}].trigger", allow_implicit=False)
        if not ev.trigger.category:
            out.append(f"events[{i}]: empty event type")
        for j, arg in enumerate(ev.arguments):
            out += _check_span(arg.span, inst.text, f"events[{i}].arguments[{j}]", allow_implicit=False)
            if not arg.role:
                out.append(f"events[{i}].arguments[{j}]: empty role")
    for i, st in enumerate(inst.sentiments):
        out += _check_span(st.aspect, inst.text, f"sentiments[{i}].aspect", allow_implicit)
        out += _check_span(st.opinion, inst.text, f"sentiments[{i}].opinion", allow_implicit)
        if not st.polarity:
            out.append(f"sentiments[{i}]: empty polarity")
        if inst.task == "aste" and st.category is not None:
            out.append(f"sentiments[{i}]: aste tuples carry no aspect category")
        if inst.task == "asqp" and not st.category:
            out.append(f"sentiments[{i}]: asqp tuples require an aspect category")

    relevant = {
        "ner": ("entities",),
        "re": ("entities", "relations"),
        "ee": ("events",),
        "aste": ("sentiments",),
        "asqp": ("sentiments",),
    }[inst.task]
    for name in ("entities", "relations", "events", "sentiments"):
        if name not in relevant and getattr(inst, name):
            out.append(f"{name} populated on a {inst.task} instance")
    return out


def validate_instance(inst: CanonicalInstance, schema: Schema) -> list[str]:
    """Full validation report: structural invariants plus schema membership.

    An empty report means the instance is well formed; violations are data,
    not exceptions.
    """

    out = structural_violations(inst)
    if schema.task != inst.task:
        out.append(f"instance task {inst.task!r} != schema task {schema.task!r}")
        return out

    for i, ent in enumerate(inst.entities):
        if ent.category and ent.category not in schema.entity_categories:
            out.append(f"entities[{i}]: category {ent.category!r} not in schema")
    for i, rel in enumerate(inst.relations):
        if rel.relation and rel.relation not in schema.relations:
            out.append(f"relations[{i}]: relation {rel.relation!r} not in schema")
    for i, ev in enumerate(inst.events):
        if ev.trigger.category and ev.trigger.category not in schema.event_types:
            out.append(f"events[{i}]: event type {ev.trigger.category!r} not in schema")
        for j, arg in enumerate(ev.arguments):
            if arg.role and arg.role not in schema.argument_roles:
                out.append(f"events[{i}].arguments[{j}]: role {arg.role!r} not in schema")
    for i, st in enumerate(inst.sentiments):
        if st.polarity and st.polarity not in schema.polarities:
            out.append(f"sentiments[{i}]: polarity {st.polarity!r} not in schema")
        if inst.task == "asqp" and st.category and st.category not in schema.aspect_categories:
            out.append(f"sentiments[{i}]: aspect category {st.category!r} not in schema")
    return out


def is_empty_target(inst: CanonicalInstance) -> bool:
    """True iff every annotation list relevant to the instance's task is empty.

    RE counts entities: an instance with entities but no relations still has a
    non-empty main-task target.
    """

    if inst.task == "ner":
        return not inst.entities
    if inst.task == "re":
        return not inst.entities and not inst.relations
    if inst.task == "ee":
        return not inst.events
    if inst.task in ("aste", "asqp"):
        return not inst.sentiments
    raise ValueError(f"unknown task {inst.task!r}")
