"""Easy-stage decomposition: project the main-task target into basic skills.

Each skill is a subtask over the same text with a modified prompt and a
target derived purely from the instance's own annotations. Constrained
skills are instantiated once per distinct constraint value present in the
gold structure; no negative constraints are generated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .model import CanonicalInstance, Schema
from .prompts import (
    ARG,
    CAT,
    ENT,
    HINTS,
    REL,
    TRI,
    Constraint,
    PromptSpec,
    argument_entries,
    entity_entries,
    relation_entries,
    trigger_entries,
)
from .sel import SelNode, SelStructure, structure_of


@dataclass(frozen=True)
class SkillInstance:
    parent_id: str
    skill: str
    prompt_spec: PromptSpec
    target: SelStructure


def _unique(items: Iterable, key: Callable) -> list:
    seen = set()
    out = []
    for item in items:
        k = key(item)
        if k not in seen:
            seen.add(k)
            out.append(item)
    return out


def _strip_children(node: SelNode) -> SelNode:
    return SelNode(node.label, node.value)


def decompose(inst: CanonicalInstance, schema: Schema) -> list[SkillInstance]:
    """All easy-stage instances for one main-task instance.

    Unconstrained skills are always emitted (with an empty target when the
    gold is empty); constrained skills are emitted once per distinct gold
    constraint value, in first-appearance order of the main structure.
    """

    task = inst.task
    main = structure_of(inst, task)
    first, second = HINTS[task]
    out: list[SkillInstance] = []

    def emit(n: int, hints: tuple[str, ...], constraint, entries, roots) -> None:
        out.append(
            SkillInstance(
                parent_id=inst.id,
                skill=f"{task}.skill{n}",
                prompt_spec=PromptSpec(hints, constraint, tuple(entries)),
                target=SelStructure(tuple(roots)),
            )
        )

    if task == "ner":
        categories = _unique((r.label for r in main.roots), key=lambda c: c)
        emit(1, (first,), None, entity_entries(task, schema), [SelNode(c) for c in categories])
        for cat in categories:
            roots = [r for r in main.roots if r.label == cat]
            emit(2, (first, second), Constraint(ENT, cat), (), roots)

    elif task in ("re", "aste"):
        ent_entries = entity_entries(task, schema)
        rel_entries = relation_entries(task, schema)
        emit(1, (first,), None, ent_entries,
             _unique((_strip_children(r) for r in main.roots), key=lambda n: (n.label, n.value)))
        heads = _unique(
            (r for r in main.roots if r.children), key=lambda n: (n.label, n.value)
        )
        for head in heads:
            roots = [r for r in main.roots if r.children and (r.label, r.value) == (head.label, head.value)]
            emit(2, (first, second), Constraint(ENT, head.label, head.value), rel_entries, roots)
        relations = _unique(
            (c.label for r in main.roots for c in r.children), key=lambda lbl: lbl
        )
        emit(3, (second,), None, rel_entries, [SelNode(lbl) for lbl in relations])
        for rel in relations:
            roots = [
                SelNode(r.label, r.value, tuple(c for c in r.children if c.label == rel))
                for r in main.roots
                if any(c.label == rel for c in r.children)
            ]
            emit(4, (first, second), Constraint(REL, rel), ent_entries, roots)

    elif task == "ee":
        emit(1, (first,), None, trigger_entries(schema),
             _unique((_strip_children(r) for r in main.roots), key=lambda n: (n.label, n.value)))
        triggers = _unique(main.roots, key=lambda n: (n.label, n.value))
        for trig in triggers:
            roots = [r for r in main.roots if (r.label, r.value) == (trig.label, trig.value)]
            emit(2, (first, second), Constraint(TRI, trig.label, trig.value),
                 argument_entries(schema), roots)

    elif task == "asqp":
        cat_entry = (CAT, "category")
        emit(1, (first,), None, (cat_entry,),
             _unique((SelNode(r.label, r.value) for r in main.roots), key=lambda n: n.value))
        for n, slot in ((2, "aspect"), (3, "opinion"), (4, "polarity")):
            roots = _unique(
                (
                    SelNode(r.label, r.value, tuple(c for c in r.children if c.label == slot)[:1])
                    for r in main.roots
                ),
                key=lambda node: (node.value, node.children),
            )
            emit(n, (first, second), None, (cat_entry, (ARG, slot)), roots)

    else:
        raise ValueError(f"unknown task {task!r}")

    return out
