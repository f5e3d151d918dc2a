"""Hard-stage construction: concatenate pairs of training instances.

A hard example joins two texts with a single space and concatenates their
target structures (base roots first). Partners are always drawn from the
pool of instances with non-empty gold; bases may be empty.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .model import (
    Argument,
    CanonicalInstance,
    Entity,
    Event,
    RelationTriple,
    SentimentTuple,
    Span,
    is_empty_target,
)
from .sel import SelStructure, structure_of


@dataclass(frozen=True)
class HardInstance:
    base_id: str
    partner_id: str
    text: str
    target: SelStructure
    offset_shift: int


def _shift_span(span: Span, delta: int) -> Span:
    if span.is_implicit:
        return span
    return Span(span.start + delta, span.end + delta, span.text)


def _shift_entity(ent: Entity, delta: int) -> Entity:
    return Entity(_shift_span(ent.span, delta), ent.category)


def shift_instance(inst: CanonicalInstance, delta: int, text: str) -> CanonicalInstance:
    """Rebase all spans by ``delta`` against the given replacement text."""

    return CanonicalInstance(
        id=inst.id,
        task=inst.task,
        text=text,
        entities=tuple(_shift_entity(e, delta) for e in inst.entities),
        relations=inst.relations,
        events=tuple(
            Event(
                _shift_entity(ev.trigger, delta),
                tuple(Argument(_shift_span(a.span, delta), a.role) for a in ev.arguments),
            )
            for ev in inst.events
        ),
        sentiments=tuple(
            replace(st, aspect=_shift_span(st.aspect, delta), opinion=_shift_span(st.opinion, delta))
            for st in inst.sentiments
        ),
    )


def merge_instances(base: CanonicalInstance, partner: CanonicalInstance) -> CanonicalInstance:
    """A single well-formed instance covering the concatenated text."""

    if base.task != partner.task:
        raise ValueError(f"task mismatch: {base.task!r} vs {partner.task!r}")
    shift = len(base.text) + 1
    text = f"{base.text} {partner.text}"
    moved = shift_instance(partner, shift, text)
    offset = len(base.entities)
    return CanonicalInstance(
        id=f"{base.id}+{partner.id}",
        task=base.task,
        text=text,
        entities=base.entities + moved.entities,
        relations=base.relations
        + tuple(RelationTriple(r.head + offset, r.relation, r.tail + offset) for r in moved.relations),
        events=base.events + moved.events,
        sentiments=base.sentiments + moved.sentiments,
    )


def compose(base: CanonicalInstance, partner: CanonicalInstance, task: str) -> HardInstance:
    """Build one hard instance; the partner must have a non-empty target."""

    if is_empty_target(partner):
        raise ValueError(f"partner {partner.id!r} has an empty target")
    if base.task != partner.task:
        raise ValueError(f"task mismatch: {base.task!r} vs {partner.task!r}")
    shift = len(base.text) + 1
    text = f"{base.text} {partner.text}"
    moved = shift_instance(partner, shift, text)
    roots = structure_of(base, task).roots + structure_of(moved, task).roots
    return HardInstance(base.id, partner.id, text, SelStructure(roots), shift)


def build_hard_set(train: list[CanonicalInstance], m: int, seed: int) -> list[HardInstance]:
    """Exactly ``len(train) * m`` hard instances, deterministic per seed.

    Each base draws ``m`` partners uniformly with replacement from the
    non-empty pool, from an RNG stream keyed on (seed, base index), so the
    output is independent of processing order.
    """

    if m < 1:
        raise ValueError("m must be >= 1")
    pool = [inst for inst in train if not is_empty_target(inst)]
    if not pool:
        raise ValueError("no instances with non-empty targets to draw partners from")
    task = train[0].task
    out: list[HardInstance] = []
    for i, base in enumerate(train):
        rng = random.Random(f"{seed}:{i}")
        for _ in range(m):
            partner = pool[rng.randrange(len(pool))]
            out.append(compose(base, partner, task))
    return out
