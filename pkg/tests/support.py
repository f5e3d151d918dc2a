"""Seeded random generators shared by the module and acceptance tests."""

from __future__ import annotations

import random

from selkit.model import (
    IMPLICIT_SPAN,
    Argument,
    CanonicalInstance,
    Entity,
    Event,
    RelationTriple,
    Schema,
    SentimentTuple,
    Span,
)
from selkit.sel import SelNode, SelStructure

WORDS = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot",
    "golf", "hotel", "india", "juliet", "kilo", "lima",
]

LABEL_CHARS = "abcdefghijklmnopqrstuvwxyz"
VALUE_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789 ,.'-"


def random_label(rng: random.Random) -> str:
    return "".join(rng.choice(LABEL_CHARS) for _ in range(rng.randint(1, 8)))


def random_value(rng: random.Random) -> str:
    while True:
        value = "".join(rng.choice(VALUE_CHARS) for _ in range(rng.randint(1, 12)))
        if value == value.strip() and "  " not in value and value:
            return value


def random_node(rng: random.Random, depth: int) -> SelNode:
    value = random_value(rng) if rng.random() < 0.7 else None
    n_children = rng.randint(0, 3) if depth > 0 else 0
    children = tuple(random_node(rng, depth - 1) for _ in range(n_children))
    return SelNode(random_label(rng), value, children)


def random_structure(rng: random.Random, max_depth: int = 3) -> SelStructure:
    n_roots = rng.randint(0, 4)
    return SelStructure(tuple(random_node(rng, max_depth) for _ in range(n_roots)))


def _token_spans(text: str) -> list[tuple[int, int]]:
    spans = []
    pos = 0
    for tok in text.split(" "):
        spans.append((pos, pos + len(tok)))
        pos += len(tok) + 1
    return spans


def random_text(rng: random.Random, n_min: int = 4, n_max: int = 12) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(n_min, n_max)))


def _pick_span(rng: random.Random, text: str) -> Span:
    spans = _token_spans(text)
    i = rng.randrange(len(spans))
    j = min(len(spans) - 1, i + rng.choice([0, 0, 0, 1]))
    start, end = spans[i][0], spans[j][1]
    return Span(start, end, text[start:end])


NER_CATEGORIES = ("location", "organization", "person")
RE_RELATIONS = ("part of", "used for", "compare")
EE_TYPES = ("attack", "meet", "elect")
EE_ROLES = ("place", "agent", "target")
ASPECT_CATEGORIES = ("food quality", "service general", "ambience general")
POLARITIES = ("positive", "negative", "neutral")


def schema_for(task: str) -> Schema:
    if task == "ner":
        return Schema(task="ner", entity_categories=frozenset(NER_CATEGORIES))
    if task == "re":
        return Schema(
            task="re",
            entity_categories=frozenset(NER_CATEGORIES),
            relations=frozenset(RE_RELATIONS),
        )
    if task == "ee":
        return Schema(task="ee", event_types=frozenset(EE_TYPES), argument_roles=frozenset(EE_ROLES))
    if task == "aste":
        return Schema(task="aste", polarities=frozenset(POLARITIES))
    if task == "asqp":
        return Schema(
            task="asqp",
            aspect_categories=frozenset(ASPECT_CATEGORIES),
            polarities=frozenset(POLARITIES),
        )
    raise ValueError(task)


def random_instance(rng: random.Random, task: str, ident: str, allow_empty: bool = True) -> CanonicalInstance:
    text = random_text(rng)
    low = 0 if allow_empty else 1

    if task == "ner":
        ents = tuple(
            Entity(_pick_span(rng, text), rng.choice(NER_CATEGORIES))
            for _ in range(rng.randint(low, 4))
        )
        return CanonicalInstance(id=ident, task="ner", text=text, entities=ents)

    if task == "re":
        n_ents = rng.randint(low, 4)
        ents = tuple(
            Entity(_pick_span(rng, text), rng.choice(NER_CATEGORIES)) for _ in range(n_ents)
        )
        rels = []
        if n_ents >= 2:
            for _ in range(rng.randint(0 if allow_empty else 0, 3)):
                head, tail = rng.sample(range(n_ents), 2)
                rels.append(RelationTriple(head, rng.choice(RE_RELATIONS), tail))
        return CanonicalInstance(id=ident, task="re", text=text, entities=ents, relations=tuple(rels))

    if task == "ee":
        events = []
        for _ in range(rng.randint(low, 3)):
            trigger = Entity(_pick_span(rng, text), rng.choice(EE_TYPES))
            args = tuple(
                Argument(_pick_span(rng, text), rng.choice(EE_ROLES))
                for _ in range(rng.randint(0, 3))
            )
            events.append(Event(trigger, args))
        return CanonicalInstance(id=ident, task="ee", text=text, events=tuple(events))

    if task == "aste":
        tuples = []
        seen = set()
        for _ in range(rng.randint(low, 3)):
            st = SentimentTuple(
                aspect=_pick_span(rng, text),
                opinion=_pick_span(rng, text),
                polarity=rng.choice(POLARITIES),
            )
            key = (st.aspect, st.opinion, st.polarity)
            if key not in seen:
                seen.add(key)
                tuples.append(st)
        return CanonicalInstance(id=ident, task="aste", text=text, sentiments=tuple(tuples))

    if task == "asqp":
        tuples = []
        for _ in range(rng.randint(low, 3)):
            aspect = IMPLICIT_SPAN if rng.random() < 0.2 else _pick_span(rng, text)
            opinion = IMPLICIT_SPAN if rng.random() < 0.2 else _pick_span(rng, text)
            tuples.append(
                SentimentTuple(
                    aspect=aspect,
                    opinion=opinion,
                    polarity=rng.choice(POLARITIES),
                    category=rng.choice(ASPECT_CATEGORIES),
                )
            )
        return CanonicalInstance(id=ident, task="asqp", text=text, sentiments=tuple(tuples))

    raise ValueError(task)
