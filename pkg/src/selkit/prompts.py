"""Input-prefix rendering: hint tokens, optional constraint, schema listing.

The rendered prompt is the model-input contract; every bracketed token below
must be registered as an atomic vocabulary item by any trainer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Schema

TEXT_MARKER = "[Text]"
ENT, REL, TRI, ARG, CAT = "[Ent]", "[Rel]", "[Tri]", "[Arg]", "[Cat]"

# hint token pairs per task: (first element, second element)
HINTS = {
    "ner": ("[HEC]", "[HES]"),
    "re": ("[HE]", "[HR]"),
    "aste": ("[HE]", "[HR]"),
    "ee": ("[HT]", "[HA]"),
    "asqp": ("[HC]", "[HA]"),
}

# rendering order of schema/constraint marker groups
_MARKER_ORDER = {ENT: 0, REL: 1, TRI: 2, CAT: 3, ARG: 4}

RESERVED_TOKENS = tuple(
    sorted({t for pair in HINTS.values() for t in pair} | set(_MARKER_ORDER) | {TEXT_MARKER})
)


@dataclass(frozen=True)
class Constraint:
    """Restriction on the target: a label, optionally pinned to a span text."""

    marker: str
    label: str
    value: str | None = None

    def render(self) -> str:
        if self.value is None:
            return f"{self.marker} {self.label}"
        return f"{self.marker} {self.label}: {self.value}"


@dataclass(frozen=True)
class PromptSpec:
    hints: tuple[str, ...]
    constraint: Constraint | None = None
    schema_entries: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "hints", tuple(self.hints))
        object.__setattr__(self, "schema_entries", tuple(self.schema_entries))


def build_prompt(spec: PromptSpec, text: str) -> str:
    """Render ``hints constraint? schema... [Text] text`` with single spaces.

    Schema entries are sorted internally: marker groups in fixed order
    (entities before relations, triggers/categories before arguments), labels
    alphabetical within a group, so input order never changes the output.
    """

    if not spec.hints:
        raise ValueError("prompt requires at least one hint token")
    hint_tokens = {t for pair in HINTS.values() for t in pair}
    for hint in spec.hints:
        if hint not in hint_tokens:
            raise ValueError(f"unknown hint token {hint!r}")

    parts = list(spec.hints)
    if spec.constraint is not None:
        if spec.constraint.marker not in _MARKER_ORDER:
            raise ValueError(f"unknown constraint marker {spec.constraint.marker!r}")
        parts.append(spec.constraint.render())
    for marker, label in sorted(
        spec.schema_entries, key=lambda e: (_MARKER_ORDER.get(e[0], -1), e[1])
    ):
        if marker not in _MARKER_ORDER:
            raise ValueError(f"unknown schema marker {marker!r}")
        parts.append(f"{marker} {label}")
    parts.append(TEXT_MARKER)
    parts.append(text)
    return " ".join(parts)


def entity_entries(task: str, schema: Schema) -> tuple[tuple[str, str], ...]:
    if task == "aste":
        return ((ENT, "aspect"), (ENT, "opinion"))
    return tuple((ENT, c) for c in sorted(schema.entity_categories))


def relation_entries(task: str, schema: Schema) -> tuple[tuple[str, str], ...]:
    if task == "aste":
        return tuple((REL, p) for p in sorted(schema.polarities))
    return tuple((REL, r) for r in sorted(schema.relations))


def trigger_entries(schema: Schema) -> tuple[tuple[str, str], ...]:
    return tuple((TRI, t) for t in sorted(schema.event_types))


def argument_entries(schema: Schema) -> tuple[tuple[str, str], ...]:
    return tuple((ARG, a) for a in sorted(schema.argument_roles))


def main_schema_entries(task: str, schema: Schema) -> tuple[tuple[str, str], ...]:
    if task == "ner":
        return entity_entries(task, schema)
    if task in ("re", "aste"):
        return entity_entries(task, schema) + relation_entries(task, schema)
    if task == "ee":
        return trigger_entries(schema) + argument_entries(schema)
    if task == "asqp":
        # literal role slots, not the category inventory
        return ((CAT, "category"), (ARG, "aspect"), (ARG, "opinion"), (ARG, "polarity"))
    raise ValueError(f"unknown task {task!r}")


def main_prompt_spec(task: str, schema: Schema) -> PromptSpec:
    """Prompt for the main task (also used verbatim by hard-stage examples)."""

    return PromptSpec(hints=HINTS[task], schema_entries=main_schema_entries(task, schema))
