"""Codec for the nested-parenthesis structure language used as model targets.

Grammar of a well-formed string:

    S    -> '(' node* ')'
    node -> '(' label (': ' value)? node* ')'

Sibling nodes are joined by a single space. Labels and values are emitted
verbatim; values must not contain parentheses (span texts are normalized by
deleting them before serialization).

``parse`` is total: any input yields a structure plus diagnostics describing
what had to be repaired or dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import CanonicalInstance, Schema

LABEL_VALUE_SEP = ": "


@dataclass(frozen=True)
class SelNode:
    label: str
    value: str | None = None
    children: tuple[SelNode, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def head(self) -> str:
        return self.label if self.value is None else f"{self.label}{LABEL_VALUE_SEP}{self.value}"


@dataclass(frozen=True)
class SelStructure:
    roots: tuple[SelNode, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "roots", tuple(self.roots))


@dataclass
class ParseDiagnostics:
    recovered: bool = False
    dropped_fragments: int = 0
    auto_closed_parens: int = 0
    notes: list[str] = field(default_factory=list)

    def note(self, message: str) -> None:
        self.recovered = True
        self.notes.append(message)

    def drop(self, message: str) -> None:
        self.dropped_fragments += 1
        self.note(message)


def _check_part(text: str, what: str) -> None:
    if "(" in text or ")" in text:
        raise ValueError(f"{what} contains a parenthesis: {text!r}")


def _serialize_node(node: SelNode) -> str:
    if not node.label:
        raise ValueError("node label must be non-empty")
    _check_part(node.label, "label")
    if node.value is not None:
        _check_part(node.value, "value")
    inner = node.head
    if node.children:
        inner += " " + " ".join(_serialize_node(c) for c in node.children)
    return f"({inner})"


def serialize(structure: SelStructure) -> str:
    """Render a structure to its canonical single-line string."""

    return "(" + " ".join(_serialize_node(n) for n in structure.roots) + ")"


def render_tree(structure: SelStructure) -> str:
    """Indented multi-line rendering, one node per line (for inspection)."""

    lines: list[str] = []

    def walk(node: SelNode, depth: int) -> None:
        lines.append("  " * depth + node.head)
        for child in node.children:
            walk(child, depth + 1)

    for root in structure.roots:
        walk(root, 0)
    return "\n".join(lines)


def schema_labels(schema: Schema) -> tuple[str, ...]:
    """All labels that may head a node under this schema, longest first.

    Includes the structural slot labels the sentiment tasks use in addition
    to the dataset inventory.
    """

    labels = set(
        schema.entity_categories
        | schema.relations
        | schema.event_types
        | schema.argument_roles
        | schema.polarities
    )
    if schema.task == "aste":
        labels |= {"aspect", "opinion"}
    if schema.task == "asqp":
        labels |= {"category", "aspect", "opinion", "polarity"}
    return tuple(sorted(labels, key=len, reverse=True))


def _split_head(head: str, known: tuple[str, ...]) -> tuple[str, str | None]:
    head = head.strip()
    for label in known:
        if head == label:
            return label, None
        if head.startswith(label + LABEL_VALUE_SEP):
            value = head[len(label) + len(LABEL_VALUE_SEP) :].strip()
            return label, value or None
    if LABEL_VALUE_SEP in head:
        label, value = head.split(LABEL_VALUE_SEP, 1)
        return label.strip(), value.strip() or None
    if ":" in head:
        label, value = head.split(":", 1)
        return label.strip(), value.strip() or None
    return head, None


class _Group:
    __slots__ = ("items",)

    def __init__(self) -> None:
        self.items: list[tuple[str, object]] = []  # ("text", str) | ("group", _Group)

    def head_text(self) -> str:
        parts = []
        for kind, payload in self.items:
            if kind == "group":
                break
            parts.append(payload)
        return "".join(parts).strip()


def parse(text: str, schema: Schema | None = None) -> tuple[SelStructure, ParseDiagnostics]:
    """Best-effort parse of a (possibly malformed) generated string.

    Never raises: unbalanced trailing output is auto-closed, stray closers and
    text outside any node are dropped, and label-less groups are spliced into
    their parent. All repairs are counted in the returned diagnostics.
    """

    diags = ParseDiagnostics()
    known = schema_labels(schema) if schema is not None else ()

    top = _Group()
    stack = [top]
    buf: list[str] = []

    def flush() -> None:
        if buf:
            piece = "".join(buf)
            buf.clear()
            if piece.strip():
                stack[-1].items.append(("text", piece.strip()))

    for ch in text:
        if ch == "(":
            flush()
            group = _Group()
            stack[-1].items.append(("group", group))
            stack.append(group)
        elif ch == ")":
            flush()
            if len(stack) > 1:
                stack.pop()
            else:
                diags.note("stray closing parenthesis ignored")
        else:
            buf.append(ch)
    flush()
    while len(stack) > 1:
        stack.pop()
        diags.auto_closed_parens += 1
        diags.recovered = True

    def group_to_nodes(group: _Group) -> list[SelNode]:
        head_parts: list[str] = []
        children: list[SelNode] = []
        seen_child = False
        for kind, payload in group.items:
            if kind == "group":
                seen_child = True
                children.extend(group_to_nodes(payload))  # type: ignore[arg-type]
            elif seen_child:
                diags.drop(f"text after child nodes dropped: {payload!r}")
            else:
                head_parts.append(payload)  # type: ignore[arg-type]
        head = " ".join(head_parts).strip()
        if not head:
            if children:
                diags.note("label-less group spliced into parent")
                return children
            diags.drop("empty group dropped")
            return []
        label, value = _split_head(head, known)
        if not label:
            diags.drop(f"unlabelable head dropped: {head!r}")
            return []
        return [SelNode(label, value, tuple(children))]

    top_groups = [payload for kind, payload in top.items if kind == "group"]
    for kind, payload in top.items:
        if kind == "text":
            diags.drop(f"text outside any node dropped: {payload!r}")

    roots: list[SelNode] = []
    if len(top_groups) == 1 and top_groups[0].head_text() == "":  # type: ignore[union-attr]
        wrapper: _Group = top_groups[0]  # type: ignore[assignment]
        for kind, payload in wrapper.items:
            if kind == "group":
                roots.extend(group_to_nodes(payload))  # type: ignore[arg-type]
            elif str(payload).strip():
                diags.drop(f"text inside wrapper dropped: {payload!r}")
    else:
        if top_groups:
            diags.note("missing single outer wrapper; top-level groups read as roots")
        for group in top_groups:
            roots.extend(group_to_nodes(group))  # type: ignore[arg-type]

    return SelStructure(tuple(roots)), diags


# --- linearization of canonical instances ---------------------------------


def _value(text: str) -> str | None:
    """Node value for a span text: parentheses deleted, empty mapped to None."""

    cleaned = text.replace("(", "").replace(")", "")
    return cleaned or None


def _span_key(span) -> tuple[int, int]:
    return (span.start, span.end)


def structure_of(inst: CanonicalInstance, task: str) -> SelStructure:
    """Linearize an instance's annotations into the target structure.

    Output ordering is recomputed from character offsets, so it does not
    depend on annotation list order.
    """

    if task == "ner":
        ents = sorted(inst.entities, key=lambda e: (*_span_key(e.span), e.category))
        return SelStructure(tuple(SelNode(e.category, _value(e.span.text)) for e in ents))

    if task == "re":
        # (sort key, child node) per head entity index; key = tail position
        children: dict[int, list[tuple[tuple, SelNode]]] = {}
        for rel in inst.relations:
            tail = inst.entities[rel.tail]
            key = (*_span_key(tail.span), rel.relation)
            children.setdefault(rel.head, []).append(
                (key, SelNode(rel.relation, _value(tail.span.text)))
            )
        order = sorted(
            range(len(inst.entities)),
            key=lambda i: (*_span_key(inst.entities[i].span), inst.entities[i].category),
        )
        roots = []
        for i in order:
            ent = inst.entities[i]
            kids = tuple(node for _, node in sorted(children.get(i, []), key=lambda kn: kn[0]))
            roots.append(SelNode(ent.category, _value(ent.span.text), kids))
        return SelStructure(tuple(roots))

    if task == "aste":
        # aspect/opinion terms become entities; polarities hang off the aspect.
        terms: dict[tuple[int, int, str], str] = {}
        children: dict[tuple[int, int], list[tuple[tuple, SelNode]]] = {}
        seen: set[tuple] = set()
        for st in inst.sentiments:
            a, o = _span_key(st.aspect), _span_key(st.opinion)
            terms.setdefault((*a, "aspect"), st.aspect.text)
            terms.setdefault((*o, "opinion"), st.opinion.text)
            key = (*a, *o, st.polarity)
            if key not in seen:
                seen.add(key)
                children.setdefault(a, []).append(
                    ((*o, st.polarity), SelNode(st.polarity, _value(st.opinion.text)))
                )
        roots = []
        for start, end, label in sorted(terms):
            text = terms[(start, end, label)]
            if label == "aspect":
                kids = tuple(
                    node
                    for _, node in sorted(children.get((start, end), []), key=lambda kn: kn[0])
                )
            else:
                kids = ()
            roots.append(SelNode(label, _value(text), kids))
        return SelStructure(tuple(roots))

    if task == "ee":
        events = sorted(
            inst.events, key=lambda ev: (*_span_key(ev.trigger.span), ev.trigger.category)
        )
        roots = []
        for ev in events:
            args = sorted(ev.arguments, key=lambda a: (*_span_key(a.span), a.role))
            kids = tuple(SelNode(a.role, _value(a.span.text)) for a in args)
            roots.append(SelNode(ev.trigger.category, _value(ev.trigger.span.text), kids))
        return SelStructure(tuple(roots))

    if task == "asqp":
        quads = sorted(
            inst.sentiments,
            key=lambda st: (*_span_key(st.aspect), *_span_key(st.opinion), st.category or "", st.polarity),
        )
        roots = []
        for st in quads:
            kids = (
                SelNode("aspect", _value(st.aspect.text)),
                SelNode("opinion", _value(st.opinion.text)),
                SelNode("polarity", st.polarity),
            )
            roots.append(SelNode("category", st.category, kids))
        return SelStructure(tuple(roots))

    raise ValueError(f"unknown task {task!r}")
