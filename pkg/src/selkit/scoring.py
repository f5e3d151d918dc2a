"""Offset grounding of parsed predictions and micro-F1 scoring.

Generated structures carry surface strings only; grounding maps each
predicted mention back to character offsets by scanning the source text
left to right. Identical predictions within the same structural slot consume
successive occurrences, so duplicates can legitimately match repeated gold
mentions. Mentions with no remaining occurrence are kept as predictions but
can never match gold.

Match keys per metric:

    entity           (span, category)
    relation_strict  (head span, head category, relation, tail span, tail category)
    trigger          (span, event type)
    argument         (event type, role, span)
    triplet          (aspect span, opinion span, polarity)
    quad             (category, aspect text, opinion text, polarity)  [string level]

where a span is (start, end) when grounded and ("?", text) when not.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dataio import DataError, PredictionRecord
from .model import CanonicalInstance, Schema
from .sel import SelStructure, parse

METRICS_BY_TASK = {
    "ner": ("entity",),
    "re": ("entity", "relation_strict"),
    "ee": ("trigger", "argument"),
    "aste": ("triplet",),
    "asqp": ("quad",),
}

NULL_LITERAL = "null"


@dataclass
class GroundingDiagnostics:
    ungrounded: int = 0
    notes: list[str] = field(default_factory=list)

    def note(self, message: str) -> None:
        self.notes.append(message)


@dataclass
class GroundedPrediction:
    """Match-key tuples per metric, plus what could not be grounded."""

    tuples: dict[str, list[tuple]]
    diagnostics: GroundingDiagnostics


class _OccurrenceLedger:
    """Leftmost-unconsumed occurrence assignment, per structural slot."""

    def __init__(self, text: str, diagnostics: GroundingDiagnostics) -> None:
        self.text = text
        self.cursor: dict[tuple, int] = {}
        self.diagnostics = diagnostics

    def take(self, slot: tuple, mention: str) -> tuple:
        """Span key for this mention: (start, end), or ("?", text) if absent."""

        pos = self.cursor.get(slot, 0)
        i = self.text.find(mention, pos)
        if i < 0:
            self.diagnostics.ungrounded += 1
            self.diagnostics.note(f"ungrounded mention {mention!r}")
            return ("?", mention)
        self.cursor[slot] = i + 1
        assert self.text[i : i + len(mention)] == mention
        return (i, i + len(mention))


def _grounded(key: tuple) -> bool:
    return key[0] != "?"


def ground(
    parsed: SelStructure, text: str, schema: Schema, task: str
) -> GroundedPrediction:
    """Resolve a parsed structure against its source text."""

    diags = GroundingDiagnostics()
    ledger = _OccurrenceLedger(text, diags)
    tuples: dict[str, list[tuple]] = {m: [] for m in METRICS_BY_TASK[task]}

    if task == "ner":
        for node in parsed.roots:
            if node.value is None:
                diags.note(f"entity node without a span text: {node.label!r}")
                continue
            key = ledger.take(("root", node.label, node.value), node.value)
            tuples["entity"].append((key, node.label))

    elif task == "re":
        heads: list[tuple] = []
        span_to_category: dict[tuple, str] = {}
        for ri, node in enumerate(parsed.roots):
            if node.value is None:
                diags.note(f"entity node without a span text: {node.label!r}")
                heads.append(None)
                continue
            key = ledger.take(("root", node.label, node.value), node.value)
            heads.append(key)
            tuples["entity"].append((key, node.label))
            if _grounded(key):
                span_to_category.setdefault(key, node.label)
        for ri, node in enumerate(parsed.roots):
            if heads[ri] is None:
                continue
            for child in node.children:
                if child.value is None:
                    diags.note(f"relation node without a tail text: {child.label!r}")
                    continue
                tail_key = ledger.take(("child", ri, child.label, child.value), child.value)
                tail_category = span_to_category.get(tail_key, "unknown")
                tuples["relation_strict"].append(
                    (heads[ri], node.label, child.label, tail_key, tail_category)
                )

    elif task == "ee":
        for ri, node in enumerate(parsed.roots):
            if node.value is not None:
                key = ledger.take(("root", node.label, node.value), node.value)
                tuples["trigger"].append((key, node.label))
            else:
                diags.note(f"event node without a trigger text: {node.label!r}")
            for child in node.children:
                if child.value is None:
                    diags.note(f"argument node without a text: {child.label!r}")
                    continue
                arg_key = ledger.take(("child", ri, child.label, child.value), child.value)
                tuples["argument"].append((node.label, child.label, arg_key))

    elif task == "aste":
        for ri, node in enumerate(parsed.roots):
            if node.label not in ("aspect", "opinion"):
                diags.note(f"unexpected term label {node.label!r}")
                continue
            if node.value is None:
                diags.note(f"term node without a text: {node.label!r}")
                continue
            key = ledger.take(("root", node.label, node.value), node.value)
            if node.label != "aspect":
                continue
            for child in node.children:
                if child.value is None:
                    diags.note(f"polarity node without an opinion text: {child.label!r}")
                    continue
                opinion_key = ledger.take(("child", ri, child.label, child.value), child.value)
                tuples["triplet"].append((key, opinion_key, child.label))

    elif task == "asqp":
        for node in parsed.roots:
            if node.label != "category" or node.value is None:
                diags.note(f"malformed quad node: {node.head!r}")
                continue
            slots = {"aspect": NULL_LITERAL, "opinion": NULL_LITERAL, "polarity": NULL_LITERAL}
            seen: set[str] = set()
            for child in node.children:
                if child.label not in slots:
                    diags.note(f"unexpected quad slot {child.label!r}")
                elif child.label in seen:
                    diags.note(f"duplicate quad slot {child.label!r}")
                else:
                    seen.add(child.label)
                    slots[child.label] = child.value if child.value is not None else NULL_LITERAL
            tuples["quad"].append(
                (node.value, slots["aspect"], slots["opinion"], slots["polarity"])
            )

    else:
        raise ValueError(f"unknown task {task!r}")

    return GroundedPrediction(tuples, diags)


def gold_tuples(inst: CanonicalInstance, task: str) -> dict[str, list[tuple]]:
    """Match-key tuples of the gold annotations, same shapes as ``ground``."""

    tuples: dict[str, list[tuple]] = {m: [] for m in METRICS_BY_TASK[task]}

    if task == "ner":
        for ent in inst.entities:
            tuples["entity"].append(((ent.span.start, ent.span.end), ent.category))
    elif task == "re":
        for ent in inst.entities:
            tuples["entity"].append(((ent.span.start, ent.span.end), ent.category))
        for rel in inst.relations:
            head, tail = inst.entities[rel.head], inst.entities[rel.tail]
            tuples["relation_strict"].append(
                (
                    (head.span.start, head.span.end),
                    head.category,
                    rel.relation,
                    (tail.span.start, tail.span.end),
                    tail.category,
                )
            )
    elif task == "ee":
        for ev in inst.events:
            trig = ev.trigger
            tuples["trigger"].append(((trig.span.start, trig.span.end), trig.category))
            for arg in ev.arguments:
                tuples["argument"].append(
                    (trig.category, arg.role, (arg.span.start, arg.span.end))
                )
    elif task == "aste":
        for st in inst.sentiments:
            tuples["triplet"].append(
                (
                    (st.aspect.start, st.aspect.end),
                    (st.opinion.start, st.opinion.end),
                    st.polarity,
                )
            )
    elif task == "asqp":
        for st in inst.sentiments:
            tuples["quad"].append(
                (st.category, st.aspect.text, st.opinion.text, st.polarity)
            )
    else:
        raise ValueError(f"unknown task {task!r}")
    return tuples


@dataclass
class MetricScore:
    tp: int
    n_pred: int
    n_gold: int
    precision: float
    recall: float
    f1: float


def compute_prf(tp: int, n_pred: int, n_gold: int) -> MetricScore:
    """Micro precision/recall/F1; an all-empty corpus scores F1 = 1.0."""

    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    if n_pred == 0 and n_gold == 0:
        f1 = 1.0
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricScore(tp, n_pred, n_gold, precision, recall, f1)


@dataclass
class ScoreReport:
    task: str
    metrics: dict[str, MetricScore]
    diagnostics: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "metrics": {
                name: {
                    "tp": m.tp,
                    "n_pred": m.n_pred,
                    "n_gold": m.n_gold,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                }
                for name, m in self.metrics.items()
            },
            "diagnostics": dict(self.diagnostics),
        }

    def format_table(self) -> str:
        lines = [f"task: {self.task}"]
        lines.append(f"{'metric':<16} {'P':>8} {'R':>8} {'F1':>8} {'tp':>6} {'pred':>6} {'gold':>6}")
        for name, m in self.metrics.items():
            lines.append(
                f"{name:<16} {m.precision:8.4f} {m.recall:8.4f} {m.f1:8.4f} "
                f"{m.tp:6d} {m.n_pred:6d} {m.n_gold:6d}"
            )
        diag = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        lines.append(f"diagnostics: {diag}")
        return "\n".join(lines)


def score(
    gold: list[CanonicalInstance],
    preds: list[PredictionRecord],
    task: str,
    schema: Schema,
) -> ScoreReport:
    """Corpus micro-F1 over deduplicated match-key tuples.

    Instances without a prediction record are scored as empty output; a
    prediction id that matches no gold instance is an error.
    """

    gold_ids = {inst.id for inst in gold}
    unknown = sorted({p.id for p in preds} - gold_ids)
    if unknown:
        raise DataError(f"prediction ids match no gold instance: {', '.join(unknown)}")

    outputs: dict[str, str] = {}
    duplicates = 0
    for rec in preds:
        if rec.id in outputs:
            duplicates += 1
        outputs[rec.id] = rec.output

    counts = {m: [0, 0, 0] for m in METRICS_BY_TASK[task]}
    diagnostics = {
        "instances": len(gold),
        "missing_predictions": 0,
        "duplicate_prediction_ids": duplicates,
        "parses_recovered": 0,
        "dropped_fragments": 0,
        "auto_closed_parens": 0,
        "ungrounded_mentions": 0,
    }

    for inst in gold:
        gold_by_metric = gold_tuples(inst, task)
        output = outputs.get(inst.id)
        if output is None:
            diagnostics["missing_predictions"] += 1
            pred_by_metric: dict[str, list[tuple]] = {m: [] for m in counts}
        else:
            structure, parse_diags = parse(output, schema)
            diagnostics["parses_recovered"] += int(parse_diags.recovered)
            diagnostics["dropped_fragments"] += parse_diags.dropped_fragments
            diagnostics["auto_closed_parens"] += parse_diags.auto_closed_parens
            grounded = ground(structure, inst.text, schema, task)
            diagnostics["ungrounded_mentions"] += grounded.diagnostics.ungrounded
            pred_by_metric = grounded.tuples
        for metric, triple in counts.items():
            pred_set = set(pred_by_metric[metric])
            gold_set = set(gold_by_metric[metric])
            triple[0] += len(pred_set & gold_set)
            triple[1] += len(pred_set)
            triple[2] += len(gold_set)

    metrics = {m: compute_prf(*counts[m]) for m in counts}
    return ScoreReport(task=task, metrics=metrics, diagnostics=diagnostics)
