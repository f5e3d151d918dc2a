"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to get one PASS line per
criterion on stdout.
"""

from __future__ import annotations

import json
import random
import time
from collections import Counter
from pathlib import Path

import pytest

from selkit.cli import CompileConfig, compile_dataset
from selkit.compose import build_hard_set, compose, merge_instances
from selkit.dataio import PredictionRecord, read_compiled
from selkit.model import CanonicalInstance, is_empty_target
from selkit.scoring import METRICS_BY_TASK, gold_tuples, ground, score
from selkit.sel import SelNode, SelStructure, parse, serialize, structure_of
from selkit.skills import decompose
from support import (
    WORDS,
    random_instance,
    random_structure,
    schema_for,
)

TASKS = ("ner", "re", "ee", "aste", "asqp")


def report(name: str, started: float, budget: float) -> None:
    elapsed = time.perf_counter() - started
    assert elapsed < budget, f"{name}: {elapsed:.2f}s exceeded {budget}s budget"
    print(f"PASS {name} ({elapsed:.2f}s)")


def test_appendix_fidelity(data_dir, tmp_path):
    started = time.perf_counter()
    golden = json.loads((data_dir / "golden.json").read_text(encoding="utf-8"))
    compiled: dict[str, list] = {}
    for task in TASKS:
        out = tmp_path / task
        compile_dataset(
            CompileConfig(
                task=task,
                schema_path=data_dir / f"{task}.schema.json",
                input_path=data_dir / f"{task}.jsonl",
                out_dir=out,
                stages=("easy", "main"),
            )
        )
        compiled[task] = read_compiled(out / "easy.jsonl") + read_compiled(out / "main.jsonl")
    for row in golden:
        matches = [
            ex
            for ex in compiled[row["task"]]
            if ex.stage == row["stage"]
            and ex.skill == row["skill"]
            and ex.input == row["input"]
            and ex.target == row["target"]
            and ex.meta.get("constraint") == row["constraint"]
        ]
        assert matches, f"no compiled example matches golden row {row['task']}/{row['skill']}"
    assert len(golden) == 21
    report("appendix fidelity (21 golden rows, byte-exact)", started, budget=1.0)


def test_round_trip_10k():
    started = time.perf_counter()
    rng = random.Random(20240501)
    for _ in range(10_000):
        s = random_structure(rng)
        parsed, diags = parse(serialize(s))
        assert parsed == s
        assert not diags.recovered
        assert diags.dropped_fragments == 0
        assert diags.auto_closed_parens == 0
    report("round-trip on 10,000 random structures", started, budget=10.0)


def _triples(roots) -> Counter:
    return Counter((r.label, r.value, c.label, c.value) for r in roots for c in r.children)


def test_decomposition_laws_500():
    started = time.perf_counter()
    rng = random.Random(7321)
    for i in range(500):
        task = ("re", "aste", "ee")[i % 3]
        inst = random_instance(rng, task, f"{task}-{i}")
        schema = schema_for(task)
        by_skill: dict[str, list] = {}
        for si in decompose(inst, schema):
            by_skill.setdefault(si.skill, []).append(si)

        if task == "re":
            expected = Counter(
                (
                    inst.entities[r.head].category,
                    inst.entities[r.head].span.text,
                    r.relation,
                    inst.entities[r.tail].span.text,
                )
                for r in inst.relations
            )
            distinct_heads = {
                (inst.entities[r.head].category, inst.entities[r.head].span.text)
                for r in inst.relations
            }
            distinct_rels = {r.relation for r in inst.relations}
        elif task == "aste":
            expected = Counter(
                ("aspect", st.aspect.text, st.polarity, st.opinion.text)
                for st in inst.sentiments
            )
            distinct_heads = {("aspect", st.aspect.text) for st in inst.sentiments}
            distinct_rels = {st.polarity for st in inst.sentiments}
        else:
            expected = Counter(
                (
                    ev.trigger.category,
                    ev.trigger.span.text,
                    tuple(sorted((a.role, a.span.text) for a in ev.arguments)),
                )
                for ev in inst.events
            )
            distinct_heads = {
                (ev.trigger.category, ev.trigger.span.text) for ev in inst.events
            }
            distinct_rels = None

        if task == "ee":
            union = Counter(
                (r.label, r.value, tuple(sorted((c.label, c.value) for c in r.children)))
                for si in by_skill.get("ee.skill2", [])
                for r in si.target.roots
            )
            assert union == expected
            assert len(by_skill.get("ee.skill2", [])) == len(distinct_heads)
        else:
            union2 = Counter()
            for si in by_skill.get(f"{task}.skill2", []):
                union2 += _triples(si.target.roots)
            union4 = Counter()
            for si in by_skill.get(f"{task}.skill4", []):
                union4 += _triples(si.target.roots)
            assert union2 == expected
            assert union4 == expected
            assert len(by_skill.get(f"{task}.skill2", [])) == len(distinct_heads)
            assert len(by_skill.get(f"{task}.skill4", [])) == len(distinct_rels)
    report("decomposition union and count laws on 500 instances", started, budget=10.0)


def test_hard_stage_laws():
    started = time.perf_counter()
    rng = random.Random(515)
    sizes = [rng.randint(1, 200) for _ in range(7)] + [200]
    for n in sizes:
        m = rng.choice([1, 2, 3])
        task = rng.choice(["ner", "re", "ee", "aste"])
        train = [random_instance(rng, task, f"{task}-{i}") for i in range(n)]
        if all(is_empty_target(t) for t in train):
            train[0] = random_instance(rng, task, f"{task}-seed", allow_empty=False)
        by_id = {t.id: t for t in train}
        hard = build_hard_set(train, m, seed=rng.randint(0, 10_000))
        assert len(hard) == n * m
        for hi in hard:
            assert not is_empty_target(by_id[hi.partner_id])
        for hi in rng.sample(hard, min(len(hard), 50)):
            merged = merge_instances(by_id[hi.base_id], by_id[hi.partner_id])
            assert serialize(hi.target) == serialize(structure_of(merged, task))
            # string-level merge identity: outer parens of the two parts fuse
            assert serialize(hi.target) == _fuse(
                serialize(structure_of(by_id[hi.base_id], task)),
                serialize(
                    structure_of(
                        merge_instances(
                            CanonicalInstance(id="e", task=task, text=by_id[hi.base_id].text),
                            by_id[hi.partner_id],
                        ),
                        task,
                    )
                ),
            )
    report("hard-stage size, partner, and merge laws", started, budget=10.0)


def _fuse(a: str, b: str) -> str:
    inner_a, inner_b = a[1:-1], b[1:-1]
    if inner_a and inner_b:
        return f"({inner_a} {inner_b})"
    return f"({inner_a}{inner_b})"


def _perturb_prediction(rng: random.Random, inst: CanonicalInstance, task: str) -> str:
    structure = structure_of(inst, task)
    roots = []
    for root in structure.roots:
        if rng.random() < 0.25:
            continue
        label = root.label if rng.random() < 0.8 else rng.choice(["bogus", "location", "positive"])
        value = root.value
        if value is not None and rng.random() < 0.2:
            value = rng.choice(WORDS + ["unfindable"])
        children = tuple(c for c in root.children if rng.random() < 0.8)
        node = SelNode(label, value, children)
        roots.append(node)
        if rng.random() < 0.15:
            roots.append(node)
    if rng.random() < 0.1:
        roots.append(SelNode("category", "food quality", (SelNode("aspect", "nothing"),)))
    text = serialize(SelStructure(tuple(roots)))
    if rng.random() < 0.15:
        text = text[: rng.randint(0, len(text))]
    return text


def test_scorer_matches_bruteforce_oracle():
    started = time.perf_counter()
    rng = random.Random(90125)
    sets_per_metric = Counter()
    for i in range(1000):
        for task in TASKS:
            schema = schema_for(task)
            corpus = [
                random_instance(rng, task, f"{task}-{i}-{j}") for j in range(rng.randint(1, 2))
            ]
            preds = [
                PredictionRecord(inst.id, _perturb_prediction(rng, inst, task))
                for inst in corpus
                if rng.random() < 0.9
            ]
            result = score(corpus, preds, task, schema)

            by_id = {p.id: p.output for p in preds}
            for metric in METRICS_BY_TASK[task]:
                pooled_pred: set = set()
                pooled_gold: set = set()
                for inst in corpus:
                    parsed, _ = parse(by_id.get(inst.id, "()"), schema)
                    grounded = ground(parsed, inst.text, schema, task)
                    pooled_pred |= {(inst.id,) + t for t in grounded.tuples[metric]}
                    pooled_gold |= {(inst.id,) + t for t in gold_tuples(inst, task)[metric]}
                tp = len(pooled_pred & pooled_gold)
                p = tp / len(pooled_pred) if pooled_pred else 0.0
                r = tp / len(pooled_gold) if pooled_gold else 0.0
                if not pooled_pred and not pooled_gold:
                    f1 = 1.0
                elif p + r == 0:
                    f1 = 0.0
                else:
                    f1 = 2 * p * r / (p + r)
                got = result.metrics[metric]
                assert abs(got.f1 - f1) < 1e-12, (task, metric, got, f1)
                assert abs(got.precision - p) < 1e-12
                assert abs(got.recall - r) < 1e-12
                assert (got.tp, got.n_pred, got.n_gold) == (
                    tp,
                    len(pooled_pred),
                    len(pooled_gold),
                )
                sets_per_metric[metric] += 1
    assert all(count >= 1000 for count in sets_per_metric.values()), sets_per_metric
    report("scorer vs set-intersection oracle (1e-12, 1000+ sets/metric)", started, budget=10.0)


def test_hand_checked_f1(data_dir):
    started = time.perf_counter()
    from selkit.model import Entity, Span

    text = "aa bb cc dd"
    gold = [
        CanonicalInstance(
            id="g",
            task="ner",
            text=text,
            entities=tuple(
                Entity(Span(s, s + 2, text[s : s + 2]), "location") for s in (0, 3, 6, 9)
            ),
        )
    ]
    pred = "((location: aa) (location: bb) (person: cc))"
    result = score(gold, [PredictionRecord("g", pred)], "ner", schema_for("ner"))
    assert abs(result.metrics["entity"].f1 - 4 / 7) < 1e-12
    report("hand-checked entity F1 equals 4/7", started, budget=1.0)


def test_parser_robustness_100k(data_dir):
    started = time.perf_counter()
    rng = random.Random(31337)
    structured_alphabet = "()(): abcxyz,[]"
    for i in range(100_000):
        if i % 2:
            text = rng.randbytes(rng.randint(0, 30)).decode("latin-1")
        else:
            text = "".join(
                rng.choice(structured_alphabet) for _ in range(rng.randint(0, 30))
            )
        parse(text)  # must never raise

    truncated = "((category: food quality (aspect: pizza) (opinion: delicious) (polarity: positive))"
    structure, diags = parse(truncated, schema_for("asqp"))
    assert diags.auto_closed_parens == 1
    (root,) = structure.roots
    assert root.label == "category" and root.value == "food quality"
    assert [(c.label, c.value) for c in root.children] == [
        ("aspect", "pizza"),
        ("opinion", "delicious"),
        ("polarity", "positive"),
    ]
    grounded = ground(structure, "The pizza is delicious.", schema_for("asqp"), "asqp")
    assert grounded.tuples["quad"] == [("food quality", "pizza", "delicious", "positive")]
    report("parser fuzz on 100k byte strings + unbalanced quad recovery", started, budget=10.0)


def test_low_resource_sampler_sizes():
    started = time.perf_counter()
    from selkit.dataio import sample_low_resource

    rng = random.Random(64)
    train = [random_instance(rng, "aste", f"a{i}") for i in range(1266)]
    expected = {0.01: 13, 0.05: 63, 0.10: 127}
    for ratio, size in expected.items():
        sample = sample_low_resource(train, ratio, seed=11)
        again = sample_low_resource(train, ratio, seed=11)
        assert len(sample) == size
        assert [x.id for x in sample] == [x.id for x in again]
    report("low-resource sampler yields 13/63/127 of 1266, reproducibly", started, budget=1.0)


def test_compile_determinism(data_dir, tmp_path):
    started = time.perf_counter()
    rng = random.Random(3141)
    from selkit.dataio import write_canonical, write_schema

    train = [random_instance(rng, "re", f"r{i}") for i in range(20)]
    if all(is_empty_target(t) for t in train):
        train[0] = random_instance(rng, "re", "seed", allow_empty=False)
    corpus = tmp_path / "train.jsonl"
    schema_path = tmp_path / "schema.json"
    write_canonical(train, corpus)
    write_schema(schema_for("re"), schema_path)
    out = tmp_path / "out"
    config = CompileConfig(
        task="re", schema_path=schema_path, input_path=corpus, out_dir=out, m=2, seed=13
    )
    compile_dataset(config)
    names = ["easy.jsonl", "hard.jsonl", "main.jsonl", "manifest.json"]
    first = {name: (out / name).read_bytes() for name in names}
    compile_dataset(config)
    for name in names:
        assert (out / name).read_bytes() == first[name]
    report("compile runs are byte-identical", started, budget=10.0)
