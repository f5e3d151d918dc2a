"""Compiled-file reading and deterministic batching.

The compiled record format ({"id","stage","skill","input","target","meta"},
one JSON object per line, UTF-8) is the interface contract with the dataset
compiler; this module parses it independently.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch

from .vocab import Vocab


class TrainerDataError(Exception):
    pass


@dataclass(frozen=True)
class Example:
    id: str
    input: str
    target: str


def read_compiled_file(path: str | Path) -> list[Example]:
    path = Path(path)
    if not path.exists():
        raise TrainerDataError(f"compiled file not found: {path}")
    out: list[Example] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(Example(str(obj["id"]), str(obj["input"]), str(obj["target"])))
            except (ValueError, KeyError, TypeError) as exc:
                raise TrainerDataError(f"{path}:{lineno}: malformed record: {exc}") from exc
    return out


@dataclass
class Batch:
    src: torch.Tensor      # (B, S) encoder input ids
    tgt_in: torch.Tensor   # (B, T) decoder input ids (BOS-shifted)
    labels: torch.Tensor   # (B, T) target ids ending in EOS, PAD elsewhere


def _pad(rows: list[list[int]], pad_id: int) -> torch.Tensor:
    width = max(len(r) for r in rows)
    return torch.tensor([r + [pad_id] * (width - len(r)) for r in rows], dtype=torch.long)


def make_batch(
    examples: list[Example], vocab: Vocab, max_input_len: int, max_target_len: int
) -> Batch:
    src_rows = [vocab.encode(ex.input)[:max_input_len] for ex in examples]
    tgt_rows = [vocab.encode(ex.target)[: max_target_len - 1] for ex in examples]
    tgt_in_rows = [[vocab.bos_id] + row for row in tgt_rows]
    label_rows = [row + [vocab.eos_id] for row in tgt_rows]
    return Batch(
        src=_pad(src_rows, vocab.pad_id),
        tgt_in=_pad(tgt_in_rows, vocab.pad_id),
        labels=_pad(label_rows, vocab.pad_id),
    )


def epoch_batches(
    examples: list[Example],
    vocab: Vocab,
    batch_size: int,
    max_input_len: int,
    max_target_len: int,
    shuffle_key: str | None,
):
    """Batches in a deterministic order; ``shuffle_key`` seeds the shuffle."""

    order = list(range(len(examples)))
    if shuffle_key is not None:
        random.Random(shuffle_key).shuffle(order)
    for lo in range(0, len(order), batch_size):
        chunk = [examples[i] for i in order[lo : lo + batch_size]]
        yield make_batch(chunk, vocab, max_input_len, max_target_len)
