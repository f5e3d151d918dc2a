"""Staged training with sequential weight carry-over, plus generation.

Each stage minimizes the token-level negative log-likelihood of the target
given the rendered prompt+text, starting from the previous stage's saved
checkpoint (the first stage starts from the freshly initialized backbone).
Inference is one-stage: only the final checkpoint is consumed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn

from .data import Batch, Example, epoch_batches, read_compiled_file
from .model import build_model
from .vocab import Vocab

STAGE_NAMES = ("easy", "hard", "main")


class TrainerError(Exception):
    pass


@dataclass
class TrainerConfig:
    model: str = "toy"
    stage_order: tuple[str, ...] | str = ("easy", "hard", "main")
    epochs: tuple[int, ...] = (15, 30, 30)
    learning_rate: float = 1e-4
    batch_size: int = 64
    max_input_len: int = 384
    max_target_len: int = 256
    seed: int = 42
    beam_width: int = 1
    dev_file: str | None = None

    def stages(self) -> list[str]:
        if self.stage_order == "merged":
            return ["merged"]
        return list(self.stage_order)

    def validate(self) -> None:
        stages = self.stages()
        if self.stage_order != "merged":
            unknown = set(stages) - set(STAGE_NAMES)
            if unknown:
                raise TrainerError(f"unknown stages: {sorted(unknown)}")
            if len(set(stages)) != len(stages) or not stages:
                raise TrainerError("stage order must be a non-empty subset without repeats")
        if len(self.epochs) != len(stages):
            raise TrainerError(
                f"epochs has {len(self.epochs)} entries for {len(stages)} stages"
            )
        if any(e < 1 for e in self.epochs):
            raise TrainerError("every stage needs at least one epoch")
        if self.max_input_len <= 0 or self.max_target_len <= 0:
            raise TrainerError("sequence length limits must be positive")
        if self.beam_width < 1:
            raise TrainerError("beam width must be >= 1")

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "stage_order": self.stage_order if self.stage_order == "merged" else list(self.stage_order),
            "epochs": list(self.epochs),
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_input_len": self.max_input_len,
            "max_target_len": self.max_target_len,
            "seed": self.seed,
            "beam_width": self.beam_width,
            "dev_file": self.dev_file,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainerConfig":
        cfg = cls(
            model=obj.get("model", "toy"),
            stage_order=obj["stage_order"] if obj.get("stage_order") == "merged"
            else tuple(obj.get("stage_order", ("easy", "hard", "main"))),
            epochs=tuple(obj.get("epochs", (15, 30, 30))),
            learning_rate=obj.get("learning_rate", 1e-4),
            batch_size=obj.get("batch_size", 64),
            max_input_len=obj.get("max_input_len", 384),
            max_target_len=obj.get("max_target_len", 256),
            seed=obj.get("seed", 42),
            beam_width=obj.get("beam_width", 1),
            dev_file=obj.get("dev_file"),
        )
        cfg.validate()
        return cfg

    def config_hash(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]


def batch_loss(model: nn.Module, batch: Batch, pad_id: int) -> torch.Tensor:
    """Mean token negative log-likelihood over non-pad target positions."""

    logits = model(batch.src, batch.tgt_in)
    return nn.functional.cross_entropy(
        logits.reshape(-1, logits.size(-1)),
        batch.labels.reshape(-1),
        ignore_index=pad_id,
    )


def state_sha256(state: dict) -> str:
    digest = hashlib.sha256()
    for name in sorted(state):
        digest.update(name.encode("utf-8"))
        digest.update(state[name].detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def _save_checkpoint(
    directory: Path,
    model: nn.Module,
    vocab: Vocab,
    manifest: dict,
) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), directory / "model.pt")
    (directory / "vocab.json").write_text(
        json.dumps({"tokens": list(vocab.tokens)}, ensure_ascii=False), encoding="utf-8"
    )
    (directory / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def _mean_dev_loss(model, examples, vocab, config) -> float:
    if not examples:
        return 0.0
    model.eval()
    total, batches = 0.0, 0
    with torch.no_grad():
        for batch in epoch_batches(
            examples, vocab, config.batch_size, config.max_input_len,
            config.max_target_len, shuffle_key=None,
        ):
            total += batch_loss(model, batch, vocab.pad_id).item()
            batches += 1
    model.train()
    return total / batches


def run_stages(config: TrainerConfig, compiled_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Train every stage in order and save one checkpoint per stage.

    Stage k initializes from stage k-1's saved weights (reloaded from disk, so
    the chain is bit-identical to the artifacts). Returns checkpoint
    directories in stage order; the last one is the final model.
    """

    config.validate()
    compiled_dir, out_dir = Path(compiled_dir), Path(out_dir)
    stages = config.stages()

    stage_files = {}
    for stage in stages:
        path = compiled_dir / f"{stage}.jsonl"
        if not path.exists():
            raise TrainerError(f"missing compiled file for stage {stage!r}: {path}")
        stage_files[stage] = path

    texts: list[str] = []
    examples_by_stage: dict[str, list[Example]] = {}
    for stage, path in stage_files.items():
        examples = read_compiled_file(path)
        examples_by_stage[stage] = examples
        texts += [ex.input for ex in examples] + [ex.target for ex in examples]
    dev_examples: list[Example] = []
    if config.dev_file is not None:
        dev_examples = read_compiled_file(config.dev_file)
        texts += [ex.input for ex in dev_examples] + [ex.target for ex in dev_examples]
    vocab = Vocab.build(texts)

    torch.manual_seed(config.seed)
    model = build_model(config.model, vocab)

    checkpoints: list[Path] = []
    for k, stage in enumerate(stages):
        if k > 0:
            saved = torch.load(checkpoints[-1] / "model.pt", weights_only=True)
            model.load_state_dict(saved)
        init_hash = state_sha256(model.state_dict())

        examples = examples_by_stage[stage]
        optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
        steps_per_epoch = max(1, (len(examples) + config.batch_size - 1) // config.batch_size)
        total_steps = max(1, steps_per_epoch * config.epochs[k])
        scheduler = torch.optim.lr_scheduler.LambdaLR(
            optimizer, lambda step: max(0.0, 1.0 - step / total_steps)
        )

        is_final = k == len(stages) - 1
        best_dev = float("inf")
        best_state = None
        model.train()
        for epoch in range(config.epochs[k]):
            for batch in epoch_batches(
                examples, vocab, config.batch_size, config.max_input_len,
                config.max_target_len, shuffle_key=f"{config.seed}:{stage}:{epoch}",
            ):
                optimizer.zero_grad()
                loss = batch_loss(model, batch, vocab.pad_id)
                loss.backward()
                optimizer.step()
                scheduler.step()
            if is_final and dev_examples:
                dev = _mean_dev_loss(model, dev_examples, vocab, config)
                if dev < best_dev:
                    best_dev = dev
                    best_state = {k2: v.detach().clone() for k2, v in model.state_dict().items()}
        if is_final and best_state is not None:
            model.load_state_dict(best_state)

        directory = out_dir / f"stage{k}_{stage}"
        manifest = {
            "stage": stage,
            "stage_index": k,
            "final": is_final,
            "config_hash": config.config_hash(),
            "config": config.to_json(),
            "vocab_size": len(vocab),
            "epochs_trained": config.epochs[k],
            "examples": len(examples),
            "init_state_sha256": init_hash,
            "state_sha256": state_sha256(model.state_dict()),
        }
        _save_checkpoint(directory, model, vocab, manifest)
        checkpoints.append(directory)

    return checkpoints


def load_checkpoint(directory: str | Path):
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    tokens = json.loads((directory / "vocab.json").read_text(encoding="utf-8"))["tokens"]
    vocab = Vocab(tuple(tokens), {t: i for i, t in enumerate(tokens)})
    config = TrainerConfig.from_json(manifest["config"])
    model = build_model(config.model, vocab)
    state = torch.load(directory / "model.pt", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    return model, vocab, config, manifest


def _greedy_decode(model, vocab: Vocab, src_ids: list[int], max_len: int) -> list[int]:
    src = torch.tensor([src_ids], dtype=torch.long)
    out = [vocab.bos_id]
    for _ in range(max_len):
        tgt_in = torch.tensor([out], dtype=torch.long)
        logits = model(src, tgt_in)
        next_id = int(logits[0, -1].argmax())
        if next_id == vocab.eos_id:
            break
        out.append(next_id)
    return out[1:]


def _beam_decode(model, vocab: Vocab, src_ids: list[int], max_len: int, width: int) -> list[int]:
    src = torch.tensor([src_ids], dtype=torch.long)
    beams: list[tuple[float, list[int], bool]] = [(0.0, [vocab.bos_id], False)]
    for _ in range(max_len):
        if all(done for _, _, done in beams):
            break
        candidates: list[tuple[float, list[int], bool]] = []
        for logp, seq, done in beams:
            if done:
                candidates.append((logp, seq, done))
                continue
            tgt_in = torch.tensor([seq], dtype=torch.long)
            logits = model(src, tgt_in)
            log_probs = torch.log_softmax(logits[0, -1], dim=-1)
            top = torch.topk(log_probs, width)
            for value, idx in zip(top.values.tolist(), top.indices.tolist()):
                if idx == vocab.eos_id:
                    candidates.append((logp + value, seq, True))
                else:
                    candidates.append((logp + value, seq + [idx], False))
        candidates.sort(key=lambda c: c[0] / max(1, len(c[1])), reverse=True)
        beams = candidates[:width]
    best = max(beams, key=lambda c: c[0] / max(1, len(c[1])))
    return best[1][1:]


def predict(
    checkpoint_dir: str | Path,
    eval_file: str | Path,
    out_path: str | Path,
    beam_width: int | None = None,
) -> int:
    """Generate one raw output string per eval example; returns the count."""

    model, vocab, config, _ = load_checkpoint(checkpoint_dir)
    width = config.beam_width if beam_width is None else beam_width
    examples = read_compiled_file(eval_file)
    out_path = Path(out_path)
    with torch.no_grad(), out_path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            src_ids = vocab.encode(ex.input)[: config.max_input_len]
            if width <= 1:
                ids = _greedy_decode(model, vocab, src_ids, config.max_target_len)
            else:
                ids = _beam_decode(model, vocab, src_ids, config.max_target_len, width)
            fh.write(
                json.dumps({"id": ex.id, "output": vocab.decode(ids)}, ensure_ascii=False) + "\n"
            )
    return len(examples)
