"""Tiny randomly-initialized transformer encoder-decoder (the "toy" backend).

Suitable for CI-scale overfitting runs on CPU; no pre-trained weights are
required. The model identifier selects the backend: "toy" or
"toy:<d_model>:<layers>".
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .vocab import Vocab


class ToySeq2Seq(nn.Module):
    def __init__(self, vocab_size: int, pad_id: int, d_model: int = 128,
                 layers: int = 2, n_heads: int = 4, max_len: int = 512) -> None:
        super().__init__()
        self.pad_id = pad_id
        self.d_model = d_model
        self.embed = nn.Embedding(vocab_size, d_model, padding_idx=pad_id)
        self.pos = nn.Embedding(max_len, d_model)
        self.transformer = nn.Transformer(
            d_model=d_model,
            nhead=n_heads,
            num_encoder_layers=layers,
            num_decoder_layers=layers,
            dim_feedforward=d_model * 2,
            dropout=0.0,
            batch_first=True,
        )
        self.lm_head = nn.Linear(d_model, vocab_size)
        # stay on the reference encoder path; the nested-tensor fast path is
        # a prototype API and warns on every padded eval batch
        if hasattr(self.transformer.encoder, "use_nested_tensor"):
            self.transformer.encoder.use_nested_tensor = False

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.size(1), device=ids.device)
        return self.embed(ids) * math.sqrt(self.d_model) + self.pos(positions)

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        """Logits over the target vocabulary, shape (batch, tgt_len, vocab)."""

        src_pad = src == self.pad_id
        tgt_pad = tgt_in == self.pad_id
        causal = torch.triu(
            torch.ones(tgt_in.size(1), tgt_in.size(1), dtype=torch.bool, device=tgt_in.device),
            diagonal=1,
        )
        hidden = self.transformer(
            self._embed(src),
            self._embed(tgt_in),
            tgt_mask=causal,
            src_key_padding_mask=src_pad,
            tgt_key_padding_mask=tgt_pad,
            memory_key_padding_mask=src_pad,
        )
        return self.lm_head(hidden)


def mean_initialize_reserved(model: ToySeq2Seq, vocab: Vocab) -> None:
    """Reset reserved-token embeddings to the mean of the word embeddings."""

    reserved = vocab.reserved_ids()
    with torch.no_grad():
        ordinary = [i for i in range(len(vocab)) if i not in set(reserved)]
        mean = model.embed.weight[ordinary].mean(dim=0)
        for i in reserved:
            model.embed.weight[i] = mean


def build_model(identifier: str, vocab: Vocab) -> ToySeq2Seq:
    parts = identifier.split(":")
    if parts[0] != "toy":
        raise ValueError(
            f"unknown model identifier {identifier!r}; this driver ships the "
            "'toy[:d_model[:layers]]' backend"
        )
    d_model = int(parts[1]) if len(parts) > 1 else 128
    layers = int(parts[2]) if len(parts) > 2 else 2
    n_heads = 4 if d_model % 4 == 0 else 2
    model = ToySeq2Seq(len(vocab), vocab.pad_id, d_model=d_model, layers=layers, n_heads=n_heads)
    mean_initialize_reserved(model, vocab)
    return model
