"""Whitespace vocabulary with atomic reserved prompt tokens."""

from __future__ import annotations

from dataclasses import dataclass

# prompt-contract tokens; each must stay a single vocabulary item
RESERVED_TOKENS = (
    "[HEC]", "[HES]", "[HE]", "[HR]", "[HT]", "[HA]", "[HC]",
    "[Ent]", "[Rel]", "[Tri]", "[Arg]", "[Cat]", "[Text]",
)

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)


class TokenRegistrationError(Exception):
    """A reserved token cannot be registered as one vocabulary item."""


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]
    index: dict[str, int]

    @classmethod
    def build(cls, texts: list[str]) -> "Vocab":
        """Specials, then reserved tokens, then corpus words (sorted)."""

        for token in RESERVED_TOKENS:
            if any(ch.isspace() for ch in token):
                raise TokenRegistrationError(
                    f"reserved token {token!r} contains whitespace and cannot be atomic"
                )
        words = set()
        for text in texts:
            words.update(text.split(" "))
        words.discard("")
        tokens = list(SPECIALS) + list(RESERVED_TOKENS) + sorted(words - set(SPECIALS) - set(RESERVED_TOKENS))
        return cls(tuple(tokens), {t: i for i, t in enumerate(tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return self.index[PAD]

    @property
    def bos_id(self) -> int:
        return self.index[BOS]

    @property
    def eos_id(self) -> int:
        return self.index[EOS]

    def encode(self, text: str) -> list[int]:
        unk = self.index[UNK]
        return [self.index.get(tok, unk) for tok in text.split(" ") if tok]

    def decode(self, ids: list[int]) -> str:
        specials = {self.index[s] for s in SPECIALS}
        return " ".join(self.tokens[i] for i in ids if i not in specials)

    def reserved_ids(self) -> list[int]:
        return [self.index[t] for t in RESERVED_TOKENS]
