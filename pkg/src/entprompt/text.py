"""Token vocabulary shared by the decoder, the prompt and the report grammar."""

from __future__ import annotations

from typing import Iterable, Sequence

PAD, EOS = "[pad]", "[eos]"
IMG_OPEN, IMG_CLOSE, MRG = "[Img]", "[/Img]", "[MRG]"
SPECIAL = (PAD, EOS, IMG_OPEN, IMG_CLOSE, MRG)
STATUS_PREFIX = "status:"

# Some words split into several tokens so multi-token averaging is exercised.
WORD_TOKENS = {
    "proficient": ("profi", "##cient"),
    "good": ("good",),
    "moderate": ("moder", "##ate"),
    "limited": ("limited",),
    "poor": ("poor",),
    "exist": ("exist",),
    "not exist": ("not", "exist"),
}

DEFAULT_INSTRUCTION = "generate the brain ct report for this patient ."
REPORT_WORDS = ("abnormality", "in", "normal", "seen", "no", ".")


class Vocabulary:
    def __init__(self, tokens: Iterable[str]):
        self.tokens: list[str] = []
        self._ids: dict[str, int] = {}
        for tok in tokens:
            if tok not in self._ids:
                self._ids[tok] = len(self.tokens)
                self.tokens.append(tok)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, tok: str) -> bool:
        return tok in self._ids

    def id(self, tok: str) -> int:
        try:
            return self._ids[tok]
        except KeyError:
            raise KeyError(f"token {tok!r} not in vocabulary") from None

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    def word_ids(self, word: str) -> list[int]:
        """Token ids for a (possibly multi-token) word."""
        parts = WORD_TOKENS.get(word, tuple(word.split()))
        return self.encode(parts)

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]


def build_vocabulary(entity_names: Sequence[str], instruction: str = DEFAULT_INSTRUCTION,
                     extra: Sequence[str] = ()) -> Vocabulary:
    """Specials, entity names (including the global entity), prompt words and report words."""
    tokens = list(SPECIAL) + list(entity_names) + [STATUS_PREFIX]
    for parts in WORD_TOKENS.values():
        tokens += parts
    tokens += instruction.split() + list(REPORT_WORDS) + list(extra)
    return Vocabulary(tokens)
