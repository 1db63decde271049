"""Byte-pair-encoding token counting.

Two vocabulary modes are supported. LoadedBPE reads a published rank file
(base64 token bytes, a space, a decimal rank, one entry per line) and counts
tokens with standard merge-order BPE: start from single bytes and repeatedly
merge the adjacent pair whose concatenation has the lowest rank, leftmost
pair first on ties. SyntheticInteger models the one-token-per-integer
property of real dictionaries without shipping one: the strings "0" through
"999" and the ", " separator are single tokens, any other character counts
as one token, and matching is greedy longest-first.
"""

from __future__ import annotations

import base64
import binascii
import os
from dataclasses import dataclass, field
from enum import Enum

from .errors import DuplicateRank, EmptyInput, MalformedLine, UnencodableByte


class VocabMode(Enum):
    LOADED_BPE = "loaded-bpe"
    SYNTHETIC_INTEGER = "synthetic-integer"


# Real BPE dictionaries merge the comma-space separator early, so the
# synthetic mode treats it as one token too; without it the separator
# would dominate both sides of every count.
_SYNTHETIC_MULTICHAR = frozenset({str(n) for n in range(1000)} | {", "})
_SYNTHETIC_MAX_LEN = 3


@dataclass(frozen=True)
class Vocab:
    mode: VocabMode
    entries: dict[bytes, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class TokenCountReport:
    raw_tokens: int
    normalized_tokens: int
    reduction_factor: float


def synthetic_integer_vocab() -> Vocab:
    return Vocab(mode=VocabMode.SYNTHETIC_INTEGER)


def load_vocab(path: str | os.PathLike) -> Vocab:
    """Read a BPE rank file into a LoadedBPE vocabulary.

    Raises:
        MalformedLine: a line is not `<base64 bytes> <decimal rank>`.
        DuplicateRank: two entries share a rank.
    """
    entries: dict[bytes, int] = {}
    seen_ranks: set[int] = set()
    with open(path, "rb") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise MalformedLine(line_number, "expected '<base64> <rank>'")
            try:
                token = base64.b64decode(parts[0], validate=True)
            except (binascii.Error, ValueError):
                raise MalformedLine(line_number, f"bad base64 {parts[0]!r}")
            try:
                rank = int(parts[1])
            except ValueError:
                raise MalformedLine(line_number, f"bad rank {parts[1]!r}")
            if rank in seen_ranks:
                raise DuplicateRank(f"rank {rank} appears more than once")
            if token in entries:
                raise MalformedLine(line_number, f"token {parts[0]!r} repeated")
            seen_ranks.add(rank)
            entries[token] = rank
    return Vocab(mode=VocabMode.LOADED_BPE, entries=entries)


def _count_bpe(text: str, vocab: Vocab) -> int:
    segments = [bytes([b]) for b in text.encode("utf-8")]
    entries = vocab.entries
    for seg in segments:
        if seg not in entries:
            raise UnencodableByte(f"vocabulary lacks base byte 0x{seg.hex()}")
    while len(segments) > 1:
        best_rank = None
        best_index = -1
        for i in range(len(segments) - 1):
            rank = entries.get(segments[i] + segments[i + 1])
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_index = i
        if best_rank is None:
            break
        segments[best_index : best_index + 2] = [
            segments[best_index] + segments[best_index + 1]
        ]
    return len(segments)


def _count_synthetic(text: str) -> int:
    count = 0
    i = 0
    n = len(text)
    while i < n:
        step = 1
        for k in range(min(_SYNTHETIC_MAX_LEN, n - i), 1, -1):
            if text[i : i + k] in _SYNTHETIC_MULTICHAR:
                step = k
                break
        count += 1
        i += step
    return count


def encode_count(text: str, vocab: Vocab) -> int:
    """Number of tokens the text encodes to under the given vocabulary."""
    if text == "":
        return 0
    if vocab.mode is VocabMode.SYNTHETIC_INTEGER:
        return _count_synthetic(text)
    if not vocab.entries:
        raise EmptyInput("cannot encode with an empty vocabulary")
    return _count_bpe(text, vocab)


def count_series_tokens(
    raw_text: str, normalized_text: str, vocab: Vocab
) -> TokenCountReport:
    """Token counts for the raw vs normalized rendering of one series."""
    if not raw_text or not normalized_text:
        raise EmptyInput("both renderings must be non-empty")
    raw_tokens = encode_count(raw_text, vocab)
    normalized_tokens = encode_count(normalized_text, vocab)
    return TokenCountReport(
        raw_tokens=raw_tokens,
        normalized_tokens=normalized_tokens,
        reduction_factor=raw_tokens / normalized_tokens,
    )
