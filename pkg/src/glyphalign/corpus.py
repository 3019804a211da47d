"""Text ingestion and frozen letter statistics.

Raw text is normalized to the 26-letter alphabet (case-folded, everything
else dropped), and unigram/bigram tables are counted from the normalized
stream.  Tables are immutable once built and are the only "innate"
knowledge the rest of the system is allowed to rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, FormatError, ParameterError

ALPHABET = "abcdefghijklmnopqrstuvwxyz"
NUM_LETTERS = 26

_A_ORD = ord("a")


def letters_to_indices(s: str) -> np.ndarray:
    """Convert a lowercase a-z string to an index array (strict)."""
    arr = np.frombuffer(s.encode("ascii"), dtype=np.uint8).astype(np.int64) - _A_ORD
    if arr.size and (arr.min() < 0 or arr.max() >= NUM_LETTERS):
        raise ParameterError(f"string {s!r} contains non a-z characters")
    return arr


def indices_to_letters(idx) -> str:
    return "".join(ALPHABET[i] for i in idx)


@dataclass(frozen=True)
class NormalizedText:
    """A stream of alphabet indices (0-25) with provenance."""

    chars: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        chars = np.asarray(self.chars, dtype=np.int64)
        if chars.ndim != 1:
            raise ParameterError("chars must be a 1-D index sequence")
        if chars.size and (chars.min() < 0 or chars.max() >= NUM_LETTERS):
            raise ParameterError("chars contains indices outside 0..25")
        chars.flags.writeable = False
        object.__setattr__(self, "chars", chars)

    def __len__(self) -> int:
        return int(self.chars.size)

    def as_string(self) -> str:
        return indices_to_letters(self.chars)

    def slice(self, start: int, stop: int, source_suffix: str = "") -> "NormalizedText":
        return NormalizedText(self.chars[start:stop].copy(),
                              self.source_id + source_suffix)

    def split_holdout(self, holdout_fraction: float = 0.1):
        """Split into (train, test) with a suffix fraction held out."""
        if not 0.0 < holdout_fraction < 1.0:
            raise ParameterError("holdout_fraction must be in (0, 1)")
        cut = int(round(len(self) * (1.0 - holdout_fraction)))
        return (self.slice(0, cut, "/train"), self.slice(cut, len(self), "/test"))


@dataclass(frozen=True)
class UnigramTable:
    """Letter marginal distribution; entries sum to 1."""

    probs: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (NUM_LETTERS,):
            raise ParameterError("unigram probs must have shape (26,)")
        if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-12:
            raise ParameterError("unigram probs must be a distribution (sum 1 within 1e-12)")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    def to_json(self) -> str:
        doc = {"probs": self.probs.tolist()}
        if self.counts is not None:
            doc["counts"] = np.asarray(self.counts).astype(int).tolist()
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "UnigramTable":
        doc = json.loads(text)
        counts = np.asarray(doc["counts"], dtype=np.int64) if "counts" in doc else None
        return cls(np.asarray(doc["probs"], dtype=np.float64), counts)


@dataclass(frozen=True)
class BigramTable:
    """Row-stochastic next-letter table: probs[x, y] = P(next=y | current=x).

    Rows with zero observations get the uniform row; zero cells inside
    observed rows stay exactly 0 (no smoothing).  Loss code applies its
    own epsilon floor inside logs instead.
    """

    probs: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if probs.shape != (NUM_LETTERS, NUM_LETTERS) or counts.shape != (NUM_LETTERS, NUM_LETTERS):
            raise ParameterError("bigram tables must have shape (26, 26)")
        if probs.min() < 0 or np.abs(probs.sum(axis=1) - 1.0).max() > 1e-12:
            raise ParameterError("each bigram row must sum to 1 within 1e-12")
        probs.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "counts", counts)

    def to_json(self) -> str:
        return json.dumps({"counts": self.counts.tolist(), "probs": self.probs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "BigramTable":
        doc = json.loads(text)
        return cls(np.asarray(doc["probs"], dtype=np.float64),
                   np.asarray(doc["counts"], dtype=np.int64))

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "BigramTable":
        counts = np.asarray(counts, dtype=np.int64)
        row_sums = counts.sum(axis=1, keepdims=True)
        probs = np.where(row_sums > 0, counts / np.maximum(row_sums, 1),
                         1.0 / NUM_LETTERS)
        # renormalize exactly so row sums hit 1.0 at float64 resolution
        probs = probs / probs.sum(axis=1, keepdims=True)
        return cls(probs, counts)


@dataclass(frozen=True)
class TriggerSpec:
    """A target letter sequence and its expected occurrence ratio."""

    letters: tuple
    prior: float = 0.5
    source: str = ""

    def __post_init__(self):
        letters = tuple(int(i) for i in self.letters)
        if len(letters) < 1:
            raise ParameterError("trigger must have length >= 1")
        if any(i < 0 or i >= NUM_LETTERS for i in letters):
            raise ParameterError("trigger letters must be alphabet indices 0..25")
        if not 0.0 < self.prior < 1.0:
            raise ParameterError("trigger prior must lie in (0, 1)")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    @classmethod
    def from_string(cls, word: str, prior: float = 0.5, source: str = "") -> "TriggerSpec":
        idx = normalize_text(word).chars
        if idx.size == 0:
            raise ParameterError(f"trigger {word!r} normalizes to zero letters")
        return cls(tuple(int(i) for i in idx), prior, source)

    def as_string(self) -> str:
        return indices_to_letters(self.letters)


def normalize_text(raw, source_id: str = "") -> NormalizedText:
    """Case-fold and keep only a-z; everything else is dropped, order kept."""
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"input is not decodable as UTF-8: {exc}") from exc
    # Unicode-aware lowercasing first; in the UTF-8 encoding of the result,
    # bytes 0x61-0x7a can only ever be literal a-z (continuation bytes are
    # >= 0x80), so a byte-level mask is exact.
    data = np.frombuffer(raw.lower().encode("utf-8"), dtype=np.uint8)
    mask = (data >= _A_ORD) & (data <= ord("z"))
    return NormalizedText(data[mask].astype(np.int64) - _A_ORD, source_id)


def build_unigram(text: NormalizedText) -> UnigramTable:
    """Count letter frequencies; probs[i] = count(i) / len(text)."""
    if len(text) == 0:
        raise EmptyInputError("cannot build a unigram table from empty text")
    counts = np.bincount(text.chars, minlength=NUM_LETTERS)
    return UnigramTable(counts / counts.sum(), counts)


def build_bigram(text: NormalizedText) -> BigramTable:
    """Count adjacent letter pairs over the whole normalized stream."""
    if len(text) < 2:
        raise EmptyInputError("need at least 2 characters to build a bigram table")
    pair_codes = text.chars[:-1] * NUM_LETTERS + text.chars[1:]
    counts = np.bincount(pair_codes, minlength=NUM_LETTERS * NUM_LETTERS)
    return BigramTable.from_counts(counts.reshape(NUM_LETTERS, NUM_LETTERS))


def sample_nontrigger(text: NormalizedText, n: int, length: int,
                      rng: np.random.Generator,
                      exclude: TriggerSpec | None = None) -> list:
    """Draw n substrings of the given length uniformly over start positions.

    Substrings equal to the excluded trigger are rejected and resampled.
    Returns a list of index tuples.
    """
    n_positions = len(text) - length + 1
    if n_positions < 1:
        raise EmptyInputError(f"text of length {len(text)} has no windows of length {length}")
    excluded = exclude.letters if exclude is not None else None
    if excluded is not None and len(excluded) != length:
        raise ParameterError("excluded trigger length must equal the sample length")
    out = []
    while len(out) < n:
        # batch-draw for speed, filter rejects, repeat
        want = n - len(out)
        starts = rng.integers(0, n_positions, size=max(want, 16))
        for s in starts:
            sub = tuple(int(i) for i in text.chars[s:s + length])
            if excluded is not None and sub == excluded:
                continue
            out.append(sub)
            if len(out) == n:
                break
    return out


def sample_trigger_suite(text: NormalizedText, rng: np.random.Generator,
                         per_length: int = 100,
                         lengths=range(2, 12)) -> list:
    """Build the trigger sweep suite.

    For each length: ``per_length`` uniform-random strings over the
    alphabet plus ``per_length`` substrings of the corpus.  Defaults give
    2000 triggers (lengths 2..11, 100 + 100 each).
    """
    if len(text) == 0:
        raise EmptyInputError("cannot sample triggers from empty text")
    suite = []
    for length in lengths:
        randoms = rng.integers(0, NUM_LETTERS, size=(per_length, length))
        for row in randoms:
            suite.append(TriggerSpec(tuple(int(i) for i in row), 0.5, source="random"))
        for sub in sample_nontrigger(text, per_length, length, rng):
            suite.append(TriggerSpec(sub, 0.5, source="corpus"))
    return suite
