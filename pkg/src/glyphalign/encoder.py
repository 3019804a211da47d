"""The two-layer feed-forward classifier: D inputs -> 64 hidden -> 26 classes.

ReLU hidden activations, softmax output.  Hidden width is fixed; the
input dimension is inferred from the glyphs at run time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import NUM_LETTERS
from .errors import DataError, ParameterError

HIDDEN = 64


@dataclass(frozen=True)
class EncoderParams:
    w1: np.ndarray  # (HIDDEN, D)
    b1: np.ndarray  # (HIDDEN,)
    w2: np.ndarray  # (NUM_LETTERS, HIDDEN)
    b2: np.ndarray  # (NUM_LETTERS,)

    def __post_init__(self):
        d = self.w1.shape[1] if self.w1.ndim == 2 else -1
        if (self.w1.shape != (HIDDEN, d) or self.b1.shape != (HIDDEN,)
                or self.w2.shape != (NUM_LETTERS, HIDDEN)
                or self.b2.shape != (NUM_LETTERS,)):
            raise ParameterError("parameter shapes are inconsistent")
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(arr)):
                raise ParameterError("parameters must be finite")

    @property
    def dim(self) -> int:
        return int(self.w1.shape[1])

    def count(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size

    def astype(self, dtype) -> "EncoderParams":
        return EncoderParams(*(a.astype(dtype) for a in
                               (self.w1, self.b1, self.w2, self.b2)))

    # -- arithmetic used by optimizers / interpolation ------------------
    def map(self, fn) -> "EncoderParams":
        return EncoderParams(fn(self.w1), fn(self.b1), fn(self.w2), fn(self.b2))

    def zip_with(self, other: "EncoderParams", fn) -> "EncoderParams":
        return EncoderParams(fn(self.w1, other.w1), fn(self.b1, other.b1),
                             fn(self.w2, other.w2), fn(self.b2, other.b2))

    def arrays(self):
        return (self.w1, self.b1, self.w2, self.b2)


@dataclass(frozen=True)
class ClassProbBatch:
    """Per-image class distributions together with raw logits."""

    logits: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if self.logits.shape != self.probs.shape or self.probs.shape[1] != NUM_LETTERS:
            raise ParameterError("logits/probs must both be (batch, 26)")


def init_params(dim: int, scheme: str = "xavier", seed: int = 0) -> EncoderParams:
    """Deterministic fan-scaled initialization; biases start at zero."""
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    if scheme == "xavier":
        lim1 = np.sqrt(6.0 / (dim + HIDDEN))
        lim2 = np.sqrt(6.0 / (HIDDEN + NUM_LETTERS))
        w1 = rng.uniform(-lim1, lim1, size=(HIDDEN, dim))
        w2 = rng.uniform(-lim2, lim2, size=(NUM_LETTERS, HIDDEN))
    elif scheme == "kaiming":
        w1 = rng.standard_normal((HIDDEN, dim)) * np.sqrt(2.0 / dim)
        w2 = rng.standard_normal((NUM_LETTERS, HIDDEN)) * np.sqrt(2.0 / HIDDEN)
    else:
        raise ParameterError(f"unknown init scheme {scheme!r}")
    return EncoderParams(w1, np.zeros(HIDDEN), w2, np.zeros(NUM_LETTERS))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Numerically stable row softmax (max subtraction)."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: EncoderParams, batch: np.ndarray) -> ClassProbBatch:
    """Row-wise logits = w2 . relu(w1 . x + b1) + b2 and their softmax."""
    batch = np.atleast_2d(batch)
    if batch.shape[1] != params.dim:
        raise ParameterError(f"batch dim {batch.shape[1]} != encoder dim {params.dim}")
    if not np.all(np.isfinite(batch)):
        raise DataError("batch contains non-finite values")
    hidden = np.maximum(batch @ params.w1.T + params.b1, 0.0)
    logits = hidden @ params.w2.T + params.b2
    return ClassProbBatch(logits, softmax_rows(logits))


def predict_class(params: EncoderParams, image: np.ndarray):
    """Argmax over logits; ties break toward the lowest index."""
    image = np.asarray(image)
    single = image.ndim == 1
    out = forward(params, np.atleast_2d(image)).logits.argmax(axis=1)
    return int(out[0]) if single else out


def save_params(params: EncoderParams, path, seed=None, scheme=None) -> None:
    """Flat float32 binary with a JSON header line."""
    header = {"dim": params.dim, "hidden": HIDDEN, "classes": NUM_LETTERS,
              "seed": seed, "scheme": scheme}
    with open(path, "wb") as f:
        f.write((json.dumps(header) + "\n").encode("utf-8"))
        for arr in params.arrays():
            f.write(np.ascontiguousarray(arr, dtype=np.float32).tobytes())


def load_params(path) -> EncoderParams:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        d = int(header["dim"])
        shapes = [(HIDDEN, d), (HIDDEN,), (NUM_LETTERS, HIDDEN), (NUM_LETTERS,)]
        arrays = []
        for shape in shapes:
            n = int(np.prod(shape))
            arrays.append(np.frombuffer(f.read(4 * n), dtype=np.float32)
                          .reshape(shape).astype(np.float64))
    return EncoderParams(*arrays)
