"""Glyph pools, pixel permutations, and stream rendering.

A "font" is a mapping from each of the 26 letters to a pool of flattened
image vectors.  Pools come from EMNIST-style IDX files, CIFAR-100 binary
files restricted to 26 classes, or a synthetic prototype+noise generator.
A fixed unknown pixel permutation is applied on top, and normalized text
is rendered into observation streams and non-overlapping pair batches.
"""

from __future__ import annotations

import gzip
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import NUM_LETTERS, ALPHABET, NormalizedText
from .errors import DataError, FormatError, ParameterError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
GZIP_PREFIX = b"\x1f\x8b"

# Letter -> CIFAR-100 fine class, the first 26 class names alphabetically.
# Matching is by canonical class NAME (lowercase, separators collapsed,
# trailing plural 's' tolerated), never by numeric index.
CIFAR26_CLASS_NAMES = [
    "apple", "aquarium_fish", "baby", "bear", "beaver", "bed", "bee",
    "beetle", "bicycle", "bottle", "bowl", "boy", "bridge", "bus",
    "butterfly", "camel", "can", "castle", "caterpillar", "cattle",
    "chair", "chimpanzee", "clock", "cloud", "cockroach", "computer_keyboard",
]


@dataclass(frozen=True)
class GlyphSet:
    """Per-letter pools of flattened image vectors with train/test splits."""

    name: str
    dim: int
    train_pools: tuple
    test_pools: tuple

    def __post_init__(self):
        for pools, split in ((self.train_pools, "train"), (self.test_pools, "test")):
            if len(pools) != NUM_LETTERS:
                raise ParameterError(f"{split} pools must cover all 26 letters")
            for i, pool in enumerate(pools):
                if pool.ndim != 2 or pool.shape[1] != self.dim:
                    raise ParameterError(
                        f"{split} pool for {ALPHABET[i]!r} has shape {pool.shape}, "
                        f"expected (n, {self.dim})")
                if pool.shape[0] < 1:
                    raise DataError(f"{split} pool for {ALPHABET[i]!r} is empty")

    def pools(self, split: str) -> tuple:
        if split == "train":
            return self.train_pools
        if split == "test":
            return self.test_pools
        raise ParameterError(f"unknown split {split!r}")


@dataclass(frozen=True)
class PixelPermutation:
    """A bijection on pixel coordinates, the hidden sensor scrambling."""

    perm: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ParameterError("perm must be a bijection on 0..dim-1")
        perm.flags.writeable = False
        object.__setattr__(self, "perm", perm)

    @property
    def dim(self) -> int:
        return int(self.perm.size)

    @classmethod
    def random(cls, dim: int, seed: int) -> "PixelPermutation":
        rng = np.random.default_rng(seed)
        return cls(rng.permutation(dim), seed)

    @classmethod
    def identity(cls, dim: int) -> "PixelPermutation":
        return cls(np.arange(dim), None)

    def inverse(self) -> "PixelPermutation":
        return PixelPermutation(np.argsort(self.perm), self.seed)


@dataclass(frozen=True)
class ObservationSequence:
    """Rendered image stream; labels are evaluation-only ground truth.

    ``labels`` may be None (a stripped view): every training-path
    operation must work on such a view, which is how the no-labels
    contract is enforced at the API level.
    """

    images: np.ndarray
    labels: np.ndarray | None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.images):
            raise ParameterError("images and labels must have equal length")

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def without_labels(self) -> "ObservationSequence":
        return ObservationSequence(self.images, None)


@dataclass(frozen=True)
class PairBatch:
    """Consecutive-observation pairs; rows correspond positionally."""

    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        if self.first.shape != self.second.shape:
            raise ParameterError("first and second must have identical shapes")

    def __len__(self) -> int:
        return int(self.first.shape[0])

    @property
    def dim(self) -> int:
        return int(self.first.shape[1])

    def flatten(self) -> np.ndarray:
        """Interleave back to the original stream order."""
        n, d = self.first.shape
        out = np.empty((2 * n, d), dtype=self.first.dtype)
        out[0::2] = self.first
        out[1::2] = self.second
        return out


def _open_maybe_gzip(path):
    f = open(path, "rb")
    if f.read(2) == GZIP_PREFIX:
        f.seek(0)
        return gzip.open(f)
    f.seek(0)
    return f


def _read_idx(path, expected_magic: int):
    with _open_maybe_gzip(path) as f:
        header = f.read(4)
        if len(header) < 4:
            raise FormatError(f"{path}: truncated IDX header at byte 0")
        (magic,) = struct.unpack(">i", header)
        if magic != expected_magic:
            raise FormatError(
                f"{path}: bad magic 0x{magic:08x} at byte 0, expected 0x{expected_magic:08x}")
        ndim = magic & 0xFF
        dims_raw = f.read(4 * ndim)
        if len(dims_raw) < 4 * ndim:
            raise FormatError(f"{path}: truncated IDX dimension list at byte 4")
        dims = struct.unpack(f">{ndim}i", dims_raw)
        count = int(np.prod(dims))
        payload = f.read(count)
        if len(payload) < count:
            raise FormatError(
                f"{path}: truncated payload at byte {4 + 4 * ndim + len(payload)}, "
                f"expected {count} bytes")
        return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx_glyphs(images_path, labels_path, split: str = "train") -> dict:
    """Load one split of an EMNIST-letters style IDX pair into 26 pools.

    Labels 1..26 map to letters a..z (case-merged, the letters convention).
    Pixel bytes are scaled to [0, 1].  Returns {"pools", "dim", "split"}.
    """
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.ndim != 3:
        raise FormatError(f"{images_path}: expected 3 dimensions, got {images.ndim}")
    if labels.ndim != 1:
        raise FormatError(f"{labels_path}: expected 1 dimension, got {labels.ndim}")
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"item counts disagree: {images.shape[0]} images vs {labels.shape[0]} labels")
    lab = labels.astype(np.int64)
    if lab.size and (lab.min() < 1 or lab.max() > NUM_LETTERS):
        bad = int(np.flatnonzero((lab < 1) | (lab > NUM_LETTERS))[0])
        raise FormatError(
            f"{labels_path}: label {int(lab[bad])} out of range 1..26 at item {bad}")
    dim = int(images.shape[1] * images.shape[2])
    flat = (images.reshape(images.shape[0], dim).astype(np.float32) / 255.0)
    pools = tuple(np.ascontiguousarray(flat[lab == c + 1]) for c in range(NUM_LETTERS))
    return {"pools": pools, "dim": dim, "split": split}


def load_emnist(train_images, train_labels, test_images, test_labels,
                name: str = "emnist") -> GlyphSet:
    tr = load_idx_glyphs(train_images, train_labels, "train")
    te = load_idx_glyphs(test_images, test_labels, "test")
    if tr["dim"] != te["dim"]:
        raise FormatError(f"train dim {tr['dim']} != test dim {te['dim']}")
    return GlyphSet(name, tr["dim"], tr["pools"], te["pools"])


def _canon_class_name(name: str) -> str:
    flat = name.strip().lower().replace("-", "_").replace(" ", "_")
    return flat[:-1] if flat.endswith("s") and not flat.endswith("ss") else flat


_CIFAR26_BY_CANON = {_canon_class_name(n): i for i, n in enumerate(CIFAR26_CLASS_NAMES)}
# the keyboard class appears under both long and short names in the wild
_CIFAR26_BY_CANON["keyboard"] = CIFAR26_CLASS_NAMES.index("computer_keyboard")

CIFAR_RECORD_BYTES = 3074  # coarse label + fine label + 32*32*3 pixels
CIFAR_DIM = 3072


def load_cifar26(bin_path, meta_names, split: str = "train") -> dict:
    """Load a CIFAR-100 binary file keeping only the 26 letter classes.

    ``meta_names`` is the fine-class name list (file path or list of
    strings, index order matching the fine labels in the binary records).
    """
    if isinstance(meta_names, (str, Path)):
        with open(meta_names, "r", encoding="utf-8") as f:
            meta_names = [line.strip() for line in f if line.strip()]
    fine_to_letter = {}
    seen_letters = set()
    for fine_idx, name in enumerate(meta_names):
        canon = _canon_class_name(name)
        if canon in _CIFAR26_BY_CANON:
            letter = _CIFAR26_BY_CANON[canon]
            fine_to_letter[fine_idx] = letter
            seen_letters.add(letter)
    if len(seen_letters) != NUM_LETTERS:
        missing = [CIFAR26_CLASS_NAMES[i] for i in range(NUM_LETTERS) if i not in seen_letters]
        raise FormatError(f"meta is missing letter classes: {missing}")

    raw = Path(bin_path).read_bytes()
    if len(raw) == 0 or len(raw) % CIFAR_RECORD_BYTES != 0:
        raise FormatError(
            f"{bin_path}: size {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES}")
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
    fine = records[:, 1].astype(np.int64)
    if fine.size and fine.max() >= len(meta_names):
        bad = int(np.argmax(fine))
        raise FormatError(
            f"{bin_path}: fine label {int(fine.max())} at record {bad} "
            f"exceeds meta list of {len(meta_names)} names")
    pixels = records[:, 2:].astype(np.float32) / 255.0
    pools = []
    for letter in range(NUM_LETTERS):
        fine_idx = [fi for fi, le in fine_to_letter.items() if le == letter]
        mask = np.isin(fine, fine_idx)
        pools.append(np.ascontiguousarray(pixels[mask]))
    return {"pools": tuple(pools), "dim": CIFAR_DIM, "split": split}


def load_cifar26_glyphset(train_bin, test_bin, meta_names, name: str = "cifar26") -> GlyphSet:
    tr = load_cifar26(train_bin, meta_names, "train")
    te = load_cifar26(test_bin, meta_names, "test")
    return GlyphSet(name, CIFAR_DIM, tr["pools"], te["pools"])


def make_synthetic_font(dim: int, noise_sigma: float, seed: int,
                        train_per_class: int = 400,
                        test_per_class: int = 120) -> GlyphSet:
    """26 random unit-norm prototypes plus isotropic noise.

    Train and test pools are disjoint draws from the same per-seed stream.
    """
    if dim < NUM_LETTERS:
        raise ParameterError(f"dim must be >= {NUM_LETTERS}, got {dim}")
    rng = np.random.default_rng(seed)
    protos = rng.standard_normal((NUM_LETTERS, dim))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)
    train_pools, test_pools = [], []
    for c in range(NUM_LETTERS):
        noise = rng.standard_normal((train_per_class + test_per_class, dim)) * noise_sigma
        glyphs = (protos[c][None, :] + noise).astype(np.float32)
        train_pools.append(glyphs[:train_per_class])
        test_pools.append(glyphs[train_per_class:])
    return GlyphSet(f"synthetic(dim={dim},sigma={noise_sigma},seed={seed})",
                    dim, tuple(train_pools), tuple(test_pools))


def apply_permutation(gs: GlyphSet, perm: PixelPermutation) -> GlyphSet:
    """Reorder every glyph's coordinates; same permutation for both splits."""
    if perm.dim != gs.dim:
        raise ParameterError(f"permutation dim {perm.dim} != glyph dim {gs.dim}")
    p = perm.perm
    return GlyphSet(gs.name + "/permuted", gs.dim,
                    tuple(pool[:, p] for pool in gs.train_pools),
                    tuple(pool[:, p] for pool in gs.test_pools))


def render_stream(text: NormalizedText, gs: GlyphSet, split: str,
                  rng: np.random.Generator) -> ObservationSequence:
    """Replace each character by a uniform draw from its pool (with replacement)."""
    pools = gs.pools(split)
    labels = np.asarray(text.chars)
    images = np.empty((labels.size, gs.dim), dtype=pools[0].dtype)
    # one uniform draw per position; scale to per-class pool sizes
    u = rng.random(labels.size)
    for c in range(NUM_LETTERS):
        mask = labels == c
        if not mask.any():
            continue
        pool = pools[c]
        idx = np.minimum((u[mask] * pool.shape[0]).astype(np.int64), pool.shape[0] - 1)
        images[mask] = pool[idx]
    return ObservationSequence(images, labels.copy())


def make_pairs(seq: ObservationSequence) -> PairBatch:
    """Non-overlapping consecutive pairs: pair i = (image 2i, image 2i+1)."""
    n = len(seq)
    if n < 2 or n % 2 != 0:
        raise ParameterError(f"need an even sequence of length >= 2, got {n}")
    return PairBatch(seq.images[0::2], seq.images[1::2])


def save_glyphset(gs: GlyphSet, path, extra_header: dict | None = None) -> None:
    """Flat float32 binary with a JSON header line (lengths + dims)."""
    header = {
        "name": gs.name, "dim": gs.dim,
        "train_counts": [int(p.shape[0]) for p in gs.train_pools],
        "test_counts": [int(p.shape[0]) for p in gs.test_pools],
    }
    if extra_header:
        header.update(extra_header)
    with open(path, "wb") as f:
        f.write((json.dumps(header) + "\n").encode("utf-8"))
        for pool in (*gs.train_pools, *gs.test_pools):
            f.write(np.ascontiguousarray(pool, dtype=np.float32).tobytes())


def load_glyphset(path) -> GlyphSet:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        dim = int(header["dim"])
        pools = []
        for count in (*header["train_counts"], *header["test_counts"]):
            buf = f.read(4 * dim * count)
            if len(buf) < 4 * dim * count:
                raise FormatError(f"{path}: truncated glyph payload")
            pools.append(np.frombuffer(buf, dtype=np.float32).reshape(count, dim))
    return GlyphSet(header["name"], dim,
                    tuple(pools[:NUM_LETTERS]), tuple(pools[NUM_LETTERS:]))
