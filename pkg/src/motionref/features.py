"""Text-to-feature providers plus sentence pooling and projection.

The hash provider is a deterministic stand-in for a language model: every
whitespace token maps to a fixed pseudo-random row derived from SHAKE-256, so
outputs are stable across processes and platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Protocol

import numpy as np

from .errors import DegeneratePoolError, ShapeError
from .tensor import as_matrix

DEFAULT_DIM = 32
# width of the full-size model; the default keeps desk-scale runs fast
FULL_DIM = 256


@dataclass
class FeatureMatrix:
    """L x D token features with a per-row validity mask."""

    data: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=np.float64).reshape(-1)
        if self.data.ndim != 2:
            raise ShapeError(f"feature data must be 2-D, got {self.data.shape}")
        if self.data.shape[0] != self.mask.shape[0]:
            raise ShapeError(f"{self.data.shape[0]} rows but mask of length {self.mask.shape[0]}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature matrix contains NaN or Inf")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @classmethod
    def empty(cls, dim: int) -> "FeatureMatrix":
        return cls(np.zeros((0, dim)), np.zeros(0))

    def valid_rows(self) -> np.ndarray:
        return self.data[self.mask > 0]


class FeatureProvider(Protocol):
    dim: int

    def encode_words(self, text: str) -> FeatureMatrix: ...


def token_row(token: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.shake_256(f"{seed}\x1f{token}".encode("utf-8")).digest(4 * dim)
    ints = np.frombuffer(digest, dtype="<u4").astype(np.float64)
    return ints / np.float64(2**32 - 1) * 2.0 - 1.0


class HashProvider:
    """Seeded per-token hash embedding with values in [-1, 1]."""

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def encode_words(self, text: str) -> FeatureMatrix:
        tokens = text.split()
        if not tokens:
            return FeatureMatrix.empty(self.dim)
        data = np.stack([token_row(t, self.dim, self.seed) for t in tokens])
        return FeatureMatrix(data, np.ones(len(tokens)))


class FileProvider:
    """Precomputed features keyed by exact sentence text.

    File layout::

        {"<sentence>": {"L": 4, "D": 32, "data": [...row-major...], "mask": [...]}}

    ``mask`` is optional and defaults to all ones. Unknown sentences fall back
    to ``fallback`` if given, otherwise raise KeyError.
    """

    def __init__(self, table: Dict[str, FeatureMatrix], dim: int, fallback: FeatureProvider | None = None):
        self.table = table
        self.dim = dim
        self.fallback = fallback
        for text, fm in table.items():
            if fm.cols != dim:
                raise ShapeError(f"entry {text!r} has D={fm.cols}, expected {dim}")

    @classmethod
    def load(cls, path, dim: int | None = None, fallback: FeatureProvider | None = None) -> "FileProvider":
        raw = json.loads(Path(path).read_text())
        table = {}
        for text, entry in raw.items():
            L, D = int(entry["L"]), int(entry["D"])
            data = np.asarray(entry["data"], dtype=np.float64)
            if data.size != L * D:
                raise ShapeError(f"entry {text!r}: {data.size} values for declared {L}x{D}")
            mask = entry.get("mask", [1] * L)
            table[text] = FeatureMatrix(data.reshape(L, D), mask)
            if dim is None:
                dim = D
        if dim is None:
            raise ValueError(f"{path}: empty feature file and no dim given")
        return cls(table, dim, fallback)

    def dump(self, path) -> None:
        out = {
            text: {"L": fm.rows, "D": fm.cols, "data": fm.data.ravel().tolist(), "mask": fm.mask.tolist()}
            for text, fm in self.table.items()
        }
        Path(path).write_text(json.dumps(out))

    def encode_words(self, text: str) -> FeatureMatrix:
        if text in self.table:
            return self.table[text]
        if self.fallback is not None:
            return self.fallback.encode_words(text)
        if text == "":
            return FeatureMatrix.empty(self.dim)
        raise KeyError(f"no precomputed features for {text!r}")


def encode_words(text: str, seed: int = 0, dim: int = DEFAULT_DIM) -> FeatureMatrix:
    return HashProvider(dim, seed).encode_words(text)


def pool_sentence(words: FeatureMatrix) -> np.ndarray:
    """Mask-weighted mean of the rows, shaped 1 x D."""
    total = words.mask.sum()
    if total <= 0:
        raise DegeneratePoolError("cannot pool: mask has no valid entries")
    return (words.mask @ words.data)[None, :] / total


def project(feature, weights, bias) -> np.ndarray:
    """Row-wise affine map ``feature @ weights + bias`` (weights: D_in x D_out)."""
    x = as_matrix(feature.data if isinstance(feature, FeatureMatrix) else feature, "feature")
    w = as_matrix(weights, "weights")
    b = np.asarray(bias, dtype=np.float64).reshape(-1)
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"feature dim {x.shape[1]} does not match weights {w.shape}")
    if b.shape[0] != w.shape[1]:
        raise ShapeError(f"bias length {b.shape[0]} does not match weights {w.shape}")
    return x @ w + b
