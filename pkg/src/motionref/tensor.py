"""Dense numeric kernel: matmul, row softmax, affine layers, multi-head attention.

Matrices are 2-D float64 numpy arrays. Linear maps use the row convention
``y = x @ W + b`` with ``W`` shaped (in, out).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Mapping

import numpy as np

from .errors import ShapeError

DEFAULT_HEADS = 8


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a, "a"), as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def softmax_rows(m) -> np.ndarray:
    m = as_matrix(m)
    if m.shape[1] == 0:
        return m.copy()
    z = m - m.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def affine(x, weight, bias=None) -> np.ndarray:
    x, weight = as_matrix(x, "input"), as_matrix(weight, "weight")
    if x.shape[1] != weight.shape[0]:
        raise ShapeError(f"input has {x.shape[1]} columns, weight expects {weight.shape[0]}")
    out = x @ weight
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64).reshape(-1)
        if bias.shape[0] != weight.shape[1]:
            raise ShapeError(f"bias length {bias.shape[0]} != output dim {weight.shape[1]}")
        out = out + bias
    return out


def seeded_uniform(rng: np.random.Generator, rows: int, cols: int, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(rows, cols))


@dataclass
class Linear:
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = as_matrix(self.weight, "weight")
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.bias.shape[0] != self.weight.shape[1]:
            raise ShapeError(f"bias length {self.bias.shape[0]} != {self.weight.shape[1]}")

    def __call__(self, x) -> np.ndarray:
        return affine(x, self.weight, self.bias)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    @classmethod
    def init(cls, rng: np.random.Generator, in_dim: int, out_dim: int) -> "Linear":
        return cls(seeded_uniform(rng, in_dim, out_dim, in_dim), np.zeros(out_dim))

    @classmethod
    def identity(cls, dim: int) -> "Linear":
        return cls(np.eye(dim), np.zeros(dim))

    @classmethod
    def zeros(cls, in_dim: int, out_dim: int) -> "Linear":
        return cls(np.zeros((in_dim, out_dim)), np.zeros(out_dim))


@dataclass
class AttentionParams:
    """Projections for multi-head attention over model dimension D.

    Each of w_q, w_k, w_v, w_o is D x D; head h uses columns
    ``h*D/heads:(h+1)*D/heads`` of the input projections.
    """

    heads: int
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    b_q: np.ndarray
    b_k: np.ndarray
    b_v: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            if f.name != "heads":
                setattr(self, f.name, np.asarray(getattr(self, f.name), dtype=np.float64))
        d = self.model_dim
        if self.heads < 1 or d % self.heads != 0:
            raise ShapeError(f"heads={self.heads} must divide model_dim={d}")
        for name in ("w_q", "w_k", "w_v", "w_o"):
            if getattr(self, name).shape != (d, d):
                raise ShapeError(f"{name} must be {d}x{d}, got {getattr(self, name).shape}")
        for name in ("b_q", "b_k", "b_v", "b_o"):
            if getattr(self, name).shape != (d,):
                raise ShapeError(f"{name} must have length {d}")

    @property
    def model_dim(self) -> int:
        return self.w_q.shape[0]

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.heads

    @classmethod
    def init(cls, rng: np.random.Generator, model_dim: int, heads: int = DEFAULT_HEADS) -> "AttentionParams":
        ws = [seeded_uniform(rng, model_dim, model_dim, model_dim) for _ in range(4)]
        bs = [np.zeros(model_dim) for _ in range(4)]
        return cls(heads, *ws, *bs)

    @classmethod
    def identity(cls, model_dim: int, heads: int = 1) -> "AttentionParams":
        eye, z = np.eye(model_dim), np.zeros(model_dim)
        return cls(heads, eye, eye, eye, eye, z, z, z, z)

    def with_zero_output(self) -> "AttentionParams":
        """Copy whose output projection (weight and bias) is zero."""
        d = self.model_dim
        return AttentionParams(
            self.heads, self.w_q, self.w_k, self.w_v, np.zeros((d, d)),
            self.b_q, self.b_k, self.b_v, np.zeros(d),
        )

    def to_dict(self) -> Dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "heads"}


def _rowwise_affine(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit product-sum so each output row depends only on its input row;
    # a BLAS gemm may round a row differently depending on where it sits
    return (x[:, :, None] * w[None, :, :]).sum(axis=1) + b


def _canonical_sum(terms: np.ndarray, axis: int) -> np.ndarray:
    # summing in sorted order makes the result independent of key order
    return np.sort(terms, axis=axis).sum(axis=axis)


def mha(query, key, value, params: AttentionParams) -> np.ndarray:
    """Multi-head scaled dot-product attention; output has the query's shape.

    No residual is added here. Permuting query rows permutes the output rows
    and permuting key/value rows together leaves it unchanged, both bit for bit.
    """
    q_in, k_in, v_in = as_matrix(query, "query"), as_matrix(key, "key"), as_matrix(value, "value")
    d = params.model_dim
    for name, m in (("query", q_in), ("key", k_in), ("value", v_in)):
        if m.shape[1] != d:
            raise ShapeError(f"{name} has {m.shape[1]} columns, model_dim is {d}")
    if k_in.shape[0] != v_in.shape[0]:
        raise ShapeError(f"key rows {k_in.shape[0]} != value rows {v_in.shape[0]}")
    if k_in.shape[0] == 0:
        raise ShapeError("attention needs at least one key")

    q = _rowwise_affine(q_in, params.w_q, params.b_q)
    k = _rowwise_affine(k_in, params.w_k, params.b_k)
    v = _rowwise_affine(v_in, params.w_v, params.b_v)

    h, dh = params.heads, params.head_dim
    # (heads, rows, head_dim)
    qh = q.reshape(q.shape[0], h, dh).transpose(1, 0, 2)
    kh = k.reshape(k.shape[0], h, dh).transpose(1, 0, 2)
    vh = v.reshape(v.shape[0], h, dh).transpose(1, 0, 2)

    # (heads, queries, keys)
    scores = (qh[:, :, None, :] * kh[:, None, :, :]).sum(axis=3) / np.sqrt(dh)
    scores = scores - scores.max(axis=2, keepdims=True)
    w = np.exp(scores)
    w /= _canonical_sum(w, axis=2)[:, :, None]
    heads_out = _canonical_sum(w[:, :, :, None] * vh[:, None, :, :], axis=2)
    concat = heads_out.transpose(1, 0, 2).reshape(q.shape[0], d)
    return _rowwise_affine(concat, params.w_o, params.b_o)


# ---------------------------------------------------------------------------
# persistence: {"name": {"rows": r, "cols": c, "data": [row-major floats]}}


def save_matrices(path, matrices: Mapping[str, np.ndarray]) -> None:
    out = {}
    for name, m in matrices.items():
        m = as_matrix(m, name)
        out[name] = {"rows": m.shape[0], "cols": m.shape[1], "data": m.ravel().tolist()}
    Path(path).write_text(json.dumps(out, indent=1))


def load_matrices(path) -> Dict[str, np.ndarray]:
    raw = json.loads(Path(path).read_text())
    out = {}
    for name, entry in raw.items():
        data = np.asarray(entry["data"], dtype=np.float64)
        rows, cols = int(entry["rows"]), int(entry["cols"])
        if data.size != rows * cols:
            raise ShapeError(f"{name}: {data.size} values for declared {rows}x{cols}")
        out[name] = data.reshape(rows, cols)
    return out
