"""Finite-support sequence vectors and the three model-space norms.

Every point handled by this package lives in one of three spaces: R^d with
the Euclidean norm, a truncated l2 sequence space, or l1 over the integers.
All of them share one representation: a finite map from integer indices to
float coefficients.  The zero vector is the base point of every space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "SeqVector",
    "Space",
    "SpaceMismatchError",
    "L1_SEQ",
    "L2_SEQ",
    "euclidean",
    "zero",
    "basis",
    "norm",
    "l1_norm",
    "l2_norm",
    "inner",
    "add",
    "sub",
    "scale",
    "to_array",
    "from_array",
]


class SpaceMismatchError(ValueError):
    """A vector's support is not admissible for the requested space."""


class SeqVector:
    """Immutable finite map from integer indices to nonzero coefficients.

    Exact zeros are dropped at construction (canonical form), so two vectors
    are equal iff their entry maps are equal.  Coefficients below 1e-300 in
    magnitude are kept as-is; only exact 0.0 is removed.
    """

    __slots__ = ("_entries", "_min_index", "_max_index")

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        if isinstance(entries, SeqVector):
            items = entries._entries.items()
        elif isinstance(entries, Mapping):
            items = entries.items()
        else:
            items = entries
        store: dict[int, float] = {}
        lo = hi = None
        for s, c in items:
            s = int(s)
            c = float(c)
            if c != 0.0:
                store[s] = c
                if lo is None or s < lo:
                    lo = s
                if hi is None or s > hi:
                    hi = s
        self._entries = store
        self._min_index = lo
        self._max_index = hi

    @classmethod
    def _from_canonical(cls, entries: dict[int, float], lo: int | None, hi: int | None) -> "SeqVector":
        """Wrap a dict the caller guarantees is already canonical (no zeros)."""
        v = cls.__new__(cls)
        v._entries = entries
        v._min_index = lo
        v._max_index = hi
        return v

    @classmethod
    def from_json_dict(cls, data: Mapping[str, float]) -> "SeqVector":
        return cls({int(k): float(v) for k, v in data.items()})

    def to_json_dict(self) -> dict[str, float]:
        return {str(s): float(self._entries[s]) for s in sorted(self._entries)}

    @property
    def support(self):
        return self._entries.keys()

    @property
    def min_index(self) -> int | None:
        return self._min_index

    @property
    def max_index(self) -> int | None:
        return self._max_index

    @property
    def max_abs_index(self) -> int:
        if self._min_index is None:
            return 0
        return max(abs(self._min_index), abs(self._max_index))

    def is_zero(self) -> bool:
        return not self._entries

    def items(self):
        return self._entries.items()

    def get(self, s: int, default: float = 0.0) -> float:
        return self._entries.get(s, default)

    def __getitem__(self, s: int) -> float:
        return self._entries.get(s, 0.0)

    def __contains__(self, s: int) -> bool:
        return s in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SeqVector):
            return NotImplemented
        return self._entries == other._entries

    __hash__ = None  # mutable-dict semantics: not hashable

    def __repr__(self) -> str:
        inside = ", ".join(f"{s}: {self._entries[s]!r}" for s in sorted(self._entries))
        return f"SeqVector({{{inside}}})"


def zero() -> SeqVector:
    return SeqVector()


def basis(s: int, c: float = 1.0) -> SeqVector:
    """Coefficient ``c`` at index ``s`` and nothing else."""
    return SeqVector({s: c})


@dataclass(frozen=True)
class Space:
    """Norm tag: ``euclidean`` (with a dimension), ``l2_seq`` or ``l1_seq``.

    Euclidean vectors must be supported inside 1..dim; the sequence spaces
    accept any finite support over the integers.
    """

    kind: str
    dim: int | None = None

    def __post_init__(self):
        if self.kind not in ("euclidean", "l1_seq", "l2_seq"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == "euclidean":
            if not isinstance(self.dim, int) or self.dim < 1:
                raise ValueError("euclidean space needs a positive integer dimension")
        elif self.dim is not None:
            raise ValueError(f"{self.kind} takes no dimension")

    @property
    def is_hilbert(self) -> bool:
        return self.kind != "l1_seq"

    def admits(self, x: SeqVector) -> bool:
        if self.kind != "euclidean" or x.is_zero():
            return True
        return x.min_index >= 1 and x.max_index <= self.dim

    def require(self, x: SeqVector) -> None:
        if not self.admits(x):
            raise SpaceMismatchError(
                f"support [{x.min_index}, {x.max_index}] not inside 1..{self.dim}"
            )

    def to_json_dict(self) -> dict:
        if self.kind == "euclidean":
            return {"kind": "euclidean", "dim": self.dim}
        return {"kind": self.kind}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Space":
        return cls(str(data["kind"]), data.get("dim"))


def euclidean(dim: int) -> Space:
    return Space("euclidean", dim)


L1_SEQ = Space("l1_seq")
L2_SEQ = Space("l2_seq")


def l1_norm(x: SeqVector) -> float:
    return math.fsum(abs(c) for c in x._entries.values())


def l2_norm(x: SeqVector) -> float:
    return math.sqrt(math.fsum(c * c for c in x._entries.values()))


def norm(x: SeqVector, space: Space) -> float:
    """Space norm of ``x``; fsum keeps the result independent of entry order."""
    space.require(x)
    if space.kind == "l1_seq":
        return l1_norm(x)
    return l2_norm(x)


def inner(x: SeqVector, y: SeqVector) -> float:
    """Scalar product over the common support."""
    if len(y) < len(x):
        x, y = y, x
    ye = y._entries
    return math.fsum(c * ye[s] for s, c in x._entries.items() if s in ye)


def add(x: SeqVector, y: SeqVector) -> SeqVector:
    out = dict(x._entries)
    for s, c in y._entries.items():
        out[s] = out.get(s, 0.0) + c
    return SeqVector(out)


def sub(x: SeqVector, y: SeqVector) -> SeqVector:
    out = dict(x._entries)
    for s, c in y._entries.items():
        out[s] = out.get(s, 0.0) - c
    return SeqVector(out)


def scale(c: float, x: SeqVector) -> SeqVector:
    c = float(c)
    return SeqVector({s: c * v for s, v in x._entries.items()})


def to_array(x: SeqVector, dim: int) -> np.ndarray:
    """Dense view of a vector supported inside 1..dim (index s -> slot s-1)."""
    euclidean(dim).require(x)
    arr = np.zeros(dim)
    for s, c in x.items():
        arr[s - 1] = c
    return arr


def from_array(arr: np.ndarray) -> SeqVector:
    return SeqVector({i + 1: float(c) for i, c in enumerate(np.asarray(arr).ravel())})
