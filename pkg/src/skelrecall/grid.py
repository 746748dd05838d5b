"""Dense 2D/3D raster types and neighborhood definitions.

Label and probability grids are thin immutable wrappers around numpy
arrays. Binary grids are plain boolean arrays. Memory order is row-major
with the last axis fastest.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class Connectivity(enum.Enum):
    C4 = "2D-4"
    C8 = "2D-8"
    C6 = "3D-6"
    C18 = "3D-18"
    C26 = "3D-26"

    @property
    def ndim(self) -> int:
        return 2 if self in (Connectivity.C4, Connectivity.C8) else 3

    @property
    def max_nonzero(self) -> int:
        # Largest number of nonzero coordinates an offset may have.
        return {"2D-4": 1, "2D-8": 2, "3D-6": 1, "3D-18": 2, "3D-26": 3}[self.value]

    def offsets(self) -> list[tuple[int, ...]]:
        """Neighbor offsets in lexicographic order."""
        return _offsets(self.ndim, self.max_nonzero)

    def structure(self) -> np.ndarray:
        """Boolean 3^d structuring element (center included) for scipy.ndimage."""
        s = np.zeros((3,) * self.ndim, dtype=bool)
        s[(1,) * self.ndim] = True
        for off in self.offsets():
            s[tuple(o + 1 for o in off)] = True
        return s

    def dual(self) -> "Connectivity":
        """Standard background pairing: 8/4 in 2D, 26/6 and 18/6 in 3D."""
        return {
            Connectivity.C4: Connectivity.C8,
            Connectivity.C8: Connectivity.C4,
            Connectivity.C6: Connectivity.C26,
            Connectivity.C18: Connectivity.C6,
            Connectivity.C26: Connectivity.C6,
        }[self]

    @classmethod
    def parse(cls, text: str | int, ndim: int | None = None) -> "Connectivity":
        """Accept '2D-8', '8', 8 etc. A bare number needs no ndim except 6/18/26 vs 4/8."""
        if isinstance(text, Connectivity):
            return text
        s = str(text).strip().upper()
        for member in cls:
            if s == member.value.upper():
                return member
        by_count = {"4": cls.C4, "8": cls.C8, "6": cls.C6, "18": cls.C18, "26": cls.C26}
        if s in by_count:
            conn = by_count[s]
            if ndim is not None and conn.ndim != ndim:
                raise ValueError(f"connectivity {text!r} does not apply to {ndim}D grids")
            return conn
        raise ValueError(f"unknown connectivity {text!r}")

    @classmethod
    def full(cls, ndim: int) -> "Connectivity":
        return cls.C8 if ndim == 2 else cls.C26

    @classmethod
    def face(cls, ndim: int) -> "Connectivity":
        return cls.C4 if ndim == 2 else cls.C6


@lru_cache(maxsize=None)
def _offsets(ndim: int, max_nonzero: int) -> list[tuple[int, ...]]:
    return [
        off
        for off in itertools.product((-1, 0, 1), repeat=ndim)
        if 0 < sum(o != 0 for o in off) <= max_nonzero
    ]


def check_connectivity(conn: Connectivity, ndim: int) -> None:
    if conn.ndim != ndim:
        raise ValueError(f"connectivity {conn.value} used on a {ndim}D grid")


def _check_dims(shape: tuple[int, ...]) -> None:
    if len(shape) not in (2, 3):
        raise ValueError(f"grids must be 2D or 3D, got shape {shape}")
    if any(n < 1 for n in shape):
        raise ValueError(f"every axis needs extent >= 1, got shape {shape}")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True, order="C")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LabelGrid:
    """Integer label raster; 0 is background, classes are 1..num_classes."""

    data: np.ndarray
    num_classes: int

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype == bool:
            arr = arr.astype(np.int32)
        if not np.issubdtype(arr.dtype, np.integer):
            raise TypeError(f"labels must be integers, got dtype {arr.dtype}")
        _check_dims(arr.shape)
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")
        if arr.size and (arr.min() < 0 or arr.max() > self.num_classes):
            raise ValueError(
                f"labels must lie in [0, {self.num_classes}], got [{arr.min()}, {arr.max()}]"
            )
        object.__setattr__(self, "data", _frozen(arr.astype(np.int32, copy=False)))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def mask(self, c: int) -> np.ndarray:
        return self.data == c

    def __eq__(self, other):
        if not isinstance(other, LabelGrid):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class ProbGrid:
    """Per-class probabilities, shape (num_classes + 1, *dims); channel 0 is background."""

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim not in (3, 4) or arr.shape[0] < 2:
            raise ValueError(f"expected (K+1, *dims) with K >= 1, got shape {arr.shape}")
        _check_dims(arr.shape[1:])
        if not np.all(np.isfinite(arr)):
            raise ValueError("probabilities must be finite")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.normalized and not np.allclose(arr.sum(axis=0), 1.0, rtol=0.0, atol=1e-6):
            raise ValueError("normalized grid does not sum to 1 over channels")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def num_classes(self) -> int:
        return self.data.shape[0] - 1

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape[1:]

    @property
    def ndim(self) -> int:
        return self.data.ndim - 1

    def __eq__(self, other):
        if not isinstance(other, ProbGrid):
            return NotImplemented
        return np.array_equal(self.data, other.data)


def binarize(y: LabelGrid | np.ndarray) -> np.ndarray:
    """Foreground wherever the label is nonzero."""
    data = y.data if isinstance(y, LabelGrid) else np.asarray(y)
    return data > 0


def one_hot(y: LabelGrid) -> ProbGrid:
    k = y.num_classes
    out = np.zeros((k + 1,) + y.dims)
    np.put_along_axis(out, y.data[None].astype(np.intp), 1.0, axis=0)
    return ProbGrid(out, normalized=True)


def argmax_labels(p: ProbGrid) -> LabelGrid:
    """Hard labels from probabilities; ties go to the lower class index."""
    return LabelGrid(np.argmax(p.data, axis=0), p.num_classes)


def class_list(num_classes: int, include_background: bool = False) -> list[int]:
    start = 0 if include_background else 1
    return list(range(start, num_classes + 1))


def neighbors(cell_index: int, conn: Connectivity, dims: tuple[int, ...]) -> list[int]:
    """Linear indices of in-bounds neighbors of a cell, in lexicographic offset order."""
    dims = tuple(int(n) for n in dims)
    check_connectivity(conn, len(dims))
    total = int(np.prod(dims))
    if not 0 <= cell_index < total:
        raise IndexError(f"cell index {cell_index} out of bounds for dims {dims}")
    coord = np.unravel_index(cell_index, dims)
    out = []
    for off in conn.offsets():
        nb = tuple(c + o for c, o in zip(coord, off))
        if all(0 <= v < n for v, n in zip(nb, dims)):
            out.append(int(np.ravel_multi_index(nb, dims)))
    return out
