"""Columnar property storage shared by the in-memory and archive backends."""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np

from ..model import BOOL, FLOAT64, INT64, STRING, DataType, Value


class Column:
    """One property column: typed dense storage plus an optional null mask."""

    __slots__ = ("dtype", "data", "nulls")

    def __init__(self, dtype: DataType, data, nulls: Optional[np.ndarray]):
        self.dtype = dtype
        self.data = data
        self.nulls = nulls  # bool array, True where null; None if no nulls

    def __len__(self) -> int:
        return len(self.data)

    @staticmethod
    def from_values(dtype: DataType, values: Sequence[Value]) -> "Column":
        n = len(values)
        nulls = None
        if any(v is None for v in values):
            nulls = np.fromiter((v is None for v in values), dtype=bool, count=n)
        if dtype == STRING:
            data: object = ["" if v is None else v for v in values]
        elif dtype == INT64:
            data = np.fromiter((0 if v is None else v for v in values),
                               dtype=np.int64, count=n)
        elif dtype == FLOAT64:
            data = np.fromiter((0.0 if v is None else v for v in values),
                               dtype=np.float64, count=n)
        elif dtype == BOOL:
            data = np.fromiter((False if v is None else v for v in values),
                               dtype=bool, count=n)
        else:
            raise ValueError(f"unsupported property dtype {dtype!r}")
        return Column(dtype, data, nulls)

    def get(self, i: int) -> Value:
        if self.nulls is not None and self.nulls[i]:
            return None
        v = self.data[i]
        if self.dtype == STRING:
            return v
        if self.dtype == BOOL:
            return bool(v)
        if self.dtype == INT64:
            return int(v)
        return float(v)

    def values(self) -> List[Value]:
        return [self.get(i) for i in range(len(self))]

    def has_nulls(self) -> bool:
        return self.nulls is not None and bool(self.nulls.any())

    def mask(self, op: str, const: Value) -> np.ndarray:
        """Vectorized predicate mask matching value_compare semantics
        (NaN above all finite floats, nulls never match)."""
        n = len(self)
        from ..retrieval import PropertyPredicate

        def rowwise() -> np.ndarray:
            out = np.zeros(n, dtype=bool)
            for i in range(n):
                v = self.get(i)
                if v is not None and PropertyPredicate._holds(op, v, const):
                    out[i] = True
            return out

        numeric = self.dtype in (INT64, FLOAT64) and isinstance(const, (int, float)) \
            and not isinstance(const, bool)
        if not numeric:
            out = rowwise()
        else:
            if isinstance(const, float) and math.isnan(const):
                return rowwise()
            data = self.data
            if op == "=":
                out = data == const
            elif op == "!=":
                out = data != const
            elif op == "<":
                out = data < const
            elif op == "<=":
                out = data <= const
            elif op == ">":
                out = data > const
            elif op == ">=":
                out = data >= const
            else:
                raise ValueError(f"bad comparison op {op!r}")
            if self.dtype == FLOAT64:
                nan = np.isnan(data)
                if nan.any():
                    # NaN sorts above every finite value
                    if op in (">", ">=", "!="):
                        out = out | nan
                    else:
                        out = out & ~nan
        if self.nulls is not None:
            out = out & ~self.nulls
        return out
