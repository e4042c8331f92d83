"""Extended-real scalars on [-inf, +inf] with a total order and guarded sums.

Directional derivatives of nonsmooth objectives take values on the extended
line, so this type is the codomain of every subderivative in the toolkit.
NaN is rejected at construction; keeping it out preserves the total order
NegInf < finite < PosInf without epsilon games.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import IndeterminateSum


@dataclass(frozen=True, order=False)
class ExtReal:
    """An extended-real value. The payload is a float that is never NaN."""

    v: float

    def __post_init__(self):
        object.__setattr__(self, "v", float(self.v))
        if math.isnan(self.v):
            raise ValueError("ExtReal payload must not be NaN")

    @staticmethod
    def of(v: float) -> "ExtReal":
        """Wrap any non-NaN float, infinities included."""
        return ExtReal(v)

    @staticmethod
    def finite(v: float) -> "ExtReal":
        """Wrap a value that must be finite."""
        if not math.isfinite(v):
            raise ValueError(f"expected a finite value, got {v!r}")
        return ExtReal(v)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.v)

    def __float__(self) -> float:
        return self.v

    def __neg__(self) -> "ExtReal":
        return ExtReal(-self.v)

    def scaled(self, lam: float) -> "ExtReal":
        """Multiply by a positive factor; lam * (+-inf) stays the same infinity."""
        if lam <= 0:
            raise ValueError("scaled() requires a positive factor")
        return ExtReal(lam * self.v)

    def __add__(self, other: "ExtReal") -> "ExtReal":
        return ext_add(self, other)

    # Total order via the float payload; IEEE handles +-inf, NaN is banned.
    def __lt__(self, other: "ExtReal") -> bool:
        return self.v < other.v

    def __le__(self, other: "ExtReal") -> bool:
        return self.v <= other.v

    def __gt__(self, other: "ExtReal") -> bool:
        return self.v > other.v

    def __ge__(self, other: "ExtReal") -> bool:
        return self.v >= other.v

    def __repr__(self) -> str:
        return f"ExtReal({self.v!r})"


POS_INF = ExtReal(math.inf)
NEG_INF = ExtReal(-math.inf)
ZERO = ExtReal(0.0)


def ext_add(a: ExtReal, b: ExtReal) -> ExtReal:
    """Extended-real sum. (+inf) + (-inf) is rejected, not silently NaN."""
    if (a.v == math.inf and b.v == -math.inf) or (a.v == -math.inf and b.v == math.inf):
        raise IndeterminateSum("(+inf) + (-inf) is undefined")
    return ExtReal(a.v + b.v)
