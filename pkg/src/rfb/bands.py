"""Exact band arithmetic and filter-bank dimensioning.

All band edges are :class:`fractions.Fraction` values in units of pi, so the
lcm/gcd chains that size the bank never touch floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence


class PartitionError(ValueError):
    """Raised for an invalid band or band partition."""


def parse_fraction(text: str | int | Fraction) -> Fraction:
    """Parse ``"num/den"`` (or an int / Fraction) into a normalized Fraction."""
    if isinstance(text, Fraction):
        return text
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PartitionError(f"not a rational number: {text!r}") from exc


def parse_partition(spec: str | Iterable[str]) -> list[Fraction]:
    """Parse ``"2/5,1/5,2/5"`` or a list of ``"num/den"`` strings."""
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    return [parse_fraction(s) for s in items if str(s).strip()]


def _check_band(lo: Fraction, hi: Fraction) -> None:
    if not (0 <= lo <= 1 and 0 <= hi <= 1):
        raise PartitionError(f"band ({lo}, {hi}) lies outside [0, 1]")
    if lo >= hi:
        raise PartitionError(f"band start {lo} is not below band end {hi}")


def band_parameters(lo: Fraction, hi: Fraction) -> tuple[int, int, int]:
    """Return ``(Q, P1, P2)`` with ``Q = lcm`` of the edge denominators."""
    _check_band(lo, hi)
    Q = lcm(lo.denominator, hi.denominator)
    P1 = lo.numerator * Q // lo.denominator
    P2 = hi.numerator * Q // hi.denominator
    return Q, P1, P2


def mapping_dims(lo: Fraction, hi: Fraction) -> tuple[int, int]:
    """Smallest ideal modulation matrix dimensions for the band ``(lo, hi)*pi``.

    ``(P, Q)`` when either scaled edge ``P1``/``P2`` is even, else ``(2P, 2Q)``.

    >>> mapping_dims(Fraction(2, 5), Fraction(1))
    (3, 5)
    >>> mapping_dims(Fraction(1, 3), Fraction(1))
    (4, 6)
    """
    Q, P1, P2 = band_parameters(lo, hi)
    P = P2 - P1
    if P1 % 2 and P2 % 2:
        return 2 * P, 2 * Q
    return P, Q


@dataclass(frozen=True)
class ChannelPlan:
    lo: Fraction
    hi: Fraction
    Q: int
    P1: int
    P2: int
    P: int
    doubled: bool
    r_dim: int
    s_dim: int
    # filled in once the bank column count S is known
    m: int = 0
    row_offset: int = 0
    row_count: int = 0
    bank_cols: int = 0

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def bank_p1(self) -> int:
        """Band start scaled to the bank column count (``lo * S``)."""
        return int(self.lo * self.bank_cols)

    @property
    def bank_p2(self) -> int:
        return int(self.hi * self.bank_cols)

    @property
    def rows(self) -> slice:
        return slice(self.row_offset, self.row_offset + self.row_count)

    def to_dict(self) -> dict:
        return {
            "lo": str(self.lo),
            "hi": str(self.hi),
            "Q": self.Q,
            "P1": self.P1,
            "P2": self.P2,
            "P": self.P,
            "doubled": self.doubled,
            "Rdim": self.r_dim,
            "Sdim": self.s_dim,
            "m": self.m,
            "rowOffset": self.row_offset,
            "rowCount": self.row_count,
        }


def plan_channel(lo: Fraction, hi: Fraction) -> ChannelPlan:
    Q, P1, P2 = band_parameters(lo, hi)
    r_dim, s_dim = mapping_dims(lo, hi)
    return ChannelPlan(
        lo=lo,
        hi=hi,
        Q=Q,
        P1=P1,
        P2=P2,
        P=P2 - P1,
        doubled=bool(P1 % 2 and P2 % 2),
        r_dim=r_dim,
        s_dim=s_dim,
    )


@dataclass(frozen=True)
class BankPlan:
    channels: tuple[ChannelPlan, ...]
    S: int

    @property
    def row_counts(self) -> tuple[int, ...]:
        return tuple(c.row_count for c in self.channels)

    @property
    def residue_counts(self) -> tuple[int, ...]:
        return tuple(c.m for c in self.channels)

    @property
    def row_offsets(self) -> tuple[int, ...]:
        return tuple(c.row_offset for c in self.channels)

    @property
    def fractions(self) -> tuple[Fraction, ...]:
        return tuple(c.width for c in self.channels)

    def to_dict(self) -> dict:
        return {
            "partition": [str(f) for f in self.fractions],
            "S": self.S,
            "rowCounts": list(self.row_counts),
            "residueCounts": list(self.residue_counts),
            "channels": [c.to_dict() for c in self.channels],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BankPlan":
        plan = plan_bank([parse_fraction(f) for f in data["partition"]])
        if plan.S != data["S"] or list(plan.row_counts) != list(data["rowCounts"]):
            raise PartitionError("stored plan is inconsistent with its partition")
        return plan


def plan_bank(fractions: Sequence[Fraction | str]) -> BankPlan:
    """Plan the stacked S x S polyphase matrix for a rational partition of [0, pi].

    >>> plan = plan_bank(["2/5", "1/5", "2/5"])
    >>> plan.S, plan.row_counts, plan.residue_counts
    (10, (4, 2, 4), (2, 2, 2))
    """
    fracs = [parse_fraction(f) for f in fractions]
    if not fracs:
        raise PartitionError("empty partition")
    for f in fracs:
        if not 0 < f <= 1:
            raise PartitionError(f"band width {f} is not in (0, 1]")
    if sum(fracs, Fraction(0)) != 1:
        raise PartitionError(f"partition sums to {sum(fracs, Fraction(0))}, not 1")

    edges = [Fraction(0)]
    for f in fracs:
        edges.append(edges[-1] + f)
    raw = [plan_channel(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
    S = lcm(*(c.s_dim for c in raw))

    channels = []
    offset = 0
    for c in raw:
        k = c.width * S
        assert k.denominator == 1
        k = int(k)
        channels.append(
            ChannelPlan(
                **{
                    **c.__dict__,
                    "m": gcd(k, S),
                    "row_offset": offset,
                    "row_count": k,
                    "bank_cols": S,
                }
            )
        )
        offset += k
    return BankPlan(channels=tuple(channels), S=S)
