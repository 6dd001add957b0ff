"""Finite unions of half-open frequency intervals on [-pi, pi).

Endpoints are stored as Fractions in units of pi.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

_ONE = Fraction(1)


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class SpectrumMask:
    intervals: tuple[tuple[Fraction, Fraction], ...] = ()

    @classmethod
    def from_intervals(cls, intervals: Iterable[tuple]) -> "SpectrumMask":
        """Build a mask from arbitrary intervals; ends outside [-1, 1) wrap around."""
        pieces: list[tuple[Fraction, Fraction]] = []
        for a, b in intervals:
            a, b = _as_fraction(a), _as_fraction(b)
            if b <= a:
                continue
            if b - a >= 2:
                pieces.append((-_ONE, _ONE))
                continue
            # shift so that a lies in [-1, 1)
            shift = 2 * ((a + 1) // 2)
            a, b = a - shift, b - shift
            if b <= 1:
                pieces.append((a, b))
            else:
                pieces.append((a, _ONE))
                pieces.append((-_ONE, b - 2))
        return cls(_merge(pieces))

    @classmethod
    def full(cls) -> "SpectrumMask":
        return cls(((-_ONE, _ONE),))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def measure(self) -> Fraction:
        """Total length in units of pi."""
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def complement(self) -> "SpectrumMask":
        out = []
        cur = -_ONE
        for a, b in self.intervals:
            if a > cur:
                out.append((cur, a))
            cur = b
        if cur < 1:
            out.append((cur, _ONE))
        return SpectrumMask(tuple(out))

    def dilate(self, eps) -> "SpectrumMask":
        """Widen every interval by ``eps`` (units of pi) on each side, wrapping at +-pi."""
        eps = _as_fraction(eps)
        if self.is_empty or eps == 0:
            return self
        # intervals touching across the +-pi seam are one interval on the circle
        return SpectrumMask.from_intervals((a - eps, b + eps) for a, b in self.intervals)

    def union(self, other: "SpectrumMask") -> "SpectrumMask":
        return SpectrumMask(_merge(list(self.intervals) + list(other.intervals)))

    def contains(self, w: np.ndarray) -> np.ndarray:
        """Boolean membership for frequencies ``w`` given in radians."""
        x = (np.asarray(w, dtype=float) / np.pi + 1) % 2 - 1
        hit = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            hit |= (x >= float(a)) & (x < float(b))
        return hit

    def inner_points(self, w: np.ndarray) -> np.ndarray:
        """Membership shrunk to grid points strictly inside the closed intervals.

        Intended for stopbands: a grid point sitting exactly on an edge
        belongs to the transition band and is left out.
        """
        x = (np.asarray(w, dtype=float) / np.pi + 1) % 2 - 1
        hit = np.zeros(x.shape, dtype=bool)
        tol = 1e-12
        ends = {b for _, b in self.intervals}
        starts = {a for a, _ in self.intervals}
        for a, b in self.intervals:
            # an end at -1 or 1 is only a real edge if the mask does not continue across the seam
            lo = -np.inf if a == -1 and _ONE in ends else float(a) + tol
            hi = np.inf if b == 1 and -_ONE in starts else float(b) - tol
            hit |= (x > lo) & (x < hi)
        return hit

    def to_list(self) -> list[list[str]]:
        return [[str(a), str(b)] for a, b in self.intervals]

    @classmethod
    def from_list(cls, data) -> "SpectrumMask":
        return cls(_merge([(Fraction(a), Fraction(b)) for a, b in data]))

    def __str__(self) -> str:
        if self.is_empty:
            return "{}"
        return " U ".join(f"[{a}pi, {b}pi)" for a, b in self.intervals)


def _merge(pieces: list[tuple[Fraction, Fraction]]) -> tuple[tuple[Fraction, Fraction], ...]:
    pieces = sorted(p for p in pieces if p[1] > p[0])
    out: list[list[Fraction]] = []
    for a, b in pieces:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)
