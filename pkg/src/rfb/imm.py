"""Ideal (0/1) modulation matrices for a single-band mapping.

A P x Q ideal modulation matrix (IMM) routes segments of the input spectrum
onto segments of the output spectrum.  Two matrices are needed per band, one
valid while the master frequency sweeps (-pi, 0) and one for (0, pi).

DFT roots follow ``W_N = exp(-2j*pi/N)`` throughout: with ``z = exp(j*w)``
row ``l`` of the modulation vector carries output frequency ``(w - 2*pi*l)/R``
and column ``k`` carries input frequency ``(w - 2*pi*k)/S``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .bands import ChannelPlan, PartitionError, _check_band


class OmegaRegion(str, enum.Enum):
    NEG = "neg"  # (-pi, 0)
    POS = "pos"  # (0, pi)

    @property
    def opposite(self) -> "OmegaRegion":
        return OmegaRegion.POS if self is OmegaRegion.NEG else OmegaRegion.NEG


class MappingVariant(str, enum.Enum):
    """Which half of the output spectrum the positive input band lands on."""

    MAP1 = "map1"  # (lo, hi)*pi -> (0, pi)
    MAP2 = "map2"  # (lo, hi)*pi -> (-pi, 0)

    @property
    def other(self) -> "MappingVariant":
        return MappingVariant.MAP2 if self is MappingVariant.MAP1 else MappingVariant.MAP1


@dataclass(frozen=True)
class IdealModulationMatrix:
    rows: int
    cols: int
    ones: tuple[tuple[int, int], ...]
    region: OmegaRegion
    variant: MappingVariant
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        seen_rows = [l for l, _ in self.ones]
        seen_cols = [k for _, k in self.ones]
        if sorted(seen_rows) != list(range(self.rows)):
            raise ValueError("an IMM needs exactly one 1 in every row")
        if any(not 0 <= k < self.cols for k in seen_cols):
            raise ValueError("IMM column index out of range")
        if len(set(seen_cols)) != len(seen_cols):
            raise ValueError("an IMM has at most one 1 per column")
        if self.width * self.cols != self.rows:
            raise ValueError("IMM shape does not match its band width")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def column_of(self) -> dict[int, int]:
        return dict(self.ones)

    def to_array(self) -> np.ndarray:
        a = np.zeros((self.rows, self.cols), dtype=int)
        for l, k in self.ones:
            a[l, k] = 1
        return a

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "region": self.region.value,
            "variant": self.variant.value,
            "band": [str(self.lo), str(self.hi)],
            "ones": [[l, k] for l, k in self.ones],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IdealModulationMatrix":
        lo, hi = (Fraction(x) for x in data["band"])
        return cls(
            rows=int(data["rows"]),
            cols=int(data["cols"]),
            ones=tuple(sorted((int(l), int(k)) for l, k in data["ones"])),
            region=OmegaRegion(data["region"]),
            variant=MappingVariant(data["variant"]),
            lo=lo,
            hi=hi,
        )


def _direct_ones(P1: int, P2: int, Q: int, use_p2: bool) -> tuple[tuple[int, int], ...]:
    P = P2 - P1
    ones = []
    for l in range(P):
        if not use_p2:
            k = P1 // 2 + l if 2 * l < P else Q - (P1 // 2 + P - l)
        else:
            k = Q - (P2 // 2 - l) if 2 * l < P else (P1 - P) // 2 + l
        ones.append((l, k % Q))
    return tuple(ones)


def build_imm_pair(
    lo: Fraction,
    hi: Fraction,
    cols: int,
    use_p2: bool | None = None,
) -> tuple[IdealModulationMatrix, IdealModulationMatrix]:
    """Return ``(H_I(-pi,0), H_I(0,pi))`` for the band ``(lo, hi)*pi`` on ``cols`` columns.

    ``cols`` must make both scaled edges integers and at least one of them
    even.  The even-start formula is used when possible (mapping MAP1);
    otherwise, or when ``use_p2`` is set, the even-end formula (MAP2).
    The directly computed matrix is the (-pi, 0) one; the (0, pi) partner
    is its reflection.
    """
    _check_band(lo, hi)
    p1, p2 = lo * cols, hi * cols
    if p1.denominator != 1 or p2.denominator != 1:
        raise PartitionError(f"{cols} columns do not resolve band ({lo}, {hi})")
    P1, P2 = int(p1), int(p2)
    if use_p2 is None:
        use_p2 = P1 % 2 == 1
    if (P2 if use_p2 else P1) % 2:
        raise PartitionError(
            f"band ({lo}, {hi}) on {cols} columns has no even edge for the requested formula"
        )
    variant = MappingVariant.MAP2 if use_p2 else MappingVariant.MAP1
    neg = IdealModulationMatrix(
        rows=P2 - P1,
        cols=cols,
        ones=tuple(sorted(_direct_ones(P1, P2, cols, use_p2))),
        region=OmegaRegion.NEG,
        variant=variant,
        lo=lo,
        hi=hi,
    )
    return neg, reflect_imm(neg)


def build_imm_neg(channel: ChannelPlan, use_p2: bool | None = None) -> IdealModulationMatrix:
    """The (-pi, 0) IMM of a channel at its smallest dimensions."""
    return build_imm_pair(channel.lo, channel.hi, channel.s_dim, use_p2)[0]


def channel_imm_pair(
    channel: ChannelPlan, bank_scale: bool = True
) -> tuple[IdealModulationMatrix, IdealModulationMatrix]:
    """IMM pair for a channel, either on the bank's S columns or its own minimum."""
    cols = channel.bank_cols if bank_scale and channel.bank_cols else channel.s_dim
    return build_imm_pair(channel.lo, channel.hi, cols)


def reflect_imm(imm: IdealModulationMatrix) -> IdealModulationMatrix:
    """Entry ``(l, r)`` of the result is entry ``((R-l)%R, (S-r)%S)`` of ``imm``."""
    R, S = imm.rows, imm.cols
    ones = tuple(sorted(((R - l) % R, (S - k) % S) for l, k in imm.ones))
    return replace(imm, ones=ones, region=imm.region.opposite)


def _input_is_positive(region: OmegaRegion, k: int, S: int) -> bool:
    # input frequency at the middle of the region sweep, in units of pi/(2S)
    num = -(4 * k + 1) if region is OmegaRegion.NEG else 1 - 4 * k
    num = (num + 2 * S) % (4 * S) - 2 * S
    return num > 0


def swap_mapping(imm: IdealModulationMatrix) -> IdealModulationMatrix:
    """Convert an IMM between the two mapping variants of the same band.

    The result is ``imm`` times a column permutation: a 1 fed from the
    positive input band moves ``(P1+P2)/2`` columns right, one fed from the
    negative band moves the same distance left (indices mod S).  Applying
    the swap twice restores the original matrix.
    """
    if imm.rows % 2:
        raise ValueError("both mapping variants exist only for an even row count")
    S = imm.cols
    half = int((imm.lo + imm.hi) * S) // 2
    ones = []
    for l, k in imm.ones:
        step = half if _input_is_positive(imm.region, k, S) else -half
        ones.append((l, (k + step) % S))
    return replace(imm, ones=tuple(sorted(ones)), variant=imm.variant.other)


def rotate_columns(imm: IdealModulationMatrix, shift: int) -> IdealModulationMatrix:
    """Right-multiply by the permutation rotating the input vector up by ``shift``.

    Kept for comparison with :func:`swap_mapping`; a plain rotation does not
    produce a valid mapping for every band.
    """
    ones = tuple(sorted((l, (k + shift) % imm.cols) for l, k in imm.ones))
    return replace(imm, ones=ones, variant=imm.variant.other)


@dataclass(frozen=True)
class MappingCheck:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _wrap(x):
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


def _required_input(out: np.ndarray, lo: float, hi: float, variant: MappingVariant) -> np.ndarray:
    """Input frequency the target mapping sends onto output frequency ``out``."""
    w = hi - lo
    if variant is MappingVariant.MAP1:
        return np.where(out > 0, lo * np.pi + out * w, -lo * np.pi + out * w)
    return np.where(out < 0, hi * np.pi + out * w, -hi * np.pi + out * w)


def verify_mapping(
    imm_neg: IdealModulationMatrix,
    imm_pos: IdealModulationMatrix,
    channel: ChannelPlan | tuple[Fraction, Fraction] | None = None,
    grid_size: int | None = None,
    tol: float = 1e-9,
) -> MappingCheck:
    """Brute-force check that an IMM pair realizes its band mapping.

    Sweeps the master frequency over both half-regions and, for every row,
    compares the input frequency its 1-entry selects against the one the
    target mapping requires.  Also checks that the output segments of all
    rows in both regions tile (-pi, pi) exactly once.
    """
    if channel is None:
        lo, hi = imm_neg.lo, imm_neg.hi
    elif isinstance(channel, ChannelPlan):
        lo, hi = channel.lo, channel.hi
    else:
        lo, hi = channel
    R, S = imm_neg.rows, imm_neg.cols
    if (imm_pos.rows, imm_pos.cols) != (R, S):
        return MappingCheck(False, "IMM pair shapes differ")
    if imm_neg.region is not OmegaRegion.NEG or imm_pos.region is not OmegaRegion.POS:
        return MappingCheck(False, "IMM pair regions are not (neg, pos)")
    if imm_neg.variant is not imm_pos.variant:
        return MappingCheck(False, "IMM pair mixes mapping variants")
    if (hi - lo) * S != R:
        return MappingCheck(False, f"shape {R}x{S} does not match band width {hi - lo}")
    G = grid_size if grid_size is not None else 16 * S
    if G < 16 * S:
        raise ValueError(f"grid_size must be at least 16*S = {16 * S}")

    t = (np.arange(G) + 0.5) / G * np.pi
    outs = []
    for imm, w in ((imm_neg, -t), (imm_pos, t)):
        for l, k in imm.ones:
            out = _wrap((w - 2 * np.pi * l) / R)
            got = _wrap((w - 2 * np.pi * k) / S)
            want = _required_input(out, float(lo), float(hi), imm.variant)
            err = np.abs(_wrap(got - want))
            if err.max() > tol:
                j = int(err.argmax())
                return MappingCheck(
                    False,
                    f"{imm.region.value} row {l} col {k}: output {out[j] / np.pi:.6f}pi "
                    f"receives input {got[j] / np.pi:.6f}pi, mapping wants {want[j] / np.pi:.6f}pi",
                )
            outs.append(out)
    outs = np.sort(np.concatenate(outs))
    step = np.pi / (G * R)
    if outs.size != 2 * G * R or np.abs(np.diff(outs) - step).max() > 1e-6 * step:
        return MappingCheck(False, "output segments do not tile (-pi, pi) exactly once")
    return MappingCheck(True)
