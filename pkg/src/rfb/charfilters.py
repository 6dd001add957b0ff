"""Residue-class filters characterizing a (P, Q) modulation matrix.

With ``m = gcd(P, Q)``, ``p = P/m``, ``q = Q/m`` and ``K = mpq``, every element
``(l, k)`` of the P x Q modulation matrix with ``(l - k) mod m == d`` equals a
single filter ``H_d`` evaluated at a shifted argument
``e^{j(psi - 2 pi g / K)}``.  This module computes the shifts, picks one
representative per class and derives each filter's ideal passband from the
ideal modulation matrices of the channel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .bands import ChannelPlan
from .imm import IdealModulationMatrix, MappingVariant, OmegaRegion, channel_imm_pair
from .spectrum import SpectrumMask

log = logging.getLogger(__name__)


class ClosedFormMismatch(RuntimeError):
    """Closed-form ideal spectrum disagrees with the IMM-support oracle."""


def bezout(p: int, q: int) -> tuple[int, int]:
    """``(a, b)`` with ``a*p + b*q == 1`` and ``|a|`` minimal.

    >>> bezout(3, 5)
    (2, -1)
    """
    if gcd(p, q) != 1:
        raise ValueError(f"{p} and {q} are not coprime")
    if q == 1:
        return 0, 1
    a = pow(p, -1, q)
    if abs(a - q) < abs(a):
        a -= q
    b = (1 - a * p) // q
    return a, b


@dataclass(frozen=True)
class ResidueStructure:
    P: int
    Q: int
    m: int
    p: int
    q: int
    a: int
    b: int

    @property
    def K(self) -> int:
        return self.m * self.p * self.q

    def residue(self, elem: tuple[int, int]) -> int:
        l, k = elem
        return (l - k) % self.m

    def members(self, d: int) -> list[tuple[int, int]]:
        return [(l, k) for l in range(self.P) for k in range(self.Q) if (l - k) % self.m == d]

    @property
    def classes(self) -> dict[int, list[tuple[int, int]]]:
        return {d: self.members(d) for d in range(self.m)}

    def default_representative(self, d: int) -> tuple[int, int]:
        """Smallest row, then smallest column, of class ``d``."""
        return (0, (-d) % self.m)


def residue_structure(P: int, Q: int) -> ResidueStructure:
    if P < 1 or Q < 1:
        raise ValueError("P and Q must be positive")
    m = gcd(P, Q)
    p, q = P // m, Q // m
    a, b = bezout(p, q)
    return ResidueStructure(P=P, Q=Q, m=m, p=p, q=q, a=a, b=b)


def modulation_shift(rep: tuple[int, int], elem: tuple[int, int], rs: ResidueStructure) -> int:
    """Shift ``g`` with ``[H_m(zeta)]_elem = [H_m(zeta W_K^g)]_rep``."""
    if rs.residue(rep) != rs.residue(elem):
        raise ValueError(f"{rep} and {elem} lie in different residue classes")
    m, p, q = rs.m, rs.p, rs.q
    t = (elem[0] - rep[0]) % (m * p)
    h = ((elem[1] - rep[1]) % (m * q) - t) // m
    return (t + h * rs.a * m * p) % rs.K


@dataclass(frozen=True)
class CharFilterSpec:
    """One characterizing filter of one channel.

    The filter is ``H_d(e^{j psi}) = [H_m(e^{j(psi + 2 pi offset / K)})]_representative``.
    ``ideal_pass`` is expressed on that ``psi`` axis.
    """

    channel: int
    d: int
    representative: tuple[int, int]
    offset: int
    ideal_pass: SpectrumMask
    closed_form: SpectrumMask | None = None
    stopband: SpectrumMask | None = field(default=None, compare=False)

    @property
    def has_passband(self) -> bool:
        return not self.ideal_pass.is_empty

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "d": self.d,
            "representative": list(self.representative),
            "offset": self.offset,
            "idealPass": self.ideal_pass.to_list(),
            "closedForm": None if self.closed_form is None else self.closed_form.to_list(),
            "stopband": None if self.stopband is None else self.stopband.to_list(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CharFilterSpec":
        return cls(
            channel=int(data["channel"]),
            d=int(data["d"]),
            representative=tuple(data["representative"]),
            offset=int(data["offset"]),
            ideal_pass=SpectrumMask.from_list(data["idealPass"]),
            closed_form=None if data.get("closedForm") is None else SpectrumMask.from_list(data["closedForm"]),
            stopband=None if data.get("stopband") is None else SpectrumMask.from_list(data["stopband"]),
        )


def imm_support(
    imm_neg: IdealModulationMatrix,
    imm_pos: IdealModulationMatrix,
    rs: ResidueStructure,
    rep: tuple[int, int],
    offset: int = 0,
) -> SpectrumMask:
    """Passband of the class containing ``rep`` implied by an IMM pair.

    Element ``e`` of the class with shift ``g`` covers the filter argument
    ``phi - 2 pi (g + offset) / K`` while the master frequency ``phi`` sweeps
    (-pi/K, 0) (matrix ``imm_neg``) and (0, pi/K) (matrix ``imm_pos``).
    """
    K = rs.K
    pieces = []
    for imm, lo, hi in ((imm_neg, -1, 0), (imm_pos, 0, 1)):
        for l, k in imm.ones:
            if rs.residue((l, k)) != rs.residue(rep):
                continue
            g = modulation_shift(rep, (l, k), rs) + offset
            pieces.append((Fraction(lo - 2 * g, K), Fraction(hi - 2 * g, K)))
    return SpectrumMask.from_intervals(pieces)


def _pass_filters(channel: ChannelPlan, rs: ResidueStructure, variant: MappingVariant):
    """Representatives, offsets and closed-form passbands of the (at most two) pass filters."""
    P, K, mq = rs.P, rs.K, rs.m * rs.q
    if variant is MappingVariant.MAP1:
        half = channel.bank_p1 // 2
    else:
        half = channel.bank_p2 // 2
    v = rs.a * rs.p * half
    rep1, rep2 = (0, half % mq), (0, (mq - half) % mq)
    if variant is MappingVariant.MAP1:
        band1 = (Fraction(-(2 * v + P), K), Fraction(-2 * v, K))
        band2 = (Fraction(2 * v, K), Fraction(2 * v + P, K))
    else:
        band1 = (Fraction(-2 * v, K), Fraction(-(2 * v - P), K))
        band2 = (Fraction(2 * v - P, K), Fraction(2 * v, K))
    return [(rep1, v, band1), (rep2, -v, band2)]


def ideal_spectra(
    channel: ChannelPlan,
    imm_pair: tuple[IdealModulationMatrix, IdealModulationMatrix] | None = None,
    index: int = 0,
    strict: bool = True,
) -> list[CharFilterSpec]:
    """Characterizing filters of a channel with their ideal passbands.

    Works on the channel's row block of the bank (``row_count`` x S).  The
    IMM-support oracle sets every ``ideal_pass``; the closed-form passband
    of the two distinguished filters is carried alongside and, with
    ``strict``, any disagreement raises :class:`ClosedFormMismatch`.
    """
    if imm_pair is None:
        imm_pair = channel_imm_pair(channel, bank_scale=True)
    imm_neg, imm_pos = imm_pair
    rs = residue_structure(imm_neg.rows, imm_neg.cols)
    if (rs.P, rs.Q) != (channel.row_count, channel.bank_cols):
        raise ValueError("IMM pair is not on the channel's bank-scale dimensions")

    special = {}
    for rep, v, band in _pass_filters(channel, rs, imm_neg.variant):
        d = rs.residue(rep)
        if d in special:
            special[d] = (special[d][0], special[d][1], special[d][2] + [band])
        else:
            special[d] = (rep, v, [band])

    specs = []
    for d in range(rs.m):
        if d in special:
            rep, v, bands = special[d]
            closed = SpectrumMask.from_intervals(bands)
        else:
            rep, v, closed = rs.default_representative(d), 0, SpectrumMask()
        passband = imm_support(imm_neg, imm_pos, rs, rep, v)
        if passband != closed:
            msg = (
                f"channel {index} residue {d}: IMM support {passband} "
                f"!= closed form {closed}"
            )
            if strict:
                raise ClosedFormMismatch(msg)
            log.warning(msg)
        specs.append(
            CharFilterSpec(channel=index, d=d, representative=rep, offset=v, ideal_pass=passband, closed_form=closed)
        )
    return specs


def stopband(spec: CharFilterSpec, epsilon) -> SpectrumMask:
    """Complement of the ideal passband widened by ``epsilon`` (units of pi) per edge.

    A filter whose ideal passband is already the whole circle (a full-band
    channel) gets an empty stopband and drops out of the objective; any
    other filter left without stopband is an error.
    """
    eps = Fraction(epsilon)
    if not 0 <= eps < Fraction(1, 4):
        raise ValueError("transition bandwidth must satisfy 0 <= epsilon < pi/4")
    if spec.ideal_pass.is_empty:
        return SpectrumMask.full()
    stop = spec.ideal_pass.dilate(eps).complement()
    if stop.is_empty and spec.ideal_pass != SpectrumMask.full():
        raise ValueError(f"transition bandwidth {eps}pi leaves no stopband for residue {spec.d}")
    return stop


def with_stopband(spec: CharFilterSpec, epsilon) -> CharFilterSpec:
    from dataclasses import replace

    return replace(spec, stopband=stopband(spec, epsilon))
