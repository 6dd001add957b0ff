"""Running a designed bank on signals.

Analysis blocks the input into S phases (phase ``i`` holds ``x(tS + i)``),
filters the phase vector with the polyphase FIR and splits the S output
phases into channels by row offset.  Synthesis applies the causal
paraconjugate ``z^-K H~(z)`` so that, for a paraunitary bank, the round
trip returns the input delayed by ``K*S`` samples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bands import BankPlan
from .paraunitary import PolyphaseFIR

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SignalBuffer:
    samples: np.ndarray

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).reshape(-1)
        if x.size < 1:
            raise ValueError("a signal needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("signal contains non-finite samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def length(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class SubbandSet:
    """Per-channel phase signals; ``phases[n]`` has shape (rowCount_n, blocks)."""

    phases: tuple[np.ndarray, ...]
    input_length: int
    padded_length: int

    def channel_signal(self, n: int) -> np.ndarray:
        """Interleave the phases of channel ``n`` into one sequence."""
        return self.phases[n].T.reshape(-1)

    def energy(self) -> float:
        return float(sum(np.sum(p**2) for p in self.phases))


def _block(x: np.ndarray, S: int) -> tuple[np.ndarray, int]:
    L = x.size
    T = -(-L // S)
    padded = np.zeros(T * S)
    padded[:L] = x
    return padded.reshape(T, S).T, T * S


def _matrix_fir(taps: np.ndarray, xp: np.ndarray) -> np.ndarray:
    """Full linear convolution ``y(t) = sum_tau taps[tau] x(t - tau)`` on phase vectors."""
    T = xp.shape[1]
    y = np.zeros((taps.shape[1], T + taps.shape[0] - 1))
    for tau, C in enumerate(taps):
        y[:, tau:tau + T] += C @ xp
    return y


def _check_bank(H: PolyphaseFIR, plan: BankPlan) -> None:
    if H.N != plan.S:
        raise ValueError(f"bank is {H.N}x{H.N} but the plan needs {plan.S}x{plan.S}")


def analyze(H: PolyphaseFIR, plan: BankPlan, x: SignalBuffer | np.ndarray) -> SubbandSet:
    """Polyphase analysis; inputs are zero-padded to a multiple of S."""
    _check_bank(H, plan)
    x = x if isinstance(x, SignalBuffer) else SignalBuffer(x)
    xp, padded = _block(x.samples, plan.S)
    if padded != x.length:
        log.info("zero-padded input from %d to %d samples", x.length, padded)
    y = _matrix_fir(H.coeffs, xp)
    phases = tuple(y[off:off + cnt].copy() for off, cnt in zip(plan.row_offsets, plan.row_counts))
    return SubbandSet(phases, x.length, padded)


def synthesize_signal(H: PolyphaseFIR, plan: BankPlan, sb: SubbandSet) -> SignalBuffer:
    """Adjoint synthesis; the result has ``sb.padded_length + K*S`` samples."""
    _check_bank(H, plan)
    if len(sb.phases) != len(plan.channels):
        raise ValueError("subband set has the wrong number of channels")
    for p, cnt in zip(sb.phases, plan.row_counts):
        if p.ndim != 2 or p.shape[0] != cnt:
            raise ValueError("subband phase counts do not match the plan")
    widths = {p.shape[1] for p in sb.phases}
    if len(widths) != 1:
        raise ValueError("subband phases differ in length")
    y = np.concatenate(sb.phases, axis=0)
    K = H.order
    # z^-K H~(z) has tap C_{K-tau}^T at delay tau
    adj = np.transpose(H.coeffs[::-1], (0, 2, 1))
    xp = _matrix_fir(adj, y)
    out = xp.T.reshape(-1)
    return SignalBuffer(out[: sb.padded_length + K * plan.S])


def shift_invariance_check(H: PolyphaseFIR, plan: BankPlan, x, channel: int) -> float:
    """Deviation between the channel output for ``x`` delayed by S and the
    original channel output delayed by that channel's row count."""
    if not 0 <= channel < len(plan.channels):
        raise ValueError(f"channel {channel} out of range")
    x = np.asarray(x.samples if isinstance(x, SignalBuffer) else x, dtype=float)
    P = plan.row_counts[channel]
    base = analyze(H, plan, x).channel_signal(channel)
    shifted = analyze(H, plan, np.concatenate([np.zeros(plan.S), x])).channel_signal(channel)
    expect = np.concatenate([np.zeros(P), base])
    n = min(expect.size, shifted.size)
    tail = max(np.abs(shifted[n:]).max(initial=0.0), np.abs(expect[n:]).max(initial=0.0))
    return float(max(np.abs(shifted[:n] - expect[:n]).max(), tail))


def read_signal(path: str | Path, fmt: str = "csv") -> SignalBuffer:
    path = Path(path)
    if fmt == "csv":
        data = np.loadtxt(path, delimiter=",", ndmin=1)
        if data.ndim != 1:
            raise ValueError(f"{path}: expected a single column")
        return SignalBuffer(data)
    if fmt == "f64":
        return SignalBuffer(np.fromfile(path, dtype="<f8"))
    raise ValueError(f"unknown signal format {fmt!r}")


def write_signal(path: str | Path, samples: np.ndarray, fmt: str = "csv") -> None:
    samples = np.asarray(samples, dtype=float).reshape(-1)
    path = Path(path)
    if fmt == "csv":
        path.write_text("".join(f"{v!r}\n" for v in samples.tolist()))
    elif fmt == "f64":
        samples.astype("<f8").tofile(path)
    else:
        raise ValueError(f"unknown signal format {fmt!r}")
