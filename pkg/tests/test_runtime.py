import numpy as np
import pytest

from rfb.bands import plan_bank
from rfb.paraunitary import PolyphaseFIR, ThetaVector, synthesize
from rfb.runtime import (
    SignalBuffer,
    SubbandSet,
    analyze,
    read_signal,
    shift_invariance_check,
    synthesize_signal,
    write_signal,
)
from conftest import EXAMPLE1


@pytest.fixture(scope="module")
def plan():
    return plan_bank(EXAMPLE1)


def test_identity_bank_splits_phases(plan, rng):
    x = rng.standard_normal(50)
    sb = analyze(PolyphaseFIR.identity(10), plan, x)
    phases = np.concatenate(sb.phases)
    assert np.array_equal(phases, x.reshape(-1, 10).T)
    assert [p.shape[0] for p in sb.phases] == [4, 2, 4]


def test_delta_lands_in_one_phase(plan):
    x = np.zeros(30)
    x[13] = 1.0
    sb = analyze(PolyphaseFIR.identity(10), plan, x)
    nz = [(n, r, t) for n, p in enumerate(sb.phases) for r, t in zip(*np.nonzero(p))]
    assert nz == [(0, 3, 1)]


def test_zero_padding_reported(plan):
    sb = analyze(PolyphaseFIR.identity(10), plan, np.ones(23))
    assert (sb.input_length, sb.padded_length) == (23, 30)


def test_identity_round_trip(plan, rng):
    x = rng.standard_normal(40)
    y = synthesize_signal(PolyphaseFIR.identity(10), plan, analyze(PolyphaseFIR.identity(10), plan, x))
    assert np.array_equal(y.samples, x)


def test_perfect_reconstruction(plan, rng):
    H = synthesize(ThetaVector.random(10, 7, rng))
    x = rng.standard_normal(4000)
    y = synthesize_signal(H, plan, analyze(H, plan, x)).samples
    assert y.size == 4000 + 70
    assert np.abs(y[70:] - x).max() < 1e-9
    assert np.abs(y[:70]).max() < 1e-12


def test_energy_conservation(plan, rng):
    H = synthesize(ThetaVector.random(10, 7, rng))
    x = rng.standard_normal(1000)
    assert analyze(H, plan, x).energy() == pytest.approx(np.sum(x**2), rel=1e-9)


def test_zero_subbands(plan):
    H = synthesize(ThetaVector.random(10, 2, np.random.default_rng(0)))
    sb = SubbandSet(tuple(np.zeros((c, 6)) for c in plan.row_counts), 40, 40)
    assert not synthesize_signal(H, plan, sb).samples.any()


def test_shape_mismatch(plan):
    H = PolyphaseFIR.identity(10)
    with pytest.raises(ValueError):
        synthesize_signal(H, plan, SubbandSet((np.zeros((4, 3)), np.zeros((2, 3))), 30, 30))
    with pytest.raises(ValueError):
        analyze(PolyphaseFIR.identity(9), plan, np.ones(10))


def test_shift_invariance(plan, rng):
    x = rng.standard_normal(300)
    assert shift_invariance_check(PolyphaseFIR.identity(10), plan, x, 0) == 0.0
    H = synthesize(ThetaVector.random(10, 5, rng))
    for n in range(3):
        assert shift_invariance_check(H, plan, x, n) < 1e-10
    # a corrupted bank still commutes with block shifts; only reconstruction breaks
    C = np.array(H.coeffs)
    C[2, 3, 4] += 0.5
    bad = PolyphaseFIR(C)
    assert shift_invariance_check(bad, plan, x, 1) < 1e-10
    y = synthesize_signal(bad, plan, analyze(bad, plan, x)).samples
    assert np.abs(y[50:350] - x).max() > 1e-3


def test_signal_validation():
    with pytest.raises(ValueError):
        SignalBuffer(np.array([]))
    with pytest.raises(ValueError):
        SignalBuffer(np.array([1.0, np.nan]))


@pytest.mark.parametrize("fmt", ["csv", "f64"])
def test_signal_io_round_trip(tmp_path, rng, fmt):
    x = rng.standard_normal(37)
    write_signal(tmp_path / f"x.{fmt}", x, fmt)
    assert np.array_equal(read_signal(tmp_path / f"x.{fmt}", fmt).samples, x)


def test_tone_concentrates_in_top_channel(plan, example1_design):
    theta, _, _ = example1_design
    H = synthesize(theta)
    x = np.cos(0.7 * np.pi * np.arange(4000))
    e = np.array([np.sum(p**2) for p in analyze(H, plan, x).phases])
    assert e[2] / e.sum() >= 0.99
