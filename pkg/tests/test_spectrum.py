from fractions import Fraction

import numpy as np

from rfb.spectrum import SpectrumMask

F = Fraction


def test_wrap_and_merge():
    m = SpectrumMask.from_intervals([(F(4, 5), F(6, 5)), (F(-1, 2), F(-1, 4)), (F(-3, 10), F(0))])
    assert m.intervals == ((F(-1), F(-4, 5)), (F(-1, 2), F(0)), (F(4, 5), F(1)))
    assert m.measure() == F(9, 10)


def test_complement_round_trip():
    m = SpectrumMask.from_intervals([(F(-1, 3), F(1, 5))])
    assert m.complement().complement() == m
    assert m.complement().measure() + m.measure() == 2
    assert SpectrumMask().complement() == SpectrumMask.full()


def test_dilate_wraps_at_pi():
    m = SpectrumMask.from_intervals([(F(4, 5), F(1)), (F(-1), F(-4, 5))])
    d = m.dilate(F(1, 20))
    assert d.complement().intervals == ((F(-3, 4), F(3, 4)),)


def test_contains_radians():
    m = SpectrumMask.from_intervals([(F(0), F(1, 2))])
    hits = m.contains(np.array([0.0, 0.25 * np.pi, 0.5 * np.pi, -0.1, 2 * np.pi + 0.1]))
    assert hits.tolist() == [True, True, False, False, True]


def test_inner_points_skip_edges_but_not_the_seam():
    w = -np.pi + 2 * np.pi * np.arange(40) / 40  # step pi/20
    stop = SpectrumMask.from_intervals([(F(-1, 2), F(1, 2))])
    pts = stop.inner_points(w)
    assert not pts[np.isclose(w, -np.pi / 2)].any()
    assert pts[np.isclose(w, 0)].all()
    seam = SpectrumMask.from_intervals([(F(3, 4), F(5, 4))])
    assert seam.inner_points(np.array([-np.pi]))[0]


def test_list_round_trip():
    m = SpectrumMask.from_intervals([(F(-2, 9), F(1, 9)), (F(5, 9), F(7, 9))])
    assert SpectrumMask.from_list(m.to_list()) == m
    assert str(SpectrumMask()) == "{}"
