import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nssapprox.errors import InvalidArgument, InvalidSequence, OutOfRange
from nssapprox.sequences import (GeometricSequence, PowerLogSequence, PowerSequence,
                                 TableSequence, block_points, check_sandwich, dyadic_points,
                                 estimate_decay_low, estimate_decay_up, local_slopes,
                                 partial_power_sum, power, remark_block_sequence,
                                 sequence_from_descriptor)

H20 = 1 << 20


def test_power_decay_low_dyadic():
    assert estimate_decay_low(power(2), H20) == pytest.approx(2.0, abs=0.05)


def test_power_decay_up_is_exact():
    assert abs(estimate_decay_up(power(2), H20) - 2.0) <= 1e-12


def test_power_log_low_estimate_in_window():
    x = PowerLogSequence(exponent=2.0, log_power=1.0)
    est = estimate_decay_low(x, H20, [H20])
    assert 1.8 <= est <= 2.0


def test_power_log_dyadic_from_two_dips_below_window():
    # the slope 2 - ln ln(n+1) / ln n bottoms out near n = 16
    x = PowerLogSequence(exponent=2.0, log_power=1.0)
    assert estimate_decay_low(x, H20) < 1.8


def test_scaled_power_up_estimate():
    x = power(3, scale=0.5)
    est = estimate_decay_up(x, H20, dyadic_points(H20, start=1 << 10))
    assert 3.0 <= est <= 3.2
    assert est == pytest.approx(3 + math.log(2) / math.log(1 << 10), rel=1e-12)


def test_block_low_at_pre_jump_points():
    y = remark_block_sequence()
    pts = block_points("pre_jump")
    assert pts == [4, 32, 2 ** 33]
    slopes = local_slopes(y, pts[-1], pts)
    assert estimate_decay_low(y, pts[-1], pts) <= 1.1
    assert all(s >= 1.0 - 1e-12 for s in slopes.values())


def test_block_up_at_block_starts():
    y = remark_block_sequence()
    pts = block_points("block_start")
    assert pts == [2, 5, 33, 2 ** 33 + 1]
    assert estimate_decay_up(y, pts[-1], pts) >= 10


def test_block_values():
    y = remark_block_sequence()
    assert y.value(1) == 1.0
    assert y.value(4) == 0.25
    assert y.value(33) == 2.0 ** -33
    assert y.value(32) == 2.0 ** -5
    assert y.log_value(2 ** 33 + 1) == pytest.approx(-(2 ** 33 + 1) * math.log(2))


def test_block_out_of_range():
    y = remark_block_sequence()
    with pytest.raises(OutOfRange):
        y.value(2 ** 33 + 1)          # underflows
    with pytest.raises(OutOfRange):
        y.log_value(1 << (2 ** 33 + 2))


def test_block_constant_on_blocks_and_monotone():
    y = remark_block_sequence()
    b = y.boundaries()
    for lo, hi in zip(b[1:4], b[2:5]):
        vals = {y.value(n) for n in range(max(lo, 1), min(hi, 200))}
        assert len(vals) == 1
    assert y.check_monotone(4096)


def test_empty_sample_rejected():
    with pytest.raises(InvalidArgument):
        estimate_decay_low(power(2), 100, [])


def test_sample_outside_range_rejected():
    with pytest.raises(InvalidArgument):
        estimate_decay_up(power(2), 100, [1, 4])


def test_non_monotone_sample_rejected():
    t = TableSequence(table=(1.0, 0.5, 0.25, 0.125))
    with pytest.raises(InvalidSequence):
        estimate_decay_low(t, 8, [2, 3, 4, 5])     # zero beyond the table


def test_partial_power_sum_small():
    assert partial_power_sum(power(2), 1.0, 3) == pytest.approx(float(Fraction(49, 36)),
                                                                rel=1e-15)


def test_partial_power_sum_harmonic():
    h = partial_power_sum(power(2), 2.0, 10 ** 6)
    exact = math.log(10 ** 6) + 0.5772156649015329 + 1 / (2e6) - 1 / (12e12)
    assert h == pytest.approx(exact, abs=1e-9)
    assert h == pytest.approx(14.39, abs=0.01)


def test_partial_power_sum_block_direct():
    y = remark_block_sequence()
    direct = math.fsum(y.value(n) ** 2 for n in range(1, 33))
    assert partial_power_sum(y, 0.5, 32) == direct
    # blocks [1,2), [2,5), [5,32]: 1 + 3/16 + 28/1024
    assert direct == 1 + 3 / 16 + 28 / 1024


def test_sandwich_power():
    r = check_sandwich(power(2), 2.5, 1.5, 1024)
    assert r.c_low == pytest.approx(1.0) and r.argmin == 1
    assert r.c_up == pytest.approx(1.0) and r.argmax == 1
    assert r.holds


def test_sandwich_rejects_equal_exponents():
    with pytest.raises(InvalidArgument):
        check_sandwich(power(2), 2, 2, 1024)


def test_sandwich_block_matches_scan():
    y = remark_block_sequence()
    r = check_sandwich(y, 1.5, 0.5, 32)
    a = [y.value(n) * n ** 1.5 for n in range(1, 33)]
    b = [y.value(n) * n ** 0.5 for n in range(1, 33)]
    assert r.c_low == pytest.approx(min(a), rel=1e-12)
    assert r.c_up == pytest.approx(max(b), rel=1e-12)
    assert r.argmin in y.boundaries() or r.argmin == 1
    assert r.argmax + 1 in y.boundaries()


def test_sandwich_horizon_extension_monotone():
    y = remark_block_sequence()
    r1, r2 = check_sandwich(y, 1.5, 0.5, 16), check_sandwich(y, 1.5, 0.5, 64)
    assert r2.c_low <= r1.c_low and r2.c_up >= r1.c_up


def test_descriptor_roundtrip():
    for seq in (power(2.5, 0.5), PowerLogSequence(exponent=2.0, log_power=1.0),
                GeometricSequence(ratio=0.25), TableSequence(table=(0.5, 0.25)),
                remark_block_sequence(), power(3).powered(0.5)):
        again = sequence_from_descriptor(seq.descriptor())
        ns = np.arange(1, 40)
        assert np.array_equal(again.log_values(ns), seq.log_values(ns))


def test_power_log_must_be_monotone():
    with pytest.raises(InvalidSequence):
        PowerLogSequence(exponent=1.0, log_power=2.0)


def test_evaluation_is_deterministic():
    x = PowerLogSequence(exponent=2.0, log_power=1.0)
    assert [x.value(n) for n in range(1, 100)] == [x.value(n) for n in range(1, 100)]


def test_power_tail_bracket():
    lo, hi = power(2).tail_power_sum(10, 1.0)
    assert lo == pytest.approx(1 / 11) and hi == pytest.approx(1 / 10)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.6, 5.0), c=st.floats(0.05, 1.0), start=st.integers(1, 12))
def test_low_le_up_power_fixtures(a, c, start):
    x = power(a, scale=c)
    pts = dyadic_points(1 << 16, start=1 << start)
    lo, up = estimate_decay_low(x, 1 << 16, pts), estimate_decay_up(x, 1 << 16, pts)
    assert lo <= up
    for n, s in local_slopes(x, 1 << 16, pts).items():
        assert s == pytest.approx(a + math.log(1 / c) / math.log(n), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(vals=st.lists(st.floats(1e-6, 1.0), min_size=3, max_size=30))
def test_low_le_up_tables(vals):
    t = TableSequence(table=tuple(sorted(vals, reverse=True)))
    h = len(vals)
    assert estimate_decay_low(t, h, range(2, h + 1)) <= estimate_decay_up(t, h, range(2, h + 1))


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.5, 4.0), alpha=st.floats(0.2, 3.0), n=st.integers(1, 300))
def test_partial_power_sum_monotone(a, alpha, n):
    x = power(a)
    s = partial_power_sum(x, alpha, n)
    assert partial_power_sum(x, alpha, n + 1) >= s
    # x <= 1, so x**(1/alpha) grows with alpha
    assert partial_power_sum(x, alpha * 1.5, n) >= s
