import math

import mpmath
import numpy as np
import pytest

from hormander import xlab
from hormander.errors import InvalidInput
from hormander.param import psi_from_phi


def mp_bound(k):
    mpmath.mp.dps = 40
    a = 2 * mpmath.pi * k + mpmath.pi / 2
    b = 2 * mpmath.pi * k + mpmath.pi
    return float(a ** 2 - mpmath.log(1 + b ** 4))


def mp_log_phi(x):
    mpmath.mp.dps = 40
    x = mpmath.mpf(x)
    return float(mpmath.log(mpmath.exp(mpmath.sqrt(x) * mpmath.sin(x ** mpmath.mpf(0.25))) + x))


def test_log_phi_at_peaks():
    for k in (1, 2, 3):
        p = xlab.SequencePair(k)
        assert xlab.appendix_log_phi(p.log_t) >= p.peak_root ** 2
        assert xlab.appendix_log_phi(p.log_t) == pytest.approx(mp_log_phi(p.log_t), rel=1e-12)


def test_log_phi_at_troughs():
    for k in (1, 2, 3):
        p = xlab.SequencePair(k)
        assert xlab.appendix_log_phi(p.log_s) == pytest.approx(math.log1p(p.log_s), rel=1e-13)


def test_log_phi_below_three():
    assert xlab.appendix_log_phi(0.0) == 0.0
    assert xlab.appendix_log_phi(math.log(3) - 1e-12) == 0.0


def test_log_phi_domain():
    with pytest.raises(InvalidInput):
        xlab.appendix_log_phi(-0.5)
    assert np.isfinite(xlab.appendix_log_phi(np.linspace(0, 1e6, 1001))).all()


def test_sequence_order():
    for k in range(1, 20):
        p = xlab.SequencePair(k)
        assert p.log_t < p.log_s
    with pytest.raises(InvalidInput):
        xlab.SequencePair(0)


def test_bound_first():
    assert xlab.ratio_log_lower_bound(1) == pytest.approx(52.711, abs=1e-3)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_bound_matches_high_precision(k):
    assert xlab.ratio_log_lower_bound(k) == pytest.approx(mp_bound(k), abs=1e-9)


def test_bound_second_and_third_values():
    # evaluating the closed forms gives 188.84 and 404.63
    assert xlab.ratio_log_lower_bound(2) == pytest.approx(188.8428015, abs=1e-6)
    assert xlab.ratio_log_lower_bound(3) == pytest.approx(404.6282215, abs=1e-6)


def test_bound_monotone():
    b = [xlab.ratio_log_lower_bound(k) for k in range(1, 12)]
    assert all(q > p for p, q in zip(b, b[1:]))


def test_slow_variation_identity_lambda():
    prof = xlab.slow_variation_profile([1.0], [2.0, 10.0, 1e3])
    assert np.all(prof.deviations == 0)


def test_slow_variation_decreases():
    prof = xlab.slow_variation_profile([1.25, 1.5, 2.0], [1e2, 1e3, 1e4, 1e5])
    m = prof.max_deviation
    assert m[2] < m[0]
    assert np.all(np.diff(m) < 0)
    assert len(list(prof.rows())) == 12


def test_slow_variation_validates():
    with pytest.raises(InvalidInput):
        xlab.slow_variation_profile([3.0], [10.0])
    with pytest.raises(InvalidInput):
        xlab.slow_variation_profile([1.5], [0.5])


def test_demo_rows():
    rows = xlab.non_interpolation_demo(5)
    assert [r.k for r in rows] == [1, 2, 3, 4, 5]
    assert rows[0].witness >= 52.7
    assert all(r.witness >= r.bound - 1e-9 for r in rows)
    assert all(q.witness > p.witness for p, q in zip(rows, rows[1:]))
    assert rows[2].witness >= 404.6


def test_demo_validates():
    with pytest.raises(InvalidInput):
        xlab.non_interpolation_demo(0)


def test_psi_is_phi():
    x = np.concatenate([np.linspace(0, 100, 1001), xlab.sequence_log_points(3)])
    np.testing.assert_array_equal(psi_from_phi(xlab.APPENDIX, 0.0, 1.0).log_eval(x),
                                  xlab.appendix_log_phi(x))


def test_positive_side():
    rep = xlab.interpolation_positive_check(0.5)
    assert rep.passes and -0.5 < rep.sigma0 and rep.sigma1 < 1.0


def test_all_invariants_hold():
    results = xlab.verify_invariants(5)
    assert len(results) == 8
    assert all(r.ok for r in results), [r for r in results if not r.ok]
