import io
import random
from fractions import Fraction

import mpmath as mp
import pytest

import oracles
from analytic_pi import zeros
from analytic_pi.errors import (AccuracyViolation, CoverageGap, DomainError, FormatError,
                                InconsistentCount, MonotonicityViolation)
from analytic_pi.interval import RealInterval
from analytic_pi.mellin import MellinContext
from analytic_pi.zeros import TruncationBudget

HEAD = "# zeta-zeros v1 abs_err=1e-9 rh_height=30\n"


def test_load_three():
    t = zeros.load_zeros(HEAD + "14.134725142\n21.022039639\n25.010857580\n")
    assert t.count == 3 and t.max_height == Fraction("25.010857580")
    with mp.workdps(30):
        for rec, k in zip(t, (1, 2, 3)):
            assert rec.ordinate.contains(mp.zetazero(k).imag)


def test_load_errors():
    with pytest.raises(MonotonicityViolation):
        zeros.load_zeros(HEAD + "21.022039639\n14.134725142\n")
    with pytest.raises(MonotonicityViolation):
        zeros.load_zeros(HEAD + "14.134725142\n14.134725142\n")
    with pytest.raises(AccuracyViolation):
        zeros.load_zeros(HEAD + "14.1347\n")
    with pytest.raises(FormatError):
        zeros.load_zeros("14.134725142\n")
    with pytest.raises(FormatError):
        zeros.load_zeros(HEAD + "fourteen\n")
    with pytest.raises(AccuracyViolation):
        zeros.load_zeros("# zeta-zeros v1 abs_err=0 rh_height=1\n")


def test_empty_file():
    t = zeros.load_zeros(io.StringIO(""))
    assert t.count == 0 and t.max_height == 0


def test_round_trips(zero_table, tmp_path):
    text = zeros.store_zeros(zero_table)
    assert zeros.store_zeros(zeros.load_zeros(text)) == text
    blob = zeros.store_zeros_binary(zero_table)
    back = zeros.load_zeros(blob)
    assert zeros.store_zeros_binary(back) == blob
    assert zeros.store_zeros(zeros.load_zeros(zeros.store_zeros(back))) == zeros.store_zeros(back)
    # fixed-point rounding is covered by the widened header accuracy
    for a, b in zip(zero_table, back):
        assert b.ordinate.contains(a.center)
    p = tmp_path / "z.bin"
    zeros.store_zeros_binary(zero_table, str(p))
    assert zeros.load_zeros(str(p)).count == zero_table.count


def test_binary_truncated(zero_table):
    blob = zeros.store_zeros_binary(zero_table)
    with pytest.raises(FormatError):
        zeros.load_zeros(blob[:-5])


def test_table_against_mpmath(zero_table):
    with mp.workdps(30):
        for k in (1, 2, 10, 500, 2000):
            assert zero_table.records[k - 1].ordinate.contains(mp.zetazero(k).imag)


def test_nt_bound_examples():
    lo, hi = zeros.nt_bound(100)
    assert lo.hi <= 29 <= hi.lo
    lo, hi = zeros.nt_bound(1000)
    assert lo.hi <= 649 <= hi.lo
    widths = [float(zeros.nt_bound(t)[1].mid - zeros.nt_bound(t)[0].mid) for t in (10, 100, 1000, 10**4)]
    assert widths == sorted(widths)
    q = 0.137 * mp.log(100) + 0.443 * mp.log(mp.log(100)) + 1.588
    assert abs(widths[1] - 2 * float(q)) < 1e-12
    with pytest.raises(DomainError):
        zeros.nt_bound(1)


def test_nt_bound_contains_table_counts(zero_table):
    rng = random.Random(6)
    top = float(zero_table.max_height)
    for _ in range(1000):
        t = Fraction(rng.uniform(2, top)).limit_denominator(10**6)
        n = zero_table.count_below(t)
        lo, hi = zeros.nt_bound(RealInterval(t))
        assert lo.lo <= n <= hi.hi


def test_alpha_for():
    a = zeros.alpha_for(1000)
    assert 1 < a <= 2
    rng = random.Random(1)
    for _ in range(1000):
        t = 1000 * 10 ** (rng.random() * 12)
        assert mp.power(t, a) >= zeros.nt_bound(RealInterval(Fraction(t)))[1].hi
    alphas = [zeros.alpha_for(T) for T in (10, 100, 1000, 10**4, 10**6)]
    assert alphas == sorted(alphas, reverse=True)
    with pytest.raises(DomainError):
        zeros.alpha_for(1)


def _e1_formula(x, lam, T, alpha, N):
    x, lam, T, alpha = mp.mpf(x), oracles.mpq(lam), mp.mpf(T), mp.mpf(alpha)
    g = mp.exp(lam**2 * (1 - T**2) / 2)
    k = mp.sqrt(x) / (T * mp.log(x)) + 1 / (lam**2 * T**2 * x)
    return 2 * g * k * ((lam**2 * T**2 + 2) / (lam**2 * T ** (2 - alpha)) - N)


def _e2_formula(x, lam, T, alpha, N):
    x, lam, T, alpha = mp.mpf(x), oracles.mpq(lam), mp.mpf(T), mp.mpf(alpha)
    g = mp.exp(lam**2 * (1 - T**2) / 2)
    k = (x + 1) / (T * mp.log(x)) + 2 / (lam**2 * T**2 * x)
    return g * k * ((lam**2 * T**2 + 2) / (lam**2 * T ** (2 - alpha)) - N)


def test_e1_e2_formulas():
    x, lam = 10**8, Fraction(2, 10**6)
    ctx = MellinContext(x, lam)
    T = 2000
    b = TruncationBudget(T, T)
    n = 1517
    e1 = zeros.e1_bound(b, n, ctx)
    e2 = zeros.e2_bound(b, n, ctx)
    r1 = _e1_formula(x, lam, T, b.alpha_T1, n)
    r2 = _e2_formula(x, lam, T, b.alpha_T2, n)
    assert e1.hi >= r1 and float(e1.hi) / float(r1) - 1 < 1e-25
    assert e2.hi >= r2 and float(e2.hi) / float(r2) - 1 < 1e-25
    # E2 carries x + 1 where E1 carries 2√x, up to the small 1/(λ²T²x) parts
    assert abs(float(e2.hi / e1.hi) - (x + 1) / (2 * x**0.5)) / ((x + 1) / (2 * x**0.5)) < 1e-2


def test_e1_decreases_with_height():
    ctx = MellinContext(10**6, Fraction(5, 1000))
    vals = [zeros.e1_bound(TruncationBudget(T, T), None, ctx).hi for T in (500, 1000, 2000, 4000)]
    assert vals == sorted(vals, reverse=True)
    vals = [zeros.e2_bound(TruncationBudget(T, T), None, ctx).hi for T in (500, 1000, 2000, 4000)]
    assert vals == sorted(vals, reverse=True)


def test_inconsistent_count():
    ctx = MellinContext(10**6, Fraction(5, 1000))
    with pytest.raises(InconsistentCount):
        zeros.e1_bound(TruncationBudget(1000, 1000), 600, ctx)
    with pytest.raises(InconsistentCount):
        zeros.check_count(100, 35)
    zeros.check_count(100, 29)


def test_e1_dominates_table_tail(zero_table):
    rng = random.Random(12)
    x, lam = 10**6, Fraction(1, 1000)
    ctx = MellinContext(x, lam)
    T2 = float(zero_table.rh_height_value)
    for _ in range(5):
        T1 = rng.uniform(100, 2000)
        n = zero_table.count_below(Fraction(T1))
        e1 = zeros.e1_bound(TruncationBudget(T1, T2), n, ctx)
        brute = sum(2 * mp.mpf(zeros.b_bound(Fraction(1, 2), r.center, ctx).hi)
                    for r in zero_table if T1 <= r.center <= T2)
        assert brute <= e1.hi


def test_sum_re_phihat_small(zero_table):
    ctx = MellinContext(10**6, Fraction(5, 1000))
    b = TruncationBudget(2, 2)
    assert 0 in zeros.sum_re_phihat([], b, ctx, 100)
    recs = zeros.zeros_up_to(zero_table, 100)
    assert len(recs) == 29
    b = TruncationBudget(100, 2515)
    T = 3000
    total = zeros.sum_re_phihat(recs, b, ctx, T)
    halves = zeros.sum_re_phihat(recs[:15], b, ctx, T) + zeros.sum_re_phihat(recs[15:], b, ctx, T)
    shuffled = list(recs)
    random.Random(0).shuffle(shuffled)
    assert total.overlaps(halves)
    assert total.overlaps(zeros.sum_re_phihat(shuffled, b, ctx, T))
    ref = 2 * mp.fsum(oracles.re_Phihat_contour(10**6, Fraction(5, 1000), Fraction(1, 2), r.center) for r in recs)
    assert total.contains(ref)


def test_coverage_gap(zero_table):
    with pytest.raises(CoverageGap):
        zeros.zeros_up_to(zero_table, 5000)
