import math
import random
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from analytic_pi import mellin
from analytic_pi.errors import DomainError, PoleProximity, RadiusTooLarge
from analytic_pi.interval import ComplexInterval, RealInterval
from analytic_pi.mellin import MellinContext

CTX_100 = MellinContext(100, Fraction(3, 10))


def test_context_checks():
    with pytest.raises(DomainError):
        MellinContext(100, 0)
    with pytest.raises(DomainError):
        MellinContext(1, Fraction(1, 10))


def test_phi_examples():
    ctx = MellinContext(100, Fraction(1, 10))
    assert Fraction(1, 2) in mellin.phi(RealInterval(100), ctx)
    ref = oracles.phi(110, 100, Fraction(1, 10))
    assert mellin.phi(RealInterval(110), ctx).contains(ref)
    v = mellin.phi(RealInterval(Fraction(1, 10)), ctx)
    assert v.subset(RealInterval(Fraction(999, 1000), 1))
    with pytest.raises(DomainError):
        mellin.phi(RealInterval(0), ctx)


@given(st.integers(1, 10**6), st.integers(1, 10**6))
def test_phi_in_unit_and_nonincreasing(a, b):
    ctx = MellinContext(1000, Fraction(1, 8))
    a, b = sorted((a, b))
    pa = mellin.phi(RealInterval(a), ctx)
    pb = mellin.phi(RealInterval(b), ctx)
    assert pa.subset(RealInterval(0, 1)) and pb.subset(RealInterval(0, 1))
    assert pa.hi >= pb.lo


def test_phihat_examples():
    ctx = MellinContext(10, Fraction(1, 10))
    v = mellin.phihat(ComplexInterval(2), ctx)
    assert v.contains(50 * mp.exp(mp.mpf("0.02")))
    s = ComplexInterval(2, 3)
    assert mellin.phihat(s.conj(), ctx) == mellin.phihat(s, ctx).conj()
    with pytest.raises(PoleProximity):
        mellin.phihat(ComplexInterval(RealInterval(-1, 1), RealInterval(-1, 1)), ctx)


def test_phihat_unit_x():
    # the context needs x > 1, so take x just above 1: φ̂(1) = x exp(λ²/2)
    x = 1 + Fraction(1, 2**60)
    ctx = MellinContext(x, Fraction(1, 4))
    v = mellin.phihat(ComplexInterval(1), ctx)
    assert v.contains(oracles.mpq(x) * mp.exp(mp.mpf(1) / 32))
    assert abs(float(v.re.mid) - math.exp(1 / 32)) < 1e-15


def test_phihat_vs_mpmath():
    rng = random.Random(5)
    for _ in range(50):
        x = rng.randint(2, 10**9)
        lam = Fraction(rng.randint(1, 1000), 2**12)
        s = (Fraction(rng.randint(-200, 200), 64), Fraction(rng.randint(1, 10**5), 64))
        ctx = MellinContext(x, lam)
        ref = oracles.phihat(mp.mpc(oracles.mpq(s[0]), oracles.mpq(s[1])), x, lam)
        assert mellin.phihat(ComplexInterval(*s), ctx).contains(ref)


def test_shift_factorization():
    ctx = MellinContext(100, Fraction(1, 5))
    s0 = ComplexInterval(Fraction(1, 2))
    a = mellin.shift_factorization(s0, RealInterval(0), ctx)
    b = mellin.phihat(s0, ctx)
    assert a.overlaps(b) and a.re.width <= 8 * b.re.width + Fraction(1, 2**100)
    a = mellin.shift_factorization(s0, RealInterval(1), ctx)
    assert a.overlaps(mellin.phihat(ComplexInterval(Fraction(1, 2), 1), ctx))
    s0 = ComplexInterval(2)
    up = mellin.shift_factorization(s0, RealInterval(1), ctx)
    down = mellin.shift_factorization(s0.conj(), RealInterval(-1), ctx)
    assert up.conj().overlaps(down)


@settings(max_examples=50)
@given(st.integers(-64, 64), st.integers(0, 4000), st.integers(-4000, 4000))
def test_shift_matches_direct(sr, t, h):
    ctx = MellinContext(10**6, Fraction(1, 64))
    s0 = ComplexInterval(Fraction(sr, 16) if sr else Fraction(1, 2), Fraction(t, 4))
    hh = Fraction(h, 16)
    shifted = mellin.shift_factorization(s0, RealInterval(hh), ctx)
    direct = mellin.phihat(ComplexInterval(s0.re, Fraction(t, 4) + hh), ctx)
    assert shifted.overlaps(direct)


def test_ea_eb_examples():
    assert mellin.ea_bound(2, Fraction(1, 2)) == RealInterval(Fraction(1, 8))
    assert mellin.eb_bound(3, Fraction(1, 2)) == RealInterval(Fraction(1, 4))
    with pytest.raises(RadiusTooLarge):
        mellin.ea_bound(4, 1)
    with pytest.raises(RadiusTooLarge):
        mellin.eb_bound(4, 1)


def test_step_polynomial_shape():
    poly = mellin.build_step_polynomial(ComplexInterval(Fraction(1, 2), 10), Fraction(1, 2), 4, CTX_100)
    assert poly.degree == 8
    assert 1 in poly.coeffs[0] and poly.coeffs[0].re.width == 0
    assert poly.remainder.lo >= 0
    with pytest.raises(RadiusTooLarge):
        mellin.build_step_polynomial(ComplexInterval(Fraction(1, 2), 10), 4, 4, CTX_100)
    with pytest.raises(RadiusTooLarge):
        mellin.build_step_polynomial(ComplexInterval(Fraction(1, 2), 1), 2, 4, CTX_100)
    with pytest.raises(ValueError):
        mellin.build_step_polynomial(ComplexInterval(Fraction(1, 2), 10), Fraction(1, 2), 3, CTX_100)


def test_step_remainder_dominates_brute_force():
    rng = random.Random(17)
    for _ in range(100):
        N = rng.choice([2, 4, 6, 8, 12, 16])
        lam = Fraction(rng.randint(1, 500), 1000)
        t = Fraction(rng.randint(2, 4000), 8)
        s0 = ComplexInterval(Fraction(1, 2), t)
        rmax = min(0.99 / float(lam), 0.99 * float(t))
        r = Fraction(rmax * rng.random()).limit_denominator(2**20) or Fraction(1, 2**20)
        ctx = MellinContext(10**6, lam)
        poly = mellin.build_step_polynomial(s0, r, N, ctx)
        h = r * Fraction(rng.randint(-1000, 1000), 1000)
        with mp.workprec(4 * 128):
            hm, l, s = oracles.mpq(h), oracles.mpq(lam), mp.mpc(0.5, oracles.mpq(t))
            exact = mp.exp(-(l * hm) ** 2 / 2) / (1 + 1j * hm / s)
            approx = sum(mp.mpc(float(c.re.mid), float(c.im.mid)) * hm**n for n, c in enumerate(poly.coeffs))
            # the coefficients are rounded to double above; allow that rounding
            slack = sum(abs(hm) ** n * float(c.mag()) for n, c in enumerate(poly.coeffs)) * 2**-50
            assert abs(approx - exact) <= float(poly.remainder.hi) + slack


def test_integrate_step_zero_and_quadrature():
    s0 = ComplexInterval(Fraction(1, 2))
    poly = mellin.build_step_polynomial(s0, Fraction(1, 10), 16, CTX_100)
    assert 0 in mellin.integrate_step(poly, 0, 0, CTX_100)
    got = mellin.integrate_step(poly, 0, Fraction(1, 10), CTX_100)
    ref = mp.quad(lambda h: 1j * oracles.phihat(mp.mpc(0.5, h), 100, Fraction(3, 10)), [0, mp.mpf(1) / 10])
    assert got.contains(ref)
    with pytest.raises(RadiusTooLarge):
        mellin.integrate_step(poly, 0, Fraction(1, 5), CTX_100)


def test_integrate_step_additive():
    s0 = ComplexInterval(Fraction(1, 2), 20)
    poly = mellin.build_step_polynomial(s0, Fraction(1, 5), 16, CTX_100)
    whole = mellin.integrate_step(poly, 0, Fraction(1, 5), CTX_100)
    parts = mellin.integrate_step(poly, 0, Fraction(1, 10), CTX_100) + \
        mellin.integrate_step(poly, Fraction(1, 10), Fraction(1, 5), CTX_100)
    assert whole.overlaps(parts)


def test_b_bound_formula():
    ctx = MellinContext(10**6, Fraction(1, 100))
    b = mellin.b_bound(Fraction(1, 2), 100, ctx)
    with mp.workdps(40):
        l, T, x = mp.mpf(1) / 100, mp.mpf(100), mp.mpf(10**6)
        ref = mp.exp(l**2 * (1 - T**2) / 2) * (mp.sqrt(x) / (T * mp.log(x)) + 1 / (l**2 * T**2 * x))
    assert b.lo == 0 and abs(float(b.hi) / float(ref) - 1) < 1e-30
    assert b.hi >= ref
    assert mellin.b_bound(Fraction(1, 2), 300, ctx).hi < mellin.b_bound(Fraction(1, 2), 200, ctx).hi


def test_b_bound_dominates_quadrature():
    rng = random.Random(2)
    ctx = MellinContext(10**6, Fraction(5, 1000))
    for _ in range(20):
        T = Fraction(rng.randint(10, 3000))
        ref = oracles.re_Phihat_contour(10**6, Fraction(5, 1000), Fraction(1, 2), T)
        assert abs(ref) <= mellin.b_bound(Fraction(1, 2), T, ctx).hi


def test_minus_one_line():
    ctx = MellinContext(10, 1)
    b = mellin.minus_one_line_bound(ctx)
    ref = mp.exp(0.5) * (5 * mp.sqrt(2 * mp.pi) + 2) / (20 * mp.pi)
    assert b.lo == 0 and b.hi >= ref and float(b.hi) - float(ref) < 1e-30
    b2 = mellin.minus_one_line_bound(MellinContext(20, 1))
    assert abs(float(b2.hi) * 2 - float(b.hi)) < 1e-30


def test_line_at_anchor_is_the_bound():
    T = 60
    B = mellin.b_bound(Fraction(1, 2), T, CTX_100)
    v = mellin.re_phihat_line(Fraction(1, 2), [RealInterval(T)], CTX_100, T)[0]
    assert v.subset(RealInterval(-B.hi, B.hi))


def test_line_first_zero():
    t = Fraction("14.134725")
    T = mellin.anchor_height(Fraction(1, 2), CTX_100, Fraction(1, 10**30), t_min=20)
    v = mellin.re_phihat_line(Fraction(1, 2), [RealInterval(t)], CTX_100, T)[0]
    ref = oracles.re_Phihat_direct(100, Fraction(3, 10), Fraction(1, 2), t)
    assert v.contains(ref)
    assert v.width < 1e-20


def test_line_tolerance_and_anchor_consistency():
    hs = [RealInterval(Fraction(k, 3)) for k in range(3, 100, 7)]
    T1 = mellin.anchor_height(Fraction(1, 2), CTX_100, Fraction(1, 10**25), t_min=40)
    a = mellin.re_phihat_line(Fraction(1, 2), hs, CTX_100, T1)
    b = mellin.re_phihat_line(Fraction(1, 2), hs, CTX_100, T1, tol=1e-30)
    c = mellin.re_phihat_line(Fraction(1, 2), hs, CTX_100, 2 * T1)
    for x, y, z in zip(a, b, c):
        assert x.overlaps(y) and x.overlaps(z)


def test_line_against_oracles_x_1e6():
    rng = random.Random(4)
    lam = Fraction(5, 1000)
    ctx = MellinContext(10**6, lam)
    hs = sorted(Fraction(rng.randint(2, 3000 * 2**10), 2**10) for _ in range(8))
    T = mellin.anchor_height(Fraction(1, 2), ctx, Fraction(1, 10**30), t_min=float(hs[-1]) + 1)
    vals = mellin.re_phihat_line(Fraction(1, 2), [RealInterval(h) for h in hs], ctx, T)
    for h, v in zip(hs, vals):
        assert v.contains(oracles.re_Phihat_contour(10**6, lam, Fraction(1, 2), h))


def test_line_interval_heights():
    h = RealInterval(Fraction(14), Fraction(14) + Fraction(1, 10**9))
    T = mellin.anchor_height(Fraction(1, 2), CTX_100, Fraction(1, 10**30), t_min=20)
    v = mellin.re_phihat_line(Fraction(1, 2), [h], CTX_100, T)[0]
    for t in (Fraction(14), Fraction(14) + Fraction(1, 2 * 10**9)):
        assert v.contains(oracles.re_Phihat_direct(100, Fraction(3, 10), Fraction(1, 2), t))


def test_line_bad_heights():
    with pytest.raises(ValueError):
        mellin.re_phihat_line(Fraction(1, 2), [RealInterval(5), RealInterval(3)], CTX_100, 40)
    with pytest.raises(ValueError):
        mellin.re_phihat_line(Fraction(1, 2), [RealInterval(50)], CTX_100, 40)


def test_phihat_at_one():
    T = mellin.anchor_height(1, CTX_100, Fraction(1, 10**30), t_min=10)
    v = mellin.phihat_at_one(CTX_100, T)
    assert isinstance(v, RealInterval)
    ref = oracles.re_Phihat_direct(100, Fraction(3, 10), 1, 0)
    assert v.contains(ref)
    wide = mellin.anchor_height(1, CTX_100, Fraction(1, 10**8), t_min=10)
    a = mellin.phihat_at_one(CTX_100, wide)
    b = mellin.phihat_at_one(CTX_100, 2 * wide)
    assert b.width <= a.width
