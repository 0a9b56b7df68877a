"""Independent reference computations used by the tests.

Nothing here imports the package's numerics; everything goes through mpmath
or plain integer arithmetic so that a shared bug cannot hide on both sides.
"""

import math
from fractions import Fraction

import mpmath as mp


def mpq(v):
    """Exact Fraction/int/str -> mpf at the current mpmath precision."""
    if isinstance(v, mp.mpf):
        return v
    v = Fraction(v)
    return mp.mpf(v.numerator) / v.denominator


def simple_sieve(n):
    """Plain bytearray sieve of Eratosthenes; list of primes <= n."""
    if n < 2:
        return []
    flags = bytearray([1]) * (n + 1)
    flags[0] = flags[1] = 0
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p::p] = bytearray(len(range(p * p, n + 1, p)))
    return [i for i in range(n + 1) if flags[i]]


def prime_count(n):
    return len(simple_sieve(n))


def pi_star(x):
    """Σ_{p^m ≤ x} 1/m with half weight at p^m = x, as an exact Fraction."""
    total = Fraction(0)
    for p in simple_sieve(x):
        v, m = p, 1
        while v <= x:
            total += Fraction(1, m) / (2 if v == x else 1)
            v *= p
            m += 1
    return total


def phi(t, x, lam):
    lam = mpq(lam)
    return mp.erfc(mp.log(mpq(t) / mpq(x)) / (mp.sqrt(2) * lam)) / 2


def phihat(s, x, lam):
    lam = mpq(lam)
    return mp.exp(s * mp.log(mpq(x)) + lam**2 * s * s / 2) / s


def re_Phihat_direct(x, lam, sigma, t, length=80, step=1):
    """Re Φ̂(σ+it) = ∫_t^∞ Im φ̂(σ+iu) du by plain quadrature up to t + length."""
    sigma, t = mpq(sigma), mpq(t)
    f = lambda u: phihat(mp.mpc(sigma, u), x, lam).imag
    return mp.quad(f, [t + k * step for k in range(int(length / step) + 1)])


def re_Phihat_contour(x, lam, sigma, t, pieces=16):
    """Re Φ̂(σ+it) along the steepest-descent path of s log x + λ²s²/2.

    The vertical ray from σ+it is deformed onto the curve
    Im(s log x + λ²s²/2) = const, parametrised by a = Re s running down from
    σ, where the integrand is positive-real-phase and decays like a Gaussian.
    No pole is crossed as long as t > 0.
    """
    L = mp.log(mpq(x))
    l2 = mpq(lam) ** 2
    sigma, t = mpq(sigma), mpq(t)
    C = t * (L + l2 * sigma)

    def f(a):
        d = L + l2 * a
        s = mp.mpc(a, C / d)
        return mp.exp(s * L + l2 * s * s / 2) / s * mp.mpc(1, -C * l2 / d**2)

    width = 120 / L
    a_min = -L / l2
    if sigma - width <= a_min:
        width = (sigma - a_min) * (1 - mp.mpf(1) / 64)
    pts = [sigma - width + width * k / pieces for k in range(pieces + 1)]
    # the path runs from σ downward; Re Φ̂ = −Re ∫ φ̂ ds along it
    return mp.quad(f, pts).real


def hardy_f(t, t0, h):
    """f(t) = |Γ(¼+iT/2)| e^{πT/4} e^{−t²/2h²} Z(T), T = t + t0."""
    T = mpq(t0) + mpq(t)
    return abs(mp.gamma(mp.mpc(0.25, T / 2))) * mp.exp(mp.pi * T / 4) * mp.exp(-mpq(t) ** 2 / (2 * mpq(h) ** 2)) * mp.siegelz(T)


def g_value(t, t0, h, k=0):
    """g(t; k) = Γ((½+i(t+t0))/2) e^{π(t+t0)/4 − t²/2h²} (−2πit)^k."""
    t = mpq(t)
    T = mpq(t0) + t
    g = mp.gamma(mp.mpc(0.25, T / 2)) * mp.exp(mp.pi * T / 4 - t**2 / (2 * mpq(h) ** 2))
    return g * (mp.mpc(0, -2 * mp.pi * t)) ** k


def zeta_em(s, M=None, J=40):
    """ζ(s) by Euler-Maclaurin summation with M head terms and J Bernoulli terms."""
    s = mp.mpc(s)
    if M is None:
        M = int(abs(s.imag) / 2) + 20
    head = mp.fsum(mp.power(n, -s) for n in range(1, M))
    tail = mp.power(M, 1 - s) / (s - 1) + mp.power(M, -s) / 2
    rising = s
    term_pow = mp.power(M, -s - 1)
    for j in range(1, J + 1):
        tail += mp.bernoulli(2 * j) / mp.factorial(2 * j) * rising * term_pow
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        term_pow /= M * M
    return head + tail


def hardy_f_em(t, t0, h):
    """hardy_f with Z(T) = Re(e^{iθ(T)} ζ(½+iT)) from the Euler-Maclaurin sum."""
    T = mpq(t0) + mpq(t)
    Z = (mp.expj(mp.siegeltheta(T)) * zeta_em(mp.mpc(0.5, T))).real
    return abs(mp.gamma(mp.mpc(0.25, T / 2))) * mp.exp(mp.pi * T / 4) * mp.exp(-mpq(t) ** 2 / (2 * mpq(h) ** 2)) * Z
