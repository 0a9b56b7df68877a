"""Real and complex interval arithmetic with outward rounding.

Endpoints are MPFR floats (through gmpy2).  Every result is computed twice,
once rounded toward -inf for the lower endpoint and once toward +inf for the
upper one, so the true value of any expression over the inputs is enclosed.
The working precision is taken from a context variable and can be changed
with :func:`precision`.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import (
    Ambiguous,
    DivisorContainsZero,
    DomainError,
    NoInteger,
    PoleProximity,
)

DEFAULT_BITS = 128

_BITS = contextvars.ContextVar("analytic_pi_precision", default=DEFAULT_BITS)

_INF = mpfr("inf")
_NINF = mpfr("-inf")
_ZERO = mpfr(0)
_ONE = mpfr(1)


@dataclass(frozen=True)
class Precision:
    """Working precision in bits for interval endpoints."""

    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if self.bits < 2:
            raise ValueError("precision must be at least 2 bits")

    def __enter__(self):
        self._token = _BITS.set(self.bits)
        return self

    def __exit__(self, *exc):
        _BITS.reset(self._token)


@contextlib.contextmanager
def precision(bits: int):
    """Temporarily set the working precision (in bits)."""
    if bits < 2:
        raise ValueError("precision must be at least 2 bits")
    token = _BITS.set(int(bits))
    try:
        yield int(bits)
    finally:
        _BITS.reset(token)


def get_precision() -> int:
    return _BITS.get()


@lru_cache(maxsize=None)
def _contexts(bits):
    common = dict(
        precision=bits,
        emax=gmpy2.get_emax_max(),
        emin=gmpy2.get_emin_min(),
        subnormalize=False,
    )
    down = gmpy2.context(round=gmpy2.RoundDown, **common)
    up = gmpy2.context(round=gmpy2.RoundUp, **common)
    near = gmpy2.context(round=gmpy2.RoundToNearest, **common)
    return down, up, near


def _ctx():
    return _contexts(_BITS.get())


@lru_cache(maxsize=None)
def _exact_ctx(bits):
    return gmpy2.context(
        precision=bits, emax=gmpy2.get_emax_max(), emin=gmpy2.get_emin_min(), subnormalize=False
    )


def _neg(x):
    # plain -x would round to the global context's precision
    return _exact_ctx(x.precision).minus(x)


def _abs(x):
    return _exact_ctx(x.precision).abs(x)


def _floor(x):
    return int(_exact_ctx(x.precision).floor(x))


def _ceil(x):
    return int(_exact_ctx(x.precision).ceil(x))


def _exact(v):
    """Exact gmpy2 value (mpz, mpq or mpfr) for a Python/gmpy2/mpmath number."""
    if isinstance(v, (int, mpz)):
        return mpz(v)
    if isinstance(v, type(_ZERO)):
        return v
    if isinstance(v, float):
        if math.isnan(v):
            raise DomainError("nan is not a valid interval endpoint")
        return mpfr(v, 53)
    if isinstance(v, (Fraction, type(mpq(1, 2)))):
        return mpq(v)
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf"):
            return _INF
        if s == "-inf":
            return _NINF
        return mpq(Fraction(s))
    if hasattr(v, "_mpf_"):  # mpmath.mpf
        sign, man, exp, bc = v._mpf_
        if not man and exp:
            raise DomainError("special mpmath value %r" % (v,))
        q = mpq(int(man)) * (mpq(2) ** exp) if exp >= 0 else mpq(int(man), 2 ** (-exp))
        return -q if sign else q
    raise TypeError("cannot convert %r to an interval endpoint" % (type(v).__name__,))


def _round(v, ctx):
    """Round an exact value with the given directed context."""
    if isinstance(v, type(_ZERO)):
        return ctx.plus(v)
    if isinstance(v, mpz):
        return ctx.add(v, _ZERO)
    return ctx.div(mpz(v.numerator), mpz(v.denominator))


def _check(lo, hi):
    if gmpy2.is_nan(lo) or gmpy2.is_nan(hi):
        raise DomainError("operation produced nan")
    return lo, hi


class RealInterval:
    """Closed interval [lo, hi] of extended reals with MPFR endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if isinstance(lo, RealInterval) and hi is None:
            self.lo, self.hi = lo.lo, lo.hi
            return
        d, u, _ = _ctx()
        elo = _exact(lo)
        ehi = elo if hi is None else _exact(hi)
        self.lo = _round(elo, d)
        self.hi = _round(ehi, u)
        if gmpy2.is_nan(self.lo) or gmpy2.is_nan(self.hi):
            raise DomainError("nan endpoint")
        if self.lo > self.hi:
            raise ValueError("interval endpoints out of order: [%s, %s]" % (lo, hi))

    @staticmethod
    def _make(lo, hi):
        r = object.__new__(RealInterval)
        r.lo = lo
        r.hi = hi
        return r

    # -- construction helpers -------------------------------------------
    @classmethod
    def point(cls, v):
        return cls(v)

    @classmethod
    def fraction(cls, num, den=1):
        return cls(Fraction(num, den))

    @classmethod
    def hull_of(cls, values):
        values = [coerce(v) for v in values]
        lo = min(v.lo for v in values)
        hi = max(v.hi for v in values)
        return cls._make(lo, hi)

    @classmethod
    def symmetric(cls, radius):
        """[-r, r] for a nonnegative radius (number or interval upper bound)."""
        r = coerce(radius).hi
        if r < 0:
            raise ValueError("negative radius")
        return cls._make(_neg(r), r)

    # -- properties -----------------------------------------------------
    @property
    def mid(self):
        _, _, n = _ctx()
        if gmpy2.is_infinite(self.lo) or gmpy2.is_infinite(self.hi):
            if gmpy2.is_infinite(self.lo) and gmpy2.is_infinite(self.hi):
                return _ZERO
            return self.hi if gmpy2.is_infinite(self.lo) else self.lo
        return n.div_2exp(n.add(self.lo, self.hi), 1)

    @property
    def rad(self):
        """Upper bound for max(mid - lo, hi - mid)."""
        _, u, _ = _ctx()
        m = self.mid
        return max(u.sub(m, self.lo), u.sub(self.hi, m))

    @property
    def width(self):
        _, u, _ = _ctx()
        return u.sub(self.hi, self.lo)

    def mag(self):
        """Upper bound of |x| over the interval."""
        return max(_abs(self.lo), _abs(self.hi))

    def mig(self):
        """Lower bound of |x| over the interval."""
        if self.lo > 0:
            return self.lo
        if self.hi < 0:
            return _neg(self.hi)
        return _ZERO

    def is_point(self):
        return self.lo == self.hi

    def is_finite(self):
        return gmpy2.is_finite(self.lo) and gmpy2.is_finite(self.hi)

    def contains_zero(self):
        return self.lo <= 0 <= self.hi

    def is_positive(self):
        return self.lo > 0

    def is_negative(self):
        return self.hi < 0

    def __float__(self):
        return float(self.mid)

    def __contains__(self, v):
        return self.contains(v)

    def contains(self, v):
        if isinstance(v, RealInterval):
            return self.lo <= v.lo and v.hi <= self.hi
        e = _exact(v)
        return self.lo <= e <= self.hi

    def subset(self, other):
        other = coerce(other)
        return other.lo <= self.lo and self.hi <= other.hi

    def overlaps(self, other):
        other = coerce(other)
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other):
        other = coerce(other)
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            raise ValueError("empty intersection")
        return RealInterval._make(lo, hi)

    def hull(self, other):
        other = coerce(other)
        return RealInterval._make(min(self.lo, other.lo), max(self.hi, other.hi))

    def inflate(self, r):
        """Widen by a nonnegative amount r on both sides."""
        d, u, _ = _ctx()
        r = coerce(r).hi
        if r < 0:
            raise ValueError("negative inflation")
        return RealInterval._make(d.sub(self.lo, r), u.add(self.hi, r))

    def __repr__(self):
        return "RealInterval(%s, %s)" % (_fmt(self.lo), _fmt(self.hi))

    def __eq__(self, other):
        if not isinstance(other, RealInterval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    # -- arithmetic -----------------------------------------------------
    def __neg__(self):
        return RealInterval._make(_neg(self.hi), _neg(self.lo))

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, ComplexInterval):
            return NotImplemented
        b = coerce(other)
        d, u, _ = _ctx()
        return RealInterval._make(*_check(d.add(self.lo, b.lo), u.add(self.hi, b.hi)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ComplexInterval):
            return NotImplemented
        b = coerce(other)
        d, u, _ = _ctx()
        return RealInterval._make(*_check(d.sub(self.lo, b.hi), u.sub(self.hi, b.lo)))

    def __rsub__(self, other):
        return coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, ComplexInterval):
            return NotImplemented
        b = coerce(other)
        return _mul(self, b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ComplexInterval):
            return NotImplemented
        return _div(self, coerce(other))

    def __rtruediv__(self, other):
        return _div(coerce(other), self)

    def __pow__(self, n):
        if isinstance(n, int):
            return pow_int(self, n)
        return NotImplemented

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return RealInterval._make(_ZERO, max(_neg(self.lo), self.hi))

    def sqr(self):
        d, u, _ = _ctx()
        if self.lo >= 0:
            return RealInterval._make(d.mul(self.lo, self.lo), u.mul(self.hi, self.hi))
        if self.hi <= 0:
            return RealInterval._make(d.mul(self.hi, self.hi), u.mul(self.lo, self.lo))
        m = max(_neg(self.lo), self.hi)
        return RealInterval._make(_ZERO, u.mul(m, m))

    def mul_2exp(self, k):
        """Exact multiplication by 2**k."""
        d, u, _ = _ctx()
        return RealInterval._make(d.mul_2exp(self.lo, k), u.mul_2exp(self.hi, k))


def _fmt(x):
    if gmpy2.is_infinite(x):
        return "-inf" if x < 0 else "inf"
    return format(x, ".25g")


def coerce(v) -> RealInterval:
    """Enclose a number (or pass through an interval)."""
    if isinstance(v, RealInterval):
        return v
    if isinstance(v, ComplexInterval):
        raise TypeError("complex interval where a real interval was expected")
    return RealInterval(v)


def _mul(a, b):
    d, u, _ = _ctx()
    al, ah, bl, bh = a.lo, a.hi, b.lo, b.hi
    if al >= 0 and bl >= 0:
        lo = d.mul(al, bl)
        hi = u.mul(ah, bh)
    elif ah <= 0 and bh <= 0:
        lo = d.mul(ah, bh)
        hi = u.mul(al, bl)
    elif al >= 0 and bh <= 0:
        lo = d.mul(ah, bl)
        hi = u.mul(al, bh)
    elif ah <= 0 and bl >= 0:
        lo = d.mul(al, bh)
        hi = u.mul(ah, bl)
    else:
        lo = min(_nz(d.mul(al, bl)), _nz(d.mul(al, bh)), _nz(d.mul(ah, bl)), _nz(d.mul(ah, bh)))
        hi = max(_nz(u.mul(al, bl)), _nz(u.mul(al, bh)), _nz(u.mul(ah, bl)), _nz(u.mul(ah, bh)))
    if gmpy2.is_nan(lo):
        lo = _ZERO
    if gmpy2.is_nan(hi):
        hi = _ZERO
    return RealInterval._make(lo, hi)


def _nz(x):
    # 0 * inf is 0 for interval multiplication
    return _ZERO if gmpy2.is_nan(x) else x


def _div(a, b):
    if b.lo <= 0 <= b.hi:
        raise DivisorContainsZero("divisor interval [%s, %s] contains zero" % (_fmt(b.lo), _fmt(b.hi)))
    d, u, _ = _ctx()
    al, ah, bl, bh = a.lo, a.hi, b.lo, b.hi
    if bl > 0:
        lo = d.div(al, bh) if al >= 0 else d.div(al, bl)
        hi = u.div(ah, bl) if ah >= 0 else u.div(ah, bh)
    else:
        lo = d.div(ah, bh) if ah >= 0 else d.div(ah, bl)
        hi = u.div(al, bl) if al >= 0 else u.div(al, bh)
    return RealInterval._make(*_check(lo, hi))


def pow_int(a: RealInterval, n: int) -> RealInterval:
    if n == 0:
        return RealInterval._make(_ONE, _ONE)
    if n < 0:
        return 1 / pow_int(a, -n)
    if n == 1:
        return a
    if n % 2 == 0:
        return pow_int(a.sqr(), n // 2)
    result = a
    base = a.sqr()
    k = n // 2
    # odd powers are monotone: evaluate at endpoints directly
    d, u, _ = _ctx()
    return RealInterval._make(d.pow(a.lo, n), u.pow(a.hi, n)) if a.is_finite() else result * pow_int(base, k)


# ---------------------------------------------------------------------------
# constants


def const_pi() -> RealInterval:
    d, u, _ = _ctx()
    return RealInterval._make(d.const_pi(), u.const_pi())


def const_log2() -> RealInterval:
    d, u, _ = _ctx()
    return RealInterval._make(d.const_log2(), u.const_log2())


def const_euler() -> RealInterval:
    d, u, _ = _ctx()
    return RealInterval._make(d.const_euler(), u.const_euler())


# ---------------------------------------------------------------------------
# elementary real functions


def exp(a) -> RealInterval:
    if isinstance(a, ComplexInterval):
        return cexp(a)
    a = coerce(a)
    d, u, _ = _ctx()
    return RealInterval._make(d.exp(a.lo), u.exp(a.hi))


def expm1(a) -> RealInterval:
    a = coerce(a)
    d, u, _ = _ctx()
    return RealInterval._make(d.expm1(a.lo), u.expm1(a.hi))


def log(a) -> RealInterval:
    if isinstance(a, ComplexInterval):
        return clog(a)
    a = coerce(a)
    if a.lo <= 0:
        raise DomainError("log of an interval that is not strictly positive")
    d, u, _ = _ctx()
    return RealInterval._make(d.log(a.lo), u.log(a.hi))


def log1p(a) -> RealInterval:
    a = coerce(a)
    if a.lo <= -1:
        raise DomainError("log1p argument must exceed -1")
    d, u, _ = _ctx()
    return RealInterval._make(d.log1p(a.lo), u.log1p(a.hi))


def sqrt(a) -> RealInterval:
    a = coerce(a)
    if a.lo < 0:
        raise DomainError("sqrt of an interval with negative part")
    d, u, _ = _ctx()
    return RealInterval._make(d.sqrt(a.lo), u.sqrt(a.hi))


def erf(a) -> RealInterval:
    a = coerce(a)
    d, u, _ = _ctx()
    return RealInterval._make(d.erf(a.lo), u.erf(a.hi))


def erfc(a) -> RealInterval:
    a = coerce(a)
    d, u, _ = _ctx()
    return RealInterval._make(d.erfc(a.hi), u.erfc(a.lo))


def atan(a) -> RealInterval:
    a = coerce(a)
    d, u, _ = _ctx()
    return RealInterval._make(d.atan(a.lo), u.atan(a.hi))


def _has_integer(q: RealInterval) -> bool:
    return _floor(q.hi) >= _ceil(q.lo)


def cos(a) -> RealInterval:
    a = coerce(a)
    d, u, _ = _ctx()
    if not a.is_finite():
        return RealInterval._make(-_ONE, _ONE)
    two_pi = const_pi().mul_2exp(1)
    if a.width >= 7:
        return RealInterval._make(-_ONE, _ONE)
    lo = min(d.cos(a.lo), d.cos(a.hi))
    hi = max(u.cos(a.lo), u.cos(a.hi))
    if _has_integer(a / two_pi):
        hi = _ONE
    if _has_integer((a - const_pi()) / two_pi):
        lo = -_ONE
    return RealInterval._make(max(lo, -_ONE), min(hi, _ONE))


def sin(a) -> RealInterval:
    a = coerce(a)
    d, u, _ = _ctx()
    if not a.is_finite():
        return RealInterval._make(-_ONE, _ONE)
    pi = const_pi()
    two_pi = pi.mul_2exp(1)
    half_pi = pi.mul_2exp(-1)
    if a.width >= 7:
        return RealInterval._make(-_ONE, _ONE)
    lo = min(d.sin(a.lo), d.sin(a.hi))
    hi = max(u.sin(a.lo), u.sin(a.hi))
    if _has_integer((a - half_pi) / two_pi):
        hi = _ONE
    if _has_integer((a + half_pi) / two_pi):
        lo = -_ONE
    return RealInterval._make(max(lo, -_ONE), min(hi, _ONE))


# Γ attains its minimum on (0, inf) at x* = 1.46163214496836234126...
_GAMMA_MIN_X_LO = mpq(Fraction("1.461632144968362341"))
_GAMMA_MIN_X_HI = mpq(Fraction("1.461632144968362342"))
_GAMMA_MIN_VALUE_LO = mpq(Fraction("0.885603194410888700"))


def gamma_real(a) -> RealInterval:
    """Γ on a positive real interval."""
    a = coerce(a)
    if a.lo <= 0:
        raise PoleProximity("real gamma is only provided on (0, inf)")
    d, u, _ = _ctx()
    if a.hi <= _GAMMA_MIN_X_LO:
        return RealInterval._make(d.gamma(a.hi), u.gamma(a.lo))
    if a.lo >= _GAMMA_MIN_X_HI:
        return RealInterval._make(d.gamma(a.lo), u.gamma(a.hi))
    lo = _round(_GAMMA_MIN_VALUE_LO, d)
    hi = max(u.gamma(a.lo), u.gamma(a.hi))
    return RealInterval._make(lo, hi)


def zeta_real(a) -> RealInterval:
    """ζ on a real interval strictly right of 1 (decreasing there)."""
    a = coerce(a)
    if a.lo <= 1:
        raise DomainError("zeta_real needs s > 1")
    d, u, _ = _ctx()
    return RealInterval._make(d.zeta(a.hi), u.zeta(a.lo))


def incomplete_gamma(s, x) -> RealInterval:
    """Upper incomplete gamma Γ(s, x) = ∫_x^∞ t^(s-1) e^(-t) dt for s > 0, x ≥ 0."""
    s = coerce(s)
    x = coerce(x)
    if s.lo <= 0:
        raise DomainError("incomplete_gamma needs s > 0")
    if x.lo < 0:
        raise DomainError("incomplete_gamma needs x >= 0")
    d, u, _ = _ctx()
    if s.lo == s.hi:
        return RealInterval._make(d.gamma_inc(s.lo, x.hi), u.gamma_inc(s.lo, x.lo))
    if x.lo >= 1:
        # integrand t^(s-1) grows with s when t >= 1
        return RealInterval._make(d.gamma_inc(s.lo, x.hi), u.gamma_inc(s.hi, x.lo))
    # split at t = 1: the part over [x, 1] decreases in s, the tail increases
    lo_head = d.sub(d.gamma_inc(s.hi, x.hi), u.gamma_inc(s.hi, _ONE)) if x.hi < 1 else _ZERO
    hi_head = u.sub(u.gamma_inc(s.lo, x.lo), d.gamma_inc(s.lo, _ONE))
    lo = d.add(max(lo_head, _ZERO), d.gamma_inc(s.lo, max(x.hi, _ONE)))
    hi = u.add(hi_head, u.gamma_inc(s.hi, _ONE))
    return RealInterval._make(lo, hi)


def elementary(a, f: str):
    """Apply one of exp, log, sqrt, erf, erfc (by name) to an interval."""
    funcs = {"exp": exp, "log": log, "sqrt": sqrt, "erf": erf, "erfc": erfc}
    try:
        fn = funcs[f]
    except KeyError:
        raise ValueError("unknown elementary function %r" % (f,)) from None
    return fn(a)


def arith(a, b, op: str):
    """Binary arithmetic by operator name: add, sub, mul, div."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("unknown operation %r" % (op,))


def unique_integer(a) -> int:
    """The single integer in the interval; NoInteger or Ambiguous otherwise."""
    a = coerce(a)
    if not a.is_finite():
        raise Ambiguous("unbounded interval")
    lo = _ceil(a.lo)
    hi = _floor(a.hi)
    if lo > hi:
        raise NoInteger("no integer in [%s, %s]" % (_fmt(a.lo), _fmt(a.hi)))
    if lo < hi:
        raise Ambiguous("%d integers in [%s, %s]" % (hi - lo + 1, _fmt(a.lo), _fmt(a.hi)))
    return lo


# ---------------------------------------------------------------------------
# complex intervals


class ComplexInterval:
    """Rectangle re + i*im of real intervals."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        if isinstance(re, ComplexInterval):
            self.re, self.im = re.re, re.im
            return
        if isinstance(re, complex):
            re, im = re.real, re.imag
        elif hasattr(re, "_mpc_"):  # mpmath.mpc
            re, im = re.real, re.imag
        self.re = coerce(re)
        self.im = coerce(im)

    @staticmethod
    def _make(re, im):
        z = object.__new__(ComplexInterval)
        z.re = re
        z.im = im
        return z

    def __repr__(self):
        return "ComplexInterval(%r, %r)" % (self.re, self.im)

    def __eq__(self, other):
        if not isinstance(other, ComplexInterval):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def conj(self):
        return ComplexInterval._make(self.re, -self.im)

    def mul_i(self):
        return ComplexInterval._make(-self.im, self.re)

    def __neg__(self):
        return ComplexInterval._make(-self.re, -self.im)

    def __add__(self, other):
        b = ccoerce(other)
        return ComplexInterval._make(self.re + b.re, self.im + b.im)

    __radd__ = __add__

    def __sub__(self, other):
        b = ccoerce(other)
        return ComplexInterval._make(self.re - b.re, self.im - b.im)

    def __rsub__(self, other):
        return ccoerce(other) - self

    def __mul__(self, other):
        if isinstance(other, ComplexInterval):
            a, b, c, d = self.re, self.im, other.re, other.im
            return ComplexInterval._make(a * c - b * d, a * d + b * c)
        r = coerce(other)
        return ComplexInterval._make(self.re * r, self.im * r)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ComplexInterval):
            if other.im.lo == 0 == other.im.hi:
                return ComplexInterval._make(self.re / other.re, self.im / other.re)
            den = other.re.sqr() + other.im.sqr()
            if den.lo <= 0:
                raise DivisorContainsZero("complex divisor rectangle contains zero")
            num = self * other.conj()
            return ComplexInterval._make(num.re / den, num.im / den)
        r = coerce(other)
        return ComplexInterval._make(self.re / r, self.im / r)

    def __rtruediv__(self, other):
        return ccoerce(other) / self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return 1 / (self ** (-n))
        result = ComplexInterval._make(RealInterval._make(_ONE, _ONE), RealInterval._make(_ZERO, _ZERO))
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base.sqr()
        return result

    def sqr(self):
        a, b = self.re, self.im
        return ComplexInterval._make(a.sqr() - b.sqr(), (a * b).mul_2exp(1))

    def abs(self) -> RealInterval:
        return sqrt(self.re.sqr() + self.im.sqr())

    def mag(self):
        """Upper bound of |z| over the rectangle."""
        return self.abs().hi

    def contains(self, v):
        if isinstance(v, ComplexInterval):
            return self.re.contains(v.re) and self.im.contains(v.im)
        if isinstance(v, complex) or hasattr(v, "_mpc_"):
            return self.re.contains(v.real) and self.im.contains(v.imag)
        return self.re.contains(v) and self.im.contains(0)

    def __contains__(self, v):
        return self.contains(v)

    def overlaps(self, other):
        other = ccoerce(other)
        return self.re.overlaps(other.re) and self.im.overlaps(other.im)

    def contains_zero(self):
        return self.re.contains_zero() and self.im.contains_zero()

    def inflate(self, r):
        return ComplexInterval._make(self.re.inflate(r), self.im.inflate(r))

    def hull(self, other):
        other = ccoerce(other)
        return ComplexInterval._make(self.re.hull(other.re), self.im.hull(other.im))


def ccoerce(v) -> ComplexInterval:
    if isinstance(v, ComplexInterval):
        return v
    if isinstance(v, RealInterval):
        return ComplexInterval._make(v, RealInterval._make(_ZERO, _ZERO))
    return ComplexInterval(v)


def disc(radius) -> ComplexInterval:
    """Rectangle enclosing the complex disc |z| <= radius."""
    r = RealInterval.symmetric(radius)
    return ComplexInterval._make(r, r)


def cexp(z) -> ComplexInterval:
    z = ccoerce(z)
    m = exp(z.re)
    if z.im.lo == 0 == z.im.hi:
        return ComplexInterval._make(m, RealInterval._make(_ZERO, _ZERO))
    return ComplexInterval._make(m * cos(z.im), m * sin(z.im))


def arg(z) -> RealInterval:
    """Principal argument; the rectangle must avoid (-inf, 0]."""
    z = ccoerce(z)
    re, im = z.re, z.im
    if re.lo > 0:
        if im.lo == 0 == im.hi:
            return RealInterval._make(_ZERO, _ZERO)
        return atan(im / re)
    half_pi = const_pi().mul_2exp(-1)
    if im.lo > 0:
        return half_pi - atan(re / im)
    if im.hi < 0:
        return -half_pi - atan(re / im)
    raise DomainError("argument undefined: rectangle meets the branch cut (-inf, 0]")


def clog(z) -> ComplexInterval:
    z = ccoerce(z)
    mod2 = z.re.sqr() + z.im.sqr()
    if mod2.lo <= 0:
        raise DomainError("log of a rectangle containing zero")
    return ComplexInterval._make(log(mod2).mul_2exp(-1), arg(z))


def cpow(x, s) -> ComplexInterval:
    """x**s = exp(s log x) for real x > 0 and complex s."""
    x = coerce(x)
    if x.lo <= 0:
        raise DomainError("cpow needs x > 0")
    s = ccoerce(s)
    lx = log(x)
    return cexp(ComplexInterval._make(s.re * lx, s.im * lx))


# ---------------------------------------------------------------------------
# complex gamma via Stirling's series


@lru_cache(maxsize=None)
def bernoulli_fraction(n: int) -> Fraction:
    """Bernoulli number B_n (B_1 = -1/2) as an exact fraction."""
    if n == 1:
        return Fraction(-1, 2)
    if n % 2 == 1:
        return Fraction(0)
    # Akiyama-Tanigawa
    a = [Fraction(0)] * (n + 1)
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
    return a[0]


def _stirling_log_gamma(z: ComplexInterval) -> ComplexInterval:
    """log Γ(z) for Re z >= 8 with a rigorous remainder.

    After M terms the remainder is at most
    |B_{2M+2}| / ((2M+2)(2M+1)|z|^(2M+1)) * sec(arg(z)/2)^(2M+2).
    """
    bits = get_precision()
    _, u, _ = _ctx()
    target = mpfr(2) ** (-(bits + 8))
    w = 1 / z
    w2 = w.sqr()
    az = z.abs()
    sec2 = (az.mul_2exp(1) / (az + z.re)).hi
    az_lo = az.lo
    series = ccoerce(0)
    power = w
    rem = _INF
    for k in range(1, 200):
        b = bernoulli_fraction(2 * k)
        series = series + power * RealInterval(b / (2 * k * (2 * k - 1)))
        power = power * w2
        b_next = abs(bernoulli_fraction(2 * k + 2))
        bound = u.div(_round(mpq(b_next.numerator, b_next.denominator), u), (2 * k + 2) * (2 * k + 1))
        bound = u.mul(bound, u.div(u.pow(sec2, k + 1), _pow_down(az_lo, 2 * k + 1)))
        if bound >= rem:
            # terms started growing; keep one more term's worth of slack
            rem = bound
            break
        rem = bound
        if rem < target:
            break
    half_log_2pi = log(const_pi().mul_2exp(1)).mul_2exp(-1)
    main = (z - RealInterval(Fraction(1, 2))) * clog(z) - z + half_log_2pi
    return main + series + disc(rem)


def _pow_down(x, n):
    d, _, _ = _ctx()
    return d.pow(x, n)


def _gamma_prepare(z: ComplexInterval) -> int:
    """Number of unit shifts needed before Stirling's series is accurate."""
    if z.im.contains_zero() and z.re.lo <= 0:
        if _floor(min(z.re.hi, _ZERO)) >= _ceil(z.re.lo):
            raise PoleProximity("rectangle meets a pole of gamma")
    r_min = 0.16 * get_precision() + 4
    re_lo = float(z.re.lo)
    im_mig = float(z.im.mig())
    shift = 0
    while re_lo + shift < 8 or math.hypot(re_lo + shift, im_mig) < r_min:
        shift += 1
    return shift


def log_gamma(z) -> ComplexInterval:
    """Principal branch of log Γ(z) off the nonpositive real axis."""
    z = ccoerce(z)
    shift = _gamma_prepare(z)
    if z.im.contains_zero() and z.re.lo <= 0:
        raise DomainError("log_gamma branch cut: rectangle meets the negative real axis")
    acc = _stirling_log_gamma(z + shift)
    for j in range(shift):
        acc = acc - clog(z + j)
    return acc


def gamma(z) -> ComplexInterval:
    """Γ(z) on a complex rectangle avoiding the poles."""
    z = ccoerce(z)
    shift = _gamma_prepare(z)
    val = cexp(_stirling_log_gamma(z + shift))
    if shift:
        prod = z
        for j in range(1, shift):
            prod = prod * (z + j)
        val = val / prod
    return val


def gamma_like(z, kind: str = "gamma") -> ComplexInterval:
    if kind == "gamma":
        return gamma(z)
    if kind == "log_gamma":
        return log_gamma(z)
    raise ValueError("unknown kind %r" % (kind,))


__all__ = [
    "Precision",
    "precision",
    "get_precision",
    "RealInterval",
    "ComplexInterval",
    "coerce",
    "ccoerce",
    "disc",
    "arith",
    "elementary",
    "exp",
    "expm1",
    "log",
    "log1p",
    "sqrt",
    "erf",
    "erfc",
    "sin",
    "cos",
    "atan",
    "arg",
    "cexp",
    "clog",
    "cpow",
    "gamma",
    "log_gamma",
    "gamma_like",
    "gamma_real",
    "incomplete_gamma",
    "zeta_real",
    "unique_integer",
    "const_pi",
    "const_log2",
    "const_euler",
    "pow_int",
    "bernoulli_fraction",
]
