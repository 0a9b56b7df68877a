"""Prime sieve over a window around x and the smoothed prime-power sum.

For the primes p of a segment [x0 − w, x0 + w] only three integers are kept:
S0 = Σ1, S1 = Σ(x0 − p), S2 = Σ(x0 − p)².  With d = x0 − p and Taylor
coefficients φ_k of φ at x0,

    φ(p) = φ0 − φ1 d + φ2 d² − φ3 d³ + φ4(ξ) d⁴,

the cubic term is replaced by the best linear fit on [−w, w] (a d with
a = 3φ3 w²/4, error ≤ |φ3| w³/4) and d⁴ ≤ w² d² bounds the quartic.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
import numpy as np

from . import interval as iv
from .errors import InsufficientSievingPrimes, SegmentTooWide, TilingGap
from .interval import RealInterval
from .mellin import MellinContext, phi

TAYLOR_ORDER = 4


class PrimeList(list):
    """Ascending primes ≤ limit (limit kept so coverage can be checked)."""

    def __init__(self, primes, limit):
        super().__init__(primes)
        self.limit = int(limit)


def small_primes(limit: int) -> PrimeList:
    """Primes ≤ limit by the sieve of Eratosthenes."""
    limit = int(limit)
    if limit < 2:
        return PrimeList([], limit)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return PrimeList(np.flatnonzero(flags).tolist(), limit)


def _sieve_limit(primes) -> int:
    if isinstance(primes, PrimeList):
        return primes.limit
    return int(primes[-1]) if len(primes) else 1


def primes_in_range(lo: int, hi: int, sieving_primes) -> np.ndarray:
    """All primes in [lo, hi] as an int64 array, by a segmented sieve."""
    lo = max(int(lo), 2)
    hi = int(hi)
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    if math.isqrt(hi) > _sieve_limit(sieving_primes):
        raise InsufficientSievingPrimes("sieving primes must reach isqrt(%d)" % hi)
    n = hi - lo + 1
    flags = np.ones(n, dtype=bool)
    root = math.isqrt(hi)
    for p in sieving_primes:
        if p > root:
            break
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start > hi:
            continue
        flags[start - lo :: p] = False
    return np.flatnonzero(flags).astype(np.int64) + lo


@dataclass(frozen=True)
class SegmentSummary:
    x0: int
    w: int
    S0: int
    S1: int
    S2: int

    def __post_init__(self):
        if not (0 <= self.S0 <= 2 * self.w + 1):
            raise ValueError("S0 out of range")
        if abs(self.S1) > self.S0 * self.w or not (0 <= self.S2 <= self.S0 * self.w * self.w):
            raise ValueError("moment sums out of range")

    @property
    def lo(self):
        return self.x0 - self.w

    @property
    def hi(self):
        return self.x0 + self.w

    def line(self) -> str:
        return "%d %d %d %d %d" % (self.x0, self.w, self.S0, self.S1, self.S2)

    @classmethod
    def parse(cls, line: str) -> "SegmentSummary":
        parts = line.split()
        if len(parts) != 5:
            raise ValueError("bad checkpoint record: %r" % (line,))
        return cls(*(int(v) for v in parts))


def summarize(primes: np.ndarray, x0: int, w: int) -> SegmentSummary:
    """Moment sums of the given primes (all assumed to lie in [x0−w, x0+w])."""
    d = x0 - primes
    if w < 2**31 and len(d) * w * w < 2**62:
        s1 = int(d.sum())
        s2 = int((d * d).sum())
    else:
        dl = [int(v) for v in d]
        s1 = sum(dl)
        s2 = sum(v * v for v in dl)
    return SegmentSummary(int(x0), int(w), int(len(d)), s1, s2)


def sieve_segment(x0: int, w: int, sieving_primes) -> SegmentSummary:
    """Exact S0, S1, S2 over the primes in [x0 − w, x0 + w]."""
    x0, w = int(x0), int(w)
    if w < 0:
        raise ValueError("half-width must be nonnegative")
    ps = primes_in_range(x0 - w, x0 + w, sieving_primes)
    return summarize(ps, x0, w)


def cubic_line_coeff(a3, w):
    """Best line a·t for a3·t³ on [−w, w]: a = 3 a3 w²/4, error |a3| w³/4."""
    a3 = iv.coerce(a3)
    w = iv.coerce(w)
    if w.lo <= 0:
        raise ValueError("w must be positive")
    w2 = w.sqr()
    a = a3 * w2 * Fraction(3, 4)
    err = abs(a3) * w2 * w * Fraction(1, 4)
    return a, err


# ---------------------------------------------------------------------------
# Taylor jets of φ


class Jet:
    """Truncated Taylor series c0 + c1 δ + ... + c4 δ⁴ with interval coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = list(coeffs)

    @classmethod
    def variable(cls, t0):
        zero = RealInterval(0)
        return cls([iv.coerce(t0), RealInterval(1)] + [zero] * (TAYLOR_ORDER - 1))

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet([a + b for a, b in zip(self.c, other.c)])
        return Jet([self.c[0] + other] + self.c[1:])

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet([a - b for a, b in zip(self.c, other.c)])
        return Jet([self.c[0] - other] + self.c[1:])

    def __mul__(self, other):
        if isinstance(other, Jet):
            out = []
            for k in range(TAYLOR_ORDER + 1):
                acc = self.c[0] * other.c[k]
                for j in range(1, k + 1):
                    acc = acc + self.c[j] * other.c[k - j]
                out.append(acc)
            return Jet(out)
        return Jet([a * other for a in self.c])

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Jet([a / other for a in self.c])

    def derivative(self):
        return Jet([self.c[k] * k for k in range(1, TAYLOR_ORDER + 1)] + [RealInterval(0)])

    def integral(self, constant):
        return Jet([iv.coerce(constant)] + [self.c[k - 1] / k for k in range(1, TAYLOR_ORDER + 1)])


def _jet_log(f: Jet) -> Jet:
    f0 = f.c[0]
    g = Jet([RealInterval(0)] + [a / f0 for a in f.c[1:]])
    acc = Jet([RealInterval(0)] * (TAYLOR_ORDER + 1))
    power = g
    for k in range(1, TAYLOR_ORDER + 1):
        term = power / k
        acc = acc + term if k % 2 else acc - term
        power = power * g
    acc.c[0] = iv.log(f0)
    return acc


def _jet_exp(f: Jet) -> Jet:
    g = Jet([RealInterval(0)] + f.c[1:])
    acc = Jet([RealInterval(1)] + [RealInterval(0)] * TAYLOR_ORDER)
    power = Jet(acc.c)
    for k in range(1, TAYLOR_ORDER + 1):
        power = power * g / k
        acc = acc + power
    return acc * iv.exp(f.c[0])


def phi_jet(t0, ctx: MellinContext) -> list:
    """Taylor coefficients φ^{(k)}(t0)/k!, k = 0..4, valid for every t0 in the interval."""
    t0 = iv.coerce(t0)
    u = (_jet_log(Jet.variable(t0)) - ctx.log_x) / ctx.sqrt2_lam
    e = _jet_exp(u * u * (-1))
    integrand = e * u.derivative() / (-iv.sqrt(iv.const_pi()))
    value = iv.erfc(u.c[0]).mul_2exp(-1)
    jet = integrand.integral(value)
    return jet.c


def segment_phi_sum(seg: SegmentSummary, ctx: MellinContext, max_error=None) -> RealInterval:
    """Enclosure of Σ φ(p) over the primes of a segment."""
    if seg.S0 == 0:
        return RealInterval(0)
    x0 = RealInterval(seg.x0)
    if seg.w == 0:
        return phi(x0, ctx) * seg.S0
    c = phi_jet(x0, ctx)
    w = RealInterval(seg.w)
    c4 = phi_jet(RealInterval(seg.x0 - seg.w, seg.x0 + seg.w), ctx)[4]
    a, err = cubic_line_coeff(c[3], w)
    S0, S1, S2 = RealInterval(seg.S0), RealInterval(seg.S1), RealInterval(seg.S2)
    main = c[0] * S0 - c[1] * S1 + c[2] * S2 - a * S1
    cubic = (err * S0).hi
    quartic = c4 * RealInterval._make(gmpy2.mpfr(0), (w.sqr() * S2).hi)
    total = main.inflate(cubic) + quartic
    # φ is nonincreasing, which gives a cruder enclosure that is always finite
    mono = RealInterval.hull_of([phi(RealInterval(seg.hi), ctx), phi(RealInterval(max(seg.lo, 1)), ctx)]) * S0
    total = total.intersect(mono) if total.overlaps(mono) else mono
    if max_error is not None and total.width > iv.coerce(max_error).lo:
        raise SegmentTooWide("segment error %.3g exceeds its share" % float(total.width))
    return total


# ---------------------------------------------------------------------------
# windows, tiling and prime powers


@dataclass(frozen=True)
class WindowSpec:
    x1: int
    x2: int
    segment_width: int  # number of integers per segment (odd)

    @property
    def half_width(self):
        return max((self.segment_width - 1) // 2, 0)


def window_for(x: int, lam, k, segment_width: int) -> WindowSpec:
    """Window [x e^{−kλ}, x e^{kλ}] rounded outward to integers."""
    ctx_l = iv.coerce(lam) * iv.coerce(k)
    x_iv = RealInterval(int(x))
    lo = (x_iv * iv.exp(-ctx_l)).lo
    hi = (x_iv * iv.exp(ctx_l)).hi
    x1 = max(int(iv._floor(lo)), 1)
    x2 = int(iv._ceil(hi))
    if segment_width % 2 == 0:
        segment_width += 1
    return WindowSpec(x1, max(x2, int(x) + 1), int(segment_width))


@dataclass(frozen=True)
class PrimePowerTerm:
    p: int
    m: int
    value: int
    chi: Fraction

    @property
    def weight(self):
        return Fraction(1, self.m)


def _chi(n: int, x: int) -> Fraction:
    if n < x:
        return Fraction(1)
    if n == x:
        return Fraction(1, 2)
    return Fraction(0)


def prime_power_terms(window: WindowSpec, x: int) -> list:
    """All p^m in [x1, x2] with m ≥ 2, ordered by value."""
    x1, x2 = window.x1, window.x2
    out = []
    m = 2
    while 2**m <= x2:
        lo_root, exact = gmpy2.iroot(max(x1, 1), m)
        lo_root = int(lo_root) if exact else int(lo_root) + 1
        hi_root = int(gmpy2.iroot(x2, m)[0])
        if lo_root <= hi_root:
            plist = small_primes(hi_root)
            for p in plist:
                if p >= lo_root:
                    v = p**m
                    out.append(PrimePowerTerm(p, m, v, _chi(v, x)))
        m += 1
    out.sort(key=lambda t: t.value)
    return out


def tile_window(window: WindowSpec, x: int) -> list:
    """(x0, w) segments tiling [x1, x2]; none straddles x, and x is its own segment."""
    x = int(x)
    w = window.half_width
    tiles = []

    def cover(lo, hi):
        a = lo
        while a <= hi:
            length = min(2 * w + 1, hi - a + 1)
            if length % 2 == 0:
                length -= 1
            half = (length - 1) // 2
            tiles.append((a + half, half))
            a += length

    if window.x1 < x:
        cover(window.x1, min(x - 1, window.x2))
    if window.x1 <= x <= window.x2:
        tiles.append((x, 0))
    if window.x2 > x:
        cover(max(x + 1, window.x1), window.x2)
    return tiles


def check_tiling(window: WindowSpec, segments: Sequence[SegmentSummary], x: int):
    segs = sorted(segments, key=lambda s: s.x0 - s.w)
    expect = window.x1
    for s in segs:
        if s.lo != expect:
            raise TilingGap("segments leave a gap or overlap at %d" % expect)
        if s.lo < x < s.hi:
            raise TilingGap("segment [%d, %d] straddles x" % (s.lo, s.hi))
        expect = s.hi + 1
    if expect != window.x2 + 1:
        raise TilingGap("segments stop at %d, window ends at %d" % (expect - 1, window.x2))
    return segs


def window_sum(window: WindowSpec, segments, power_terms, ctx: MellinContext, x: int) -> RealInterval:
    """Σ over p^m in the window of (1/m)(χ_x(p^m) − φ(p^m))."""
    x = int(x)
    segs = check_tiling(window, segments, x)
    count_below = 0
    phi_sum = RealInterval(0)
    half_terms = RealInterval(0)
    for s in segs:
        if s.hi < x:
            count_below += s.S0
        elif s.lo == x == s.hi and s.S0:
            half_terms = half_terms + RealInterval(Fraction(1, 2))
        phi_sum = phi_sum + segment_phi_sum(s, ctx)
    total = RealInterval(count_below) + half_terms - phi_sum
    for t in power_terms:
        total = total + (RealInterval(t.chi) - phi(RealInterval(t.value), ctx)) / t.m
    return total


def window_tail_bound(window: WindowSpec, ctx: MellinContext) -> RealInterval:
    """[0, Tlow + Thigh] bounding the prime-power mass outside the window."""
    x = ctx.x
    s2l = ctx.sqrt2_lam
    lam2 = ctx.lam2
    a = iv.log(RealInterval(window.x2) / x)
    b = iv.log(RealInterval(window.x1) / x)
    g = iv.exp(lam2.mul_2exp(-1))
    # Σ_{n > x2} φ(n) ≤ ∫_{x2}^∞ φ(t) dt
    thigh = x * (g * iv.erfc((a - lam2) / s2l) - iv.exp(a) * iv.erfc(a / s2l)).mul_2exp(-1)
    # Σ_{n < x1} (1 − φ(n)) ≤ ∫_0^{x1} (1 − φ(t)) dt
    tlow = x * (iv.erfc(-b / s2l) * iv.exp(b) - g * iv.erfc((lam2 - b) / s2l)).mul_2exp(-1)
    total = (abs(thigh) + abs(tlow)).hi
    return RealInterval._make(gmpy2.mpfr(0), total)


# ---------------------------------------------------------------------------
# checkpointing and batch sieving


def complete_lines(path) -> list:
    """Newline-terminated lines of a checkpoint file.

    Records are written whole and newline-terminated, so anything after the
    last newline is a torn write and is ignored (it may look like a valid but
    truncated record).
    """
    with open(path) as fh:
        return fh.read().split("\n")[:-1]


def open_for_append(path):
    """Open a checkpoint for appending after cutting off any torn tail."""
    if os.path.exists(path):
        with open(path, "rb+") as fh:
            data = fh.read()
            keep = data.rfind(b"\n") + 1
            if keep != len(data):
                fh.truncate(keep)
    return open(path, "a")


def read_checkpoint(path) -> dict:
    done = {}
    if path is None or not os.path.exists(path):
        return done
    for line in complete_lines(path):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        s = SegmentSummary.parse(line)
        done[(s.x0, s.w)] = s
    return done


def _sieve_block(args):
    lo, hi, tiles, limit = args
    sp = small_primes(limit)
    ps = primes_in_range(lo, hi, sp)
    out = []
    for x0, w in tiles:
        i = np.searchsorted(ps, x0 - w, side="left")
        j = np.searchsorted(ps, x0 + w, side="right")
        out.append(summarize(ps[i:j], x0, w))
    return out


def sieve_window(window: WindowSpec, x: int, *, checkpoint=None, workers: int = 1,
                 block: int = 1 << 20) -> list:
    """SegmentSummary for every tile of the window, resuming from a checkpoint file."""
    tiles = tile_window(window, x)
    done = read_checkpoint(checkpoint)
    todo = [t for t in tiles if t not in done]
    limit = math.isqrt(window.x2) + 1
    jobs = []
    cur = []
    for t in todo:
        if cur and (t[0] + t[1]) - (cur[0][0] - cur[0][1]) > block:
            jobs.append(cur)
            cur = []
        cur.append(t)
    if cur:
        jobs.append(cur)
    args = [(j[0][0] - j[0][1], j[-1][0] + j[-1][1], j, limit) for j in jobs]
    fh = open_for_append(checkpoint) if checkpoint else None
    try:
        if workers > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_sieve_block, args)
                for res in results:
                    _record(res, done, fh)
        else:
            for a in args:
                _record(_sieve_block(a), done, fh)
    finally:
        if fh:
            fh.close()
    return [done[t] for t in tiles]


def _record(res, done, fh):
    for s in res:
        done[(s.x0, s.w)] = s
        if fh:
            fh.write(s.line() + "\n")
    if fh:
        fh.flush()


def segments_phi_total(segments: Iterable[SegmentSummary], ctx: MellinContext) -> RealInterval:
    acc = RealInterval(0)
    for s in segments:
        acc = acc + segment_phi_sum(s, ctx)
    return acc


__all__ = [
    "PrimeList",
    "small_primes",
    "primes_in_range",
    "SegmentSummary",
    "summarize",
    "sieve_segment",
    "cubic_line_coeff",
    "phi_jet",
    "segment_phi_sum",
    "WindowSpec",
    "window_for",
    "PrimePowerTerm",
    "prime_power_terms",
    "tile_window",
    "check_tiling",
    "window_sum",
    "window_tail_bound",
    "read_checkpoint",
    "sieve_window",
]
