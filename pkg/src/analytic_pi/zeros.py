"""Zero tables, zero counting bounds and the truncated sum over zeros."""

from __future__ import annotations

import io
import math
import re
import struct
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, List

import gmpy2

from . import interval as iv
from .errors import (
    AccuracyViolation,
    CoverageGap,
    DomainError,
    FormatError,
    InconsistentCount,
    MonotonicityViolation,
)
from .interval import RealInterval
from .mellin import MellinContext, b_bound, re_phihat_line

HEADER_RE = re.compile(r"^#\s*zeta-zeros\s+v1\s+abs_err=(\S+)\s+rh_height=(\S+)\s*$")
BINARY_MAGIC = b"ZZEROS\x00\x01"


@dataclass(frozen=True)
class ZeroRecord:
    ordinate: RealInterval
    index: int
    text: str  # exact decimal as stored

    @property
    def center(self) -> Fraction:
        return Fraction(self.text)


@dataclass
class ZeroTable:
    abs_err: str
    rh_height: str
    records: List[ZeroRecord] = field(default_factory=list)

    @property
    def count(self):
        return len(self.records)

    @property
    def max_height(self):
        return Fraction(self.records[-1].text) if self.records else Fraction(0)

    @property
    def abs_err_value(self) -> Fraction:
        return Fraction(self.abs_err)

    @property
    def rh_height_value(self) -> Fraction:
        return Fraction(self.rh_height)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def count_below(self, t) -> int:
        """Number of stored ordinates ≤ t (by centre)."""
        t = Fraction(t) if not isinstance(t, Fraction) else t
        lo, hi = 0, len(self.records)
        while lo < hi:
            mid = (lo + hi) // 2
            if Fraction(self.records[mid].text) <= t:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def header(self) -> str:
        return "# zeta-zeros v1 abs_err=%s rh_height=%s" % (self.abs_err, self.rh_height)


def _parse_decimal(s: str, lineno: int) -> Fraction:
    try:
        d = Decimal(s)
    except InvalidOperation:
        raise FormatError("line %d: not a decimal number: %r" % (lineno, s)) from None
    if not d.is_finite():
        raise FormatError("line %d: non-finite value" % lineno)
    return Fraction(d)


def _half_ulp(s: str) -> Fraction:
    """Half a unit in the last written digit of a decimal string."""
    d = Decimal(s)
    exp = d.as_tuple().exponent
    return Fraction(1, 2) * Fraction(10) ** exp


def _parse_header(line: str):
    m = HEADER_RE.match(line.strip())
    if not m:
        raise FormatError("missing or malformed zero-file header")
    abs_err, rh = m.group(1), m.group(2)
    e = _parse_decimal(abs_err, 1)
    _parse_decimal(rh, 1)
    if e <= 0:
        raise AccuracyViolation("abs_err must be positive")
    return abs_err, rh


def _make_record(text: str, index: int, err: Fraction) -> ZeroRecord:
    c = Fraction(text)
    return ZeroRecord(RealInterval(c - err, c + err), index, text)


def iter_zeros(source) -> Iterator[ZeroRecord]:
    """Stream validated records from a text zero file (path or file object)."""
    table = load_zeros(source)
    return iter(table.records)


def load_zeros(source) -> ZeroTable:
    """Read a zero table (text or binary, detected by magic bytes)."""
    if isinstance(source, (bytes, bytearray)):
        return _load_binary(io.BytesIO(source))
    if isinstance(source, str) and "\n" not in source:
        with open(source, "rb") as fh:
            head = fh.read(len(BINARY_MAGIC))
        if head == BINARY_MAGIC:
            with open(source, "rb") as fh:
                return _load_binary(fh)
        with open(source, encoding="ascii") as fh:
            return _load_text(fh)
    if hasattr(source, "read"):
        return _load_text(source)
    if isinstance(source, str):
        return _load_text(io.StringIO(source))
    raise TypeError("unsupported zero source")


def _load_text(fh) -> ZeroTable:
    first = fh.readline()
    if first == "":
        return ZeroTable("1", "0", [])
    abs_err, rh = _parse_header(first)
    err = Fraction(abs_err)
    table = ZeroTable(abs_err, rh)
    prev = None
    for lineno, line in enumerate(fh, start=2):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        c = _parse_decimal(s, lineno)
        if _half_ulp(s) > err:
            raise AccuracyViolation("line %d: %r is written with fewer digits than abs_err" % (lineno, s))
        if c <= 0:
            raise FormatError("line %d: ordinate must be positive" % lineno)
        if prev is not None and c - err <= prev + err:
            raise MonotonicityViolation("line %d: ordinates not strictly increasing" % lineno)
        table.records.append(_make_record(s, len(table.records), err))
        prev = c
    return table


def store_zeros(table: ZeroTable, target=None) -> str:
    """Write the text form; returns the text (and writes it to target if given)."""
    lines = [table.header()] + [r.text for r in table.records]
    text = "\n".join(lines) + "\n"
    if target is not None:
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", encoding="ascii") as fh:
                fh.write(text)
    return text


def _to_fixed(text: str):
    c = Fraction(text)
    ip = int(c)
    frac = c - ip
    scaled = frac * 2**64
    num = round(scaled)
    if num == 2**64:
        ip, num = ip + 1, 0
    return ip, num, (Fraction(num, 2**64) + ip) != c


def _fixed_text(ip: int, num: int) -> str:
    # exact decimal expansion of ip + num/2^64
    if num == 0:
        return "%d.0" % ip
    digits = str(num * 5**64).rjust(64, "0").rstrip("0")
    return "%d.%s" % (ip, digits)


def store_zeros_binary(table: ZeroTable, target=None) -> bytes:
    """Binary form: magic, length-prefixed header, then (uint64, uint64) fixed-point records."""
    recs = []
    inexact = False
    for r in table.records:
        ip, num, lossy = _to_fixed(r.text)
        inexact |= lossy
        recs.append((ip, num))
    abs_err = table.abs_err
    if inexact:
        # rounding to 2^-64 adds at most 2^-65; widen the declared error
        widened = Fraction(abs_err) + Fraction(1, 2**64)
        abs_err = _decimal_up(widened)
    header = ("# zeta-zeros v1 abs_err=%s rh_height=%s" % (abs_err, table.rh_height)).encode("ascii")
    out = io.BytesIO()
    out.write(BINARY_MAGIC)
    out.write(struct.pack("<I", len(header)))
    out.write(header)
    out.write(struct.pack("<Q", len(recs)))
    for ip, num in recs:
        out.write(struct.pack("<QQ", ip, num))
    data = out.getvalue()
    if target is not None:
        if hasattr(target, "write"):
            target.write(data)
        else:
            with open(target, "wb") as fh:
                fh.write(data)
    return data


def _decimal_up(q: Fraction, digits: int = 6) -> str:
    """Short decimal string ≥ q."""
    exp = math.floor(math.log10(q)) - digits + 1
    scale = Fraction(10) ** (-exp)
    m = math.ceil(q * scale)
    return str(Decimal(m).scaleb(exp))


def _load_binary(fh) -> ZeroTable:
    magic = fh.read(len(BINARY_MAGIC))
    if magic != BINARY_MAGIC:
        raise FormatError("bad binary zero-file magic")
    try:
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = fh.read(hlen).decode("ascii")
        abs_err, rh = _parse_header(header)
        (n,) = struct.unpack("<Q", fh.read(8))
    except struct.error:
        raise FormatError("truncated binary zero file") from None
    err = Fraction(abs_err)
    if Fraction(1, 2**65) > err:
        raise AccuracyViolation("abs_err is finer than the binary resolution")
    table = ZeroTable(abs_err, rh)
    prev = None
    for k in range(n):
        chunk = fh.read(16)
        if len(chunk) != 16:
            raise FormatError("truncated binary zero file")
        ip, num = struct.unpack("<QQ", chunk)
        text = _fixed_text(ip, num)
        c = Fraction(text)
        if prev is not None and c - err <= prev + err:
            raise MonotonicityViolation("record %d: ordinates not strictly increasing" % k)
        table.records.append(_make_record(text, k, err))
        prev = c
    return table


# ---------------------------------------------------------------------------
# counting bounds


def nt_bound(t):
    """(lower, upper) enclosures of main − Q and main + Q for N(t)."""
    t = iv.coerce(t)
    if t.lo < 2:
        raise DomainError("nt_bound needs t >= 2")
    two_pi = iv.const_pi().mul_2exp(1)
    lt = iv.log(t)
    main = t / two_pi * (iv.log(t / two_pi) - 1) + RealInterval(Fraction(7, 8))
    Q = RealInterval(Fraction(137, 1000)) * lt + RealInterval(Fraction(443, 1000)) * iv.log(lt) \
        + RealInterval(Fraction(1588, 1000))
    return main - Q, main + Q


def _upper_sup(a: RealInterval, b: RealInterval):
    """Upper bound of main+Q over [a, b] (main is convex, Q increasing)."""
    _, ua = nt_bound(a)
    _, ub = nt_bound(b)
    return max(ua.hi, ub.hi)


def _alpha_ok(alpha: Fraction, T: float) -> bool:
    """Certify t^α ≥ upper(t) for all t ≥ T.

    On a cell [a, b] it is enough that a^α ≥ sup upper.  Past
    t_c = 2π e^{α/(α−1)} the function α log t − log upper(t) is increasing,
    so cells are only needed up to t_c.
    """
    if alpha <= 1:
        return False
    a_iv = RealInterval(alpha)
    t_c = 2 * math.pi * math.exp(float(alpha) / (float(alpha) - 1)) * 1.001
    lo = Fraction(T).limit_denominator(10**6)
    if lo > T:
        lo = Fraction(math.floor(T * 10**6), 10**6)
    ratio = Fraction(2)
    while float(lo) <= t_c:
        lo_iv = RealInterval(lo)
        lhs = iv.exp(a_iv * iv.log(lo_iv)).lo
        while lhs < _upper_sup(lo_iv, RealInterval(lo * ratio)):
            ratio = 1 + (ratio - 1) / 2
            if ratio - 1 < Fraction(1, 10**6):
                return False
        lo = lo * ratio
        ratio = min(Fraction(2), 1 + (ratio - 1) * 2)
    return True


@lru_cache(maxsize=None)
def _alpha_cached(T: float, step: Fraction):
    a = Fraction(1) + step
    while a <= 2:
        if _alpha_ok(a, T):
            return a
        a += step
    raise DomainError("no alpha <= 2 found")


def alpha_for(T, step=Fraction(1, 200)) -> float:
    """Smallest α on a 1/200 grid with t^α ≥ upper envelope of N(t) for every t ≥ T."""
    T = float(T)
    if T < 2:
        raise DomainError("alpha_for needs T >= 2")
    return float(_alpha_cached(T, Fraction(step)))


@dataclass(frozen=True)
class TruncationBudget:
    T1: float
    T2: float
    alpha_T1: float = None
    alpha_T2: float = None

    def __post_init__(self):
        if not (2 <= self.T1 <= self.T2):
            raise ValueError("need 2 <= T1 <= T2")
        if self.alpha_T1 is None:
            object.__setattr__(self, "alpha_T1", alpha_for(self.T1))
        if self.alpha_T2 is None:
            object.__setattr__(self, "alpha_T2", alpha_for(self.T2))


def check_count(T, n: int):
    lower, upper = nt_bound(RealInterval(T))
    if n < lower.lo or n > upper.hi:
        raise InconsistentCount("zero count %d at T=%s is outside [%.3f, %.3f]" % (
            n, T, float(lower.lo), float(upper.hi)))


def _tail_factor(T: RealInterval, alpha, count, ctx: MellinContext) -> RealInterval:
    lam2T2 = ctx.lam2 * T.sqr()
    a = RealInterval(Fraction(alpha))
    Tpow = iv.exp((2 - a) * iv.log(T))
    return (lam2T2 + 2) / (ctx.lam2 * Tpow) - count


def e1_bound(budget: TruncationBudget, N_T1, ctx: MellinContext) -> RealInterval:
    """[0, E1] for zeros with ordinates in (T1, ∞) on the critical line."""
    T = RealInterval(budget.T1)
    count = _count_arg(budget.T1, N_T1)
    g = iv.exp(ctx.lam2 * (1 - T.sqr()) / 2)
    k = iv.sqrt(ctx.x) / (T * ctx.log_x) + 1 / (ctx.lam2 * T.sqr() * ctx.x)
    val = (g * k * _tail_factor(T, budget.alpha_T1, count, ctx)).mul_2exp(1)
    return RealInterval._make(gmpy2.mpfr(0), max(val.hi, gmpy2.mpfr(0)))


def e2_bound(budget: TruncationBudget, N_T2, ctx: MellinContext) -> RealInterval:
    """[0, E2] for zeros above T2 with unknown real part."""
    T = RealInterval(budget.T2)
    count = _count_arg(budget.T2, N_T2)
    g = iv.exp(ctx.lam2 * (1 - T.sqr()) / 2)
    k = (ctx.x + 1) / (T * ctx.log_x) + 2 / (ctx.lam2 * T.sqr() * ctx.x)
    val = g * k * _tail_factor(T, budget.alpha_T2, count, ctx)
    return RealInterval._make(gmpy2.mpfr(0), max(val.hi, gmpy2.mpfr(0)))


def _count_arg(T, n):
    """Zero count as an interval; None means 'use the envelope's lower end'."""
    if n is None:
        lower, _ = nt_bound(RealInterval(T))
        return RealInterval(max(0, iv._ceil(lower.lo)))
    check_count(T, int(n))
    return RealInterval(int(n))


def zeros_up_to(table: ZeroTable, T1) -> List[ZeroRecord]:
    if Fraction(T1) > table.max_height:
        raise CoverageGap("zero table reaches %s, need %s" % (float(table.max_height), T1))
    return table.records[: table.count_below(Fraction(T1))]


def sum_re_phihat(zeros: Iterable[ZeroRecord], budget: TruncationBudget, ctx: MellinContext, anchor_T,
                  *, table_max=None, tol=None) -> RealInterval:
    """Σ_{0<γ≤T1} 2 Re Φ̂(½+iγ) over the given zeros."""
    zs = [z for z in zeros if z.ordinate.hi <= budget.T1 or z.ordinate.lo <= budget.T1]
    if table_max is not None and Fraction(table_max) < Fraction(budget.T1):
        raise CoverageGap("zeros do not reach T1")
    if not zs:
        return RealInterval(0)
    zs.sort(key=lambda z: z.ordinate.lo)
    vals = re_phihat_line(Fraction(1, 2), [z.ordinate for z in zs], ctx, anchor_T, tol=tol)
    acc = RealInterval(0)
    for v in vals:
        acc = acc + v
    return acc.mul_2exp(1)


__all__ = [
    "ZeroRecord",
    "ZeroTable",
    "load_zeros",
    "iter_zeros",
    "store_zeros",
    "store_zeros_binary",
    "nt_bound",
    "alpha_for",
    "TruncationBudget",
    "check_count",
    "b_bound",
    "e1_bound",
    "e2_bound",
    "zeros_up_to",
    "sum_re_phihat",
]
