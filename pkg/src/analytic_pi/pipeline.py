"""Full π(x) run: parameter choice, explicit-formula assembly, ledger, report.

    π*(x) = Φ̂(1) − Σ_{0<γ≤T1} 2 Re Φ̂(½+iγ) − log 2 + Σ_window (χ_x − φ)(p^m)/m
            ± (−1-line bound + E1 + E2 + window tail)

and π(x) is recovered from π*(x) by removing the exact higher prime-power
contributions.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional

import gmpy2

from . import interval as iv
from . import mellin, sieve, zeros
from .errors import (BudgetExceeded, CoverageGap, FormatError, Infeasible, ParamViolation)
from .interval import RealInterval

LEDGER_KEYS = ("e1", "e2", "window_tail", "minus_one_line", "phihat_anchor", "rounding_slack")

DEFAULT_SHARES = {
    "e1": Fraction(1, 8),
    "e2": Fraction(1, 64),
    "window_tail": Fraction(1, 8),
    "minus_one_line": Fraction(1, 64),
    "phihat_anchor": Fraction(1, 32),
    "rounding_slack": Fraction(1, 16),
}

ZERO_BLOCK = 128


# ---------------------------------------------------------------------------
# λ as a binary rational


_LAMBDA_RE = re.compile(r"^\s*([0-9]+)\s*[x*]\s*2\s*\^\s*\(?\s*(-?[0-9]+)\s*\)?\s*$")


def parse_lambda(text: str) -> Fraction:
    """'6273445730170391x2^-84' or a plain decimal."""
    m = _LAMBDA_RE.match(text)
    if m:
        mant, e = int(m.group(1)), int(m.group(2))
        return Fraction(mant) * Fraction(2) ** e
    try:
        v = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise FormatError("cannot parse lambda %r" % text)
    if v <= 0:
        raise FormatError("lambda must be positive")
    return v


def format_lambda(lam: Fraction) -> str:
    den = lam.denominator
    if den & (den - 1):
        return str(lam)
    num = lam.numerator
    e = -(den.bit_length() - 1)
    while num % 2 == 0 and num:
        num //= 2
        e += 1
    return "%dx2^%d" % (num, e)


def _binary_up(v: float, bits: int = 53) -> Fraction:
    """Smallest bits-bit binary rational ≥ v."""
    m, e = math.frexp(v)
    scale = bits - e
    q = Fraction(v) * Fraction(2) ** scale
    mant = math.ceil(q)
    return Fraction(mant) / Fraction(2) ** scale


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    x: int
    zeros: Optional[str] = None
    lam: Optional[Fraction] = None
    t1: Optional[Fraction] = None
    t2: Optional[Fraction] = None
    window_k: Optional[Fraction] = None
    segment_width: Optional[int] = None
    precision_bits: int = 128
    threads: int = 1
    checkpoint_dir: Optional[str] = None
    report: Optional[str] = None
    shares: Dict[str, Fraction] = field(default_factory=lambda: dict(DEFAULT_SHARES))

    def validate(self):
        if not isinstance(self.x, int) or self.x < 2:
            raise ParamViolation("x must be an integer >= 2")
        for k in self.shares:
            if k not in LEDGER_KEYS:
                raise ParamViolation("unknown budget share %r" % k)
        if any(v <= 0 for v in self.shares.values()):
            raise ParamViolation("budget shares must be positive")
        if sum(self.shares.values()) >= Fraction(1, 2):
            raise ParamViolation("budget shares must sum to less than 1/2")
        if self.precision_bits < 53:
            raise ParamViolation("precision must be at least 53 bits")
        if self.threads < 1:
            raise ParamViolation("threads must be >= 1")
        if self.segment_width is not None and self.segment_width < 1:
            raise ParamViolation("segment width must be positive")
        return self

    def echo(self) -> dict:
        d = {"x": str(self.x)}
        if self.zeros is not None:
            d["zeros"] = self.zeros
        if self.lam is not None:
            d["lambda"] = format_lambda(self.lam)
        if self.t1 is not None:
            d["t1"] = _dec(self.t1)
        if self.t2 is not None:
            d["t2"] = _dec(self.t2)
        if self.window_k is not None:
            d["window_k"] = str(self.window_k)
        if self.segment_width is not None:
            d["segment_width"] = self.segment_width
        d["precision_bits"] = self.precision_bits
        d["threads"] = self.threads
        d["shares"] = {k: str(self.shares[k]) for k in LEDGER_KEYS if k in self.shares}
        return d


_CONFIG_KEYS = {
    "x": "x",
    "lambda": "lam",
    "zeros": "zeros",
    "t1": "t1",
    "t2": "t2",
    "window-k": "window_k",
    "segment-width": "segment_width",
    "precision-bits": "precision_bits",
    "threads": "threads",
    "checkpoint-dir": "checkpoint_dir",
    "report": "report",
}


def _convert(attr, value: str):
    try:
        if attr == "x":
            return int(Fraction(value)) if Fraction(value).denominator == 1 else _bad(value)
        if attr == "lam":
            return parse_lambda(value)
        if attr in ("t1", "t2", "window_k"):
            return Fraction(value)
        if attr in ("segment_width", "precision_bits", "threads"):
            return int(value)
    except (ValueError, ZeroDivisionError):
        raise FormatError("bad value %r" % value)
    return value


def _bad(value):
    raise FormatError("bad integer %r" % value)


def parse_config(text: str) -> dict:
    """Line-oriented 'key = value' text; keys mirror the CLI flags."""
    out = {}
    shares = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError("line %d: expected 'key = value'" % lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lower().replace("_", "-")
        if key.startswith("share."):
            name = key[6:].replace("-", "_")
            if name not in LEDGER_KEYS:
                raise FormatError("line %d: unknown share %r" % (lineno, name))
            try:
                shares[name] = Fraction(value)
            except ValueError:
                raise FormatError("line %d: bad share %r" % (lineno, value))
            continue
        if key not in _CONFIG_KEYS:
            raise FormatError("line %d: unknown key %r" % (lineno, key))
        out[_CONFIG_KEYS[key]] = _convert(_CONFIG_KEYS[key], value)
    if shares:
        out["shares"] = shares
    return out


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())


def make_config(values: dict) -> RunConfig:
    values = dict(values)
    shares = dict(DEFAULT_SHARES)
    shares.update(values.pop("shares", {}) or {})
    if "x" not in values:
        raise ParamViolation("x is required")
    return RunConfig(shares=shares, **values).validate()


# ---------------------------------------------------------------------------
# ledger and result


@dataclass
class ErrorLedger:
    e1: RealInterval = field(default_factory=lambda: RealInterval(0))
    e2: RealInterval = field(default_factory=lambda: RealInterval(0))
    window_tail: RealInterval = field(default_factory=lambda: RealInterval(0))
    minus_one_line: RealInterval = field(default_factory=lambda: RealInterval(0))
    phihat_anchor: RealInterval = field(default_factory=lambda: RealInterval(0))
    rounding_slack: RealInterval = field(default_factory=lambda: RealInterval(0))

    def entries(self):
        return [(k, getattr(self, k)) for k in LEDGER_KEYS]

    @property
    def total(self):
        acc = RealInterval(0)
        for _, v in self.entries():
            acc = acc + RealInterval._make(v.hi, v.hi)
        return acc.hi


@dataclass
class PiResult:
    x: int
    pi_star: RealInterval
    pi: int
    ledger: ErrorLedger
    provenance: dict
    config: dict
    params: dict
    timings: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# parameter selection


def _e1_at(x, lam, budget, N_T1):
    ctx = mellin.MellinContext(x, lam)
    return zeros.e1_bound(budget, N_T1, ctx).hi


def _e2_at(x, lam, budget, N_T2):
    ctx = mellin.MellinContext(x, lam)
    return zeros.e2_bound(budget, N_T2, ctx).hi


def choose_lambda(x: int, T1, budget, *, N_T1=None, T2=None, N_T2=None, e2_budget=None,
                  m1_budget=None, lam_max=Fraction(1)) -> Fraction:
    """Smallest 53-bit binary λ (up to bisection tolerance) with E1 < budget/2.

    The other half of the budget is left for the window tail, which can always
    be met by widening the window (see choose_window_k).  If e2_budget or
    m1_budget are given, E2 at T2 and the −1-line bound must also stay below
    them.  All three bounds decrease as λ grows.
    """
    T1 = float(T1)
    if T1 < 100:
        raise ParamViolation("T1 must be at least 100")
    T2 = T1 if T2 is None else float(T2)
    tb = zeros.TruncationBudget(T1, T2)
    half = gmpy2.mpfr(Fraction(budget) / 2)
    e2_lim = None if e2_budget is None else gmpy2.mpfr(Fraction(e2_budget))
    m1_lim = None if m1_budget is None else gmpy2.mpfr(Fraction(m1_budget))

    def ok(lam):
        if _e1_at(x, lam, tb, N_T1) >= half:
            return False
        if e2_lim is not None and _e2_at(x, lam, tb, N_T2) >= e2_lim:
            return False
        if m1_lim is not None and mellin.minus_one_line_bound(mellin.MellinContext(x, lam)).hi >= m1_lim:
            return False
        return True

    hi = 1.0 / T1
    while not ok(Fraction(hi)):
        hi *= 2
        if hi > lam_max:
            raise Infeasible("no lambda <= %s meets the budget at T1=%s" % (float(lam_max), T1))
    lo = hi / 2
    while ok(Fraction(lo)):
        hi = lo
        lo /= 2
        if lo < 1e-300:
            break
    # bisection on log λ
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if ok(Fraction(mid)):
            hi = mid
        else:
            lo = mid
        if hi / lo < 1 + 1e-12:
            break
    lam = _binary_up(hi)
    if not ok(lam):
        raise Infeasible("rounded lambda fails the budget")
    return lam


def default_segment_width(x: int, lam) -> int:
    return 2 * max(int(Fraction(lam) * x / 200), 0) + 1


def choose_window_k(x: int, lam, share, segment_width: int, k_max=64) -> Fraction:
    """Smallest k on a 1/8 grid whose window tail is below share."""
    ctx = mellin.MellinContext(x, lam)
    share = gmpy2.mpfr(Fraction(share))
    k = Fraction(1, 8)
    while k <= k_max:
        w = sieve.window_for(x, lam, k, segment_width)
        if sieve.window_tail_bound(w, ctx).hi < share:
            return k
        k += Fraction(1, 8)
    raise Infeasible("window tail stays above its share for k <= %s" % k_max)


# ---------------------------------------------------------------------------
# zero sum in independent blocks


def _zero_block(args):
    x, lam, bits, top, heights = args
    with iv.precision(bits):
        ctx = mellin.MellinContext(x, lam)
        top_iv = RealInterval._make(top, top)
        vals, state = mellin.re_phihat_line(Fraction(1, 2), heights, ctx, top_iv, start=RealInterval(0),
                                            return_state=True)
        acc = RealInterval(0)
        for v in vals:
            acc = acc + v
        return acc, state.re_phihat, state.t


def _mp_text(v) -> str:
    n, d = gmpy2.mpfr(v).as_integer_ratio()
    return "%d/%d" % (n, d)


def _mp_parse(text: str, bits: int):
    n, d = text.split("/")
    return gmpy2.mpfr(gmpy2.mpq(int(n), int(d)), bits)


def _iv_text(a: RealInterval) -> str:
    return "%s %s" % (_mp_text(a.lo), _mp_text(a.hi))


def _iv_parse(lo: str, hi: str, bits: int) -> RealInterval:
    return RealInterval._make(_mp_parse(lo, bits), _mp_parse(hi, bits))


def zero_sum_blocks(records, ctx_args, anchor, *, threads=1, checkpoint=None, key="", block=ZERO_BLOCK):
    """Σ 2 Re Φ̂(½+iγ) split into blocks integrated relative to their tops.

    Returns (sum, count).  Block results are exact binary values, so a
    resumed run reproduces an uninterrupted one bit for bit.
    """
    x, lam, bits = ctx_args
    recs = sorted(records, key=lambda r: r.ordinate.lo)
    # blocks from the top down; block b spans (bottom_b, top_b]
    chunks = []
    end = len(recs)
    while end > 0:
        start = max(0, end - block)
        chunks.append(recs[start:end])
        end = start
    tops = []
    top = gmpy2.mpfr(anchor)
    for ch in chunks:
        tops.append(top)
        top = ch[0].ordinate.hi
    done = _read_zero_checkpoint(checkpoint, key, bits)
    todo = [b for b in range(len(chunks)) if b not in done]
    args = [(x, lam, bits, tops[b], [r.ordinate for r in chunks[b]]) for b in todo]
    fh = None
    if checkpoint:
        fresh = not os.path.exists(checkpoint) or not done
        fh = open(checkpoint, "w") if fresh else sieve.open_for_append(checkpoint)
        if fresh:
            fh.write("# zero-sum key=%s\n" % key)
            fh.flush()
    try:
        if threads > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for b, res in zip(todo, pool.map(_zero_block, args)):
                    _store_block(done, b, res, fh)
        else:
            for b, a in zip(todo, args):
                _store_block(done, b, _zero_block(a), fh)
    finally:
        if fh:
            fh.close()
    return done, chunks


def _store_block(done, b, res, fh):
    acc, delta, _ = res
    done[b] = (acc, delta)
    if fh:
        fh.write("%d %s %s\n" % (b, _iv_text(acc), _iv_text(delta)))
        fh.flush()


def _read_zero_checkpoint(path, key, bits) -> dict:
    done = {}
    if not path or not os.path.exists(path):
        return done
    lines = sieve.complete_lines(path)
    if not lines or lines[0].strip() != "# zero-sum key=%s" % key:
        return {}
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 5:
            raise FormatError("bad zero-sum checkpoint record: %r" % (line,))
        b = int(parts[0])
        done[b] = (_iv_parse(parts[1], parts[2], bits), _iv_parse(parts[3], parts[4], bits))
    return done


def combine_blocks(done, chunks, start_value: RealInterval) -> RealInterval:
    """Σ over blocks of n_b·V_b + relative sums, with V_{b+1} = V_b + Δ_b."""
    V = start_value
    total = RealInterval(0)
    for b, ch in enumerate(chunks):
        acc, delta = done[b]
        total = total + V * len(ch) + acc
        V = V + delta
    return total.mul_2exp(1)


# ---------------------------------------------------------------------------
# main computation


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _float_down(q: Fraction) -> float:
    f = float(q)
    if Fraction(f) > q:
        f = math.nextafter(f, -math.inf)
    return f


@dataclass
class Plan:
    """Everything fixed before the heavy phases run."""

    x: int
    lam: Fraction
    T1: float
    T2: float
    N_T1: int
    N_T2: int
    used: list
    ctx: object
    segment_width: int
    k: Fraction
    window: object
    ledger: "ErrorLedger"
    anchor_half: float
    anchor_one: float
    B_half: RealInterval
    B_one: RealInterval
    table: object

    def summary(self) -> dict:
        return {
            "lambda": format_lambda(self.lam),
            "t1": _dec(Fraction(self.T1)),
            "t2": _dec(Fraction(self.T2)),
            "window_k": str(self.k),
            "x1": str(self.window.x1),
            "x2": str(self.window.x2),
            "segment_width": self.segment_width,
            "anchor_half": _dec(Fraction(self.anchor_half)),
            "anchor_one": _dec(Fraction(self.anchor_one)),
            "zeros_used": len(self.used),
        }


def plan(config: RunConfig, table: zeros.ZeroTable = None, check_shares: bool = True) -> Plan:
    """Choose λ, T1, T2 and the window, and evaluate every a-priori ledger entry.

    Must be called inside the run's precision context.
    """
    config.validate()
    x = config.x
    shares = config.shares
    if table is None:
        if config.zeros is None:
            raise ParamViolation("a zero file is required")
        table = zeros.load_zeros(config.zeros)
    rh = table.rh_height_value
    T2 = Fraction(config.t2) if config.t2 is not None else rh
    if T2 > rh:
        raise CoverageGap("T2 exceeds the file's rh_height")
    T1 = Fraction(config.t1) if config.t1 is not None else T2
    if T1 > T2:
        raise ParamViolation("need T1 <= T2")
    T1f, T2f = _float_down(T1), _float_down(T2)
    T1f = _clear_of_zeros(table, T1f)
    if T1f < 100:
        raise ParamViolation("T1 must be at least 100")
    T2f = max(T2f, T1f)
    N_T1 = table.count_below(Fraction(T1f))
    N_T2 = table.count_below(Fraction(T2f))
    used = table.records[:N_T1]
    tb = zeros.TruncationBudget(T1f, T2f)

    if config.lam is None:
        lam = choose_lambda(x, T1f, shares["e1"] * 2, N_T1=N_T1, T2=T2f, N_T2=N_T2,
                            e2_budget=shares["e2"], m1_budget=shares["minus_one_line"])
    else:
        lam = Fraction(config.lam)
    ctx = mellin.MellinContext(x, lam)
    sw = config.segment_width or default_segment_width(x, lam)
    if sw % 2 == 0:
        sw += 1
    k = Fraction(config.window_k) if config.window_k is not None else choose_window_k(x, lam, shares["window_tail"], sw)
    window = sieve.window_for(x, lam, k, sw)

    ledger = ErrorLedger()
    ledger.e1 = zeros.e1_bound(tb, N_T1, ctx)
    ledger.e2 = zeros.e2_bound(tb, N_T2, ctx)
    ledger.window_tail = sieve.window_tail_bound(window, ctx)
    ledger.minus_one_line = mellin.minus_one_line_bound(ctx)

    # anchors: Σ_zeros B(½, Ta) ≤ share/4 on each side, B(1, Ta') ≤ share/2
    count = max(len(used), 1)
    top_zero = _float_up(used[-1].ordinate.hi) if used else 1.0
    a_half = mellin.anchor_height(Fraction(1, 2), ctx, RealInterval(shares["phihat_anchor"] / (4 * count)),
                                  t_min=top_zero)
    a_one = mellin.anchor_height(1, ctx, RealInterval(shares["phihat_anchor"] / 2), t_min=1.0)
    B_half = mellin.b_bound(Fraction(1, 2), RealInterval(a_half), ctx)
    B_one = mellin.b_bound(1, RealInterval(a_one), ctx)
    ledger.phihat_anchor = RealInterval._make(gmpy2.mpfr(0), (B_half * (2 * len(used)) + B_one).hi)

    if check_shares:
        for name in ("e1", "e2", "window_tail", "minus_one_line", "phihat_anchor"):
            if getattr(ledger, name).hi >= gmpy2.mpfr(shares[name]):
                raise BudgetExceeded("%s = %.3g exceeds its share %s" % (
                    name, float(getattr(ledger, name).hi), shares[name]))
    return Plan(x, lam, T1f, T2f, N_T1, N_T2, used, ctx, sw, k, window, ledger, a_half, a_one,
                B_half, B_one, table)


def compute_pi_star(config: RunConfig, table: zeros.ZeroTable = None):
    """Enclosure of π*(x) with its error ledger and run parameters."""
    config.validate()
    x = config.x
    bits = config.precision_bits
    timings = {}
    t_start = time.perf_counter()
    with iv.precision(bits):
        p = plan(config, table)
        table, lam, ctx, used, window, sw, ledger = p.table, p.lam, p.ctx, p.used, p.window, p.segment_width, p.ledger
        a_half, a_one, B_half, T1f = p.anchor_half, p.anchor_one, p.B_half, p.T1
        timings["parameters"] = time.perf_counter() - t_start

        t0 = time.perf_counter()
        key = hashlib.sha256(repr((x, str(lam), bits, a_half, T1f, len(used), ZERO_BLOCK,
                                   [r.text for r in used[-3:]])).encode()).hexdigest()[:24]
        ckpt = os.path.join(config.checkpoint_dir, "zerosum-%s.ckpt" % key) if config.checkpoint_dir else None
        if config.checkpoint_dir:
            os.makedirs(config.checkpoint_dir, exist_ok=True)
        done, chunks = zero_sum_blocks(used, (x, lam, bits), a_half, threads=config.threads,
                                       checkpoint=ckpt, key=key)
        zsum = combine_blocks(done, chunks, B_half.hull(-B_half))
        timings["zeros"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        phi1 = mellin.phihat_at_one(ctx, a_one)
        timings["phihat_one"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        sck = None
        if config.checkpoint_dir:
            sck = os.path.join(config.checkpoint_dir, "sieve-%d-%d-%d-%d.ckpt" % (x, window.x1, window.x2, sw))
        segs = sieve.sieve_window(window, x, checkpoint=sck, workers=config.threads)
        powers = sieve.prime_power_terms(window, x)
        wsum = sieve.window_sum(window, segs, powers, ctx, x)
        timings["sieve"] = time.perf_counter() - t0

        charged = ledger.e1.hi
        u = iv._ctx()[1]
        for name in ("e2", "window_tail", "minus_one_line"):
            charged = u.add(charged, getattr(ledger, name).hi)
        core = phi1 - zsum - iv.const_log2() + wsum
        pi_star = core.inflate(charged)
        # what is left of the half-width after the named terms
        named = u.add(charged, ledger.phihat_anchor.hi)
        slack = iv._ctx()[1].sub(pi_star.rad, named)
        ledger.rounding_slack = RealInterval._make(gmpy2.mpfr(0), max(slack, gmpy2.mpfr(0)))

    params = p.summary()
    params["segments"] = len(segs)
    prov = {
        "abs_err": table.abs_err,
        "rh_height": table.rh_height,
        "count": table.count,
    }
    if config.zeros is not None and os.path.exists(str(config.zeros)):
        prov = {"path": os.path.basename(str(config.zeros)), "sha256": _file_digest(config.zeros), **prov}
    timings["total"] = time.perf_counter() - t_start
    return pi_star, ledger, {"params": params, "provenance": prov, "timings": timings}


def _float_up(v) -> float:
    f = float(v)
    if gmpy2.mpfr(f) < v:
        f = math.nextafter(f, math.inf)
    return f


def _q(v) -> Fraction:
    n, d = gmpy2.mpfr(v).as_integer_ratio()
    return Fraction(int(n), int(d))


def _clear_of_zeros(table, T: float) -> float:
    """Move T down until no ordinate interval straddles it."""
    Tq = Fraction(T)
    n = table.count_below(Tq)
    for idx in (n - 1, n):
        if 0 <= idx < table.count:
            o = table.records[idx].ordinate
            lo, hi = _q(o.lo), _q(o.hi)
            if lo <= Tq <= hi:
                return _float_down(lo - Fraction(1, 10**9))
    return T


# ---------------------------------------------------------------------------
# π* → π


def _prime_count(n: int) -> int:
    if n < 2:
        return 0
    return len(sieve.small_primes(n))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in sieve.small_primes(math.isqrt(n) + 1):
        p = int(p)
        if p * p > n:
            break
        if n % p == 0:
            return False
    return True


def prime_power_exponent(x: int) -> int:
    """m if x = p^m for a prime p, else 0."""
    for m in range(max(x.bit_length(), 1), 0, -1):
        r = gmpy2.iroot(x, m)
        if r[1] and _is_prime(int(r[0])):
            return m
    return 0


def higher_power_correction(x: int) -> Fraction:
    """Σ_{m≥2} π(x^{1/m})/m minus the half weight lost when x is a prime power."""
    corr = Fraction(0)
    m = 2
    while 2**m <= x:
        corr += Fraction(_prime_count(int(gmpy2.iroot(x, m)[0])), m)
        m += 1
    m0 = prime_power_exponent(x)
    if m0:
        corr -= Fraction(1, 2 * m0)
    return corr


def recover_pi(pi_star: RealInterval, x: int) -> int:
    return iv.unique_integer(pi_star - RealInterval(higher_power_correction(int(x))))


def pi_star_direct(x: int) -> Fraction:
    """Σ_{p^m ≤ x} 1/m with half weight at p^m = x, by enumeration (small x only)."""
    total = Fraction(0)
    for p in sieve.small_primes(x):
        p = int(p)
        q, m = p, 1
        while q <= x:
            total += Fraction(1, 2 * m) if q == x else Fraction(1, m)
            q *= p
            m += 1
    return total


def run(config: RunConfig, table=None) -> PiResult:
    pi_star, ledger, info = compute_pi_star(config, table)
    with iv.precision(config.precision_bits):
        pi = recover_pi(pi_star, config.x)
    return PiResult(config.x, pi_star, pi, ledger, info["provenance"], config.echo(), info["params"],
                    info["timings"])


# ---------------------------------------------------------------------------
# report


def _dec(v) -> str:
    """Exact decimal for a binary (or any terminating) rational."""
    if isinstance(v, Fraction):
        q = v
    else:
        n, d = gmpy2.mpfr(v).as_integer_ratio()
        q = Fraction(int(n), int(d))
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return str(q)
    digits = max(twos, fives)
    scaled = q * 10**digits
    sign = "-" if scaled < 0 else ""
    n = abs(scaled.numerator)
    s = str(n).rjust(digits + 1, "0")
    return "%s%s.%s" % (sign, s[:-digits], s[-digits:])


def _dec_up(v, digits: int = 17) -> str:
    """Short decimal ≥ v (ledger entries are upper bounds)."""
    q = _q(v)
    if q <= 0:
        return "0" if q == 0 else _dec(q)
    e = len(str(q.numerator)) - len(str(q.denominator))
    while Fraction(10) ** e > q:
        e -= 1
    while Fraction(10) ** (e + 1) <= q:
        e += 1
    scaled = q * Fraction(10) ** (digits - 1 - e)
    mant = -((-scaled.numerator) // scaled.denominator)
    if mant >= 10**digits:
        mant //= 10
        e += 1
        mant += 1
    text = str(mant)
    return "%s.%se%+03d" % (text[0], text[1:], e)


def report(result: PiResult, include_timing: bool = False) -> str:
    """JSON text with a fixed field order; absent values are omitted."""
    ledger = {k: _dec_up(v.hi) for k, v in result.ledger.entries()}
    ledger["total"] = _dec_up(result.ledger.total)
    doc = {
        "x": str(result.x),
        "pi": result.pi,
        "pi_star_lo": _dec(result.pi_star.lo),
        "pi_star_hi": _dec(result.pi_star.hi),
        "ledger": ledger,
        "parameters": result.params,
        "zeros": result.provenance,
        "config": result.config,
    }
    if include_timing:
        doc["wall_time"] = {k: round(v, 3) for k, v in result.timings.items()}
    return json.dumps(_strip_none(doc), indent=2) + "\n"


def _strip_none(v):
    if isinstance(v, dict):
        return {k: _strip_none(x) for k, x in v.items() if x is not None}
    if isinstance(v, list):
        return [_strip_none(x) for x in v if x is not None]
    return v


def parse_report(text: str) -> dict:
    doc = json.loads(text)
    doc["pi_star"] = (Fraction(doc["pi_star_lo"]), Fraction(doc["pi_star_hi"]))
    return doc


__all__ = [
    "RunConfig",
    "ErrorLedger",
    "PiResult",
    "DEFAULT_SHARES",
    "parse_lambda",
    "format_lambda",
    "parse_config",
    "load_config",
    "make_config",
    "choose_lambda",
    "choose_window_k",
    "default_segment_width",
    "compute_pi_star",
    "recover_pi",
    "higher_power_correction",
    "prime_power_exponent",
    "pi_star_direct",
    "run",
    "report",
    "parse_report",
]
