"""The Mellin pair φ, φ̂ and Re Φ̂ along vertical lines.

    φ(t)  = ½ erfc(log(t/x) / (√2 λ))
    φ̂(s) = x^s exp(λ² s² / 2) / s

Φ̂ is the antiderivative of φ̂ normalised so that Φ̂(σ+it) + Φ̂(σ−it) → 0.
Its limit C along a vertical line is purely imaginary, so

    Re Φ̂(σ+it) = Re Φ̂(σ+iT) − Re ∫_t^T i φ̂(σ+iu) du

and |Re Φ̂(σ+iT)| ≤ B(σ, T).  Values are produced by starting at a high
anchor T with the enclosure [−B, B] and stepping down.  Each step expands
φ̂ about the midpoint s0 of the step,

    φ̂(s0+ih) = φ̂(s0) e^{ch} exp(−λ²h²/2) / (1 + ih/s0),  c = i(s0λ² + log x),

truncates the last two factors to polynomials in h and integrates
h^n e^{ch} in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2

from . import interval as iv
from .errors import BudgetExceeded, DomainError, PoleProximity, RadiusTooLarge
from .interval import ComplexInterval, RealInterval

DEFAULT_ORDER = 16


def _exact_real(v):
    """Return v as an exact point interval (floats are taken at face value)."""
    if isinstance(v, RealInterval):
        return v
    return RealInterval(v)


class MellinContext:
    """Holds x, λ and a few cached enclosures."""

    def __init__(self, x, lam):
        self.x = iv.coerce(x)
        self.lam = iv.coerce(lam)
        if self.lam.lo <= 0:
            raise DomainError("lambda must be positive")
        if self.x.lo <= 1:
            raise DomainError("x must exceed 1")
        self.log_x = iv.log(self.x)
        self.lam2 = self.lam.sqr()
        self.sqrt2_lam = iv.sqrt(RealInterval(2)) * self.lam
        # floats for step planning only
        self.x_f = float(self.x.mid)
        self.lam_f = float(self.lam.mid)
        self.log_x_f = math.log(self.x_f)

    def __repr__(self):
        return "MellinContext(x=%s, lambda=%s)" % (self.x_f, self.lam_f)


def phi(t, ctx: MellinContext) -> RealInterval:
    """φ(t) = ½ erfc(log(t/x)/(√2 λ)), clamped to [0, 1]."""
    t = iv.coerce(t)
    if t.lo <= 0:
        raise DomainError("phi needs t > 0")
    u = (iv.log(t) - ctx.log_x) / ctx.sqrt2_lam
    v = iv.erfc(u).mul_2exp(-1)
    return v.intersect(RealInterval(0, 1))


def phihat(s, ctx: MellinContext) -> ComplexInterval:
    """φ̂(s) = x^s exp(λ²s²/2)/s."""
    s = iv.ccoerce(s)
    if s.contains_zero():
        raise PoleProximity("phihat has a pole at s = 0")
    expo = s * ctx.log_x + s.sqr() * ctx.lam2.mul_2exp(-1)
    return iv.cexp(expo) / s


def phihat_abs_bound(sigma, t_lo, ctx: MellinContext):
    """Upper bound for |φ̂(σ+it)| over all |t| ≥ t_lo ≥ 0 (as an mpfr)."""
    sigma = iv.coerce(sigma)
    t_lo = iv.coerce(t_lo)
    num = iv.exp(sigma * ctx.log_x + (sigma.sqr() - t_lo.sqr()) * ctx.lam2.mul_2exp(-1))
    den = iv.sqrt(sigma.sqr() + t_lo.sqr())
    return (num / den).hi


def shift_factorization(s0, h, ctx: MellinContext) -> ComplexInterval:
    """φ̂(s0+ih) through the shifted factorization."""
    s0 = iv.ccoerce(s0)
    h = iv.coerce(h)
    if s0.re.contains_zero():
        raise PoleProximity("shift factorization needs Re s0 != 0")
    base = phihat(s0, ctx)
    c = (s0 * ctx.lam2 + ctx.log_x).mul_i()
    osc = iv.cexp(c * h)
    gauss = iv.exp(-(ctx.lam2 * h.sqr()).mul_2exp(-1))
    denom = 1 + ComplexInterval._make(RealInterval(0), h) / s0
    return base * osc * gauss / denom


# ---------------------------------------------------------------------------
# truncated series


def ea_bound(N: int, lam_h) -> RealInterval:
    """Bound on the error of the exp(−λ²h²/2) series cut after n = N/2."""
    lam_h = iv.coerce(lam_h)
    if lam_h.hi >= 1:
        raise RadiusTooLarge("need lambda*h < 1")
    half = N // 2
    q = lam_h.sqr().mul_2exp(-1)
    return iv.pow_int(q, half) / math.factorial(half)


def eb_bound(N: int, R) -> RealInterval:
    """Bound on the error of the geometric series for 1/(1+ih/s0) cut after n = N."""
    R = iv.coerce(R)
    if R.hi >= 1:
        raise RadiusTooLarge("need |h| < |s0|")
    return iv.pow_int(R, N) / (1 - R)


@dataclass
class StepPolynomial:
    """Degree-2N polynomial p(h) with φ̂(s0+ih) ≈ φ̂(s0) e^{ch} p(h) for |h| ≤ radius."""

    coeffs: list
    s0: ComplexInterval
    radius: RealInterval
    N: int
    remainder: RealInterval  # relative error of p(h) on |h| <= radius
    e_a: RealInterval
    e_b: RealInterval
    base_value: ComplexInterval = None
    c: ComplexInterval = None
    extra: dict = field(default_factory=dict)

    @property
    def degree(self):
        return len(self.coeffs) - 1


def build_step_polynomial(s0, radius, N: int, ctx: MellinContext) -> StepPolynomial:
    s0 = iv.ccoerce(s0)
    radius = iv.coerce(radius)
    if N <= 0 or N % 2:
        raise ValueError("N must be a positive even integer")
    lam_r = ctx.lam * radius.hi
    abs_s0 = s0.abs()
    R = RealInterval(radius.hi) / RealInterval._make(abs_s0.lo, abs_s0.lo)
    if lam_r.hi >= 1 or R.hi >= 1:
        raise RadiusTooLarge("step radius violates lambda*r < 1 or r < |s0|")
    e_a = ea_bound(N, lam_r)
    e_b = eb_bound(N, R)
    rel = e_a / (1 - R) + (1 + e_a) * e_b
    rel = RealInterval._make(gmpy2.mpfr(0), rel.hi)

    # P_A(h) = sum_{n<=N/2} (-1)^n/n! (λ²/2)^n h^{2n}
    q = ctx.lam2.mul_2exp(-1)
    pa = []
    term = RealInterval(1)
    for n in range(N // 2 + 1):
        pa.append(term)
        term = -(term * q) / (n + 1)
    # P_B(h) = sum_{n<=N} (-i/s0)^n h^n
    w = (-1 / s0).mul_i()
    pb = [iv.ccoerce(1)]
    for _ in range(N):
        pb.append(pb[-1] * w)
    coeffs = [iv.ccoerce(0)] * (2 * N + 1)
    for j, a in enumerate(pa):
        for n, b in enumerate(pb):
            coeffs[2 * j + n] = coeffs[2 * j + n] + b * a
    c = (s0 * ctx.lam2 + ctx.log_x).mul_i()
    return StepPolynomial(
        coeffs=coeffs,
        s0=s0,
        radius=radius,
        N=N,
        remainder=rel,
        e_a=e_a,
        e_b=e_b,
        base_value=phihat(s0, ctx),
        c=c,
    )


def _power_exp_integrals(c: ComplexInterval, h0, h1, nmax: int):
    """I_n = ∫_{h0}^{h1} h^n e^{ch} dh for n = 0..nmax by upward recurrence."""
    h0 = iv.coerce(h0)
    h1 = iv.coerce(h1)
    e0 = iv.cexp(c * h0)
    e1 = iv.cexp(c * h1)
    inv_c = 1 / c
    out = [(e1 - e0) * inv_c]
    p0 = RealInterval(1)
    p1 = RealInterval(1)
    for n in range(1, nmax + 1):
        p0 = p0 * h0
        p1 = p1 * h1
        out.append((e1 * p1 - e0 * p0 - out[-1] * n) * inv_c)
    return out


def integrate_step(poly: StepPolynomial, h0, h1, ctx: MellinContext) -> ComplexInterval:
    """Enclosure of ∫_{h0}^{h1} i φ̂(s0+ih) dh."""
    h0 = _exact_real(h0)
    h1 = _exact_real(h1)
    r = poly.radius.hi
    if max(h0.mag(), h1.mag()) > r:
        raise RadiusTooLarge("integration range exceeds the polynomial's radius")
    if h0 == h1:
        return iv.ccoerce(0)
    nmax = poly.degree
    # the recurrence divides by |c| at every step; widen precision by the
    # worst amplification so that the top coefficients keep their accuracy
    cmag = float(poly.c.abs().lo)
    amp = max(0.0, math.lgamma(nmax + 1) - nmax * math.log(max(cmag, 1e-300))) / math.log(2)
    bits = iv.get_precision() + int(amp) + 16
    with iv.precision(bits):
        ints = _power_exp_integrals(poly.c, h0, h1, nmax)
        acc = iv.ccoerce(0)
        for a, I in zip(poly.coeffs, ints):
            acc = acc + a * I
        main = (poly.base_value * acc).mul_i()
        # remainder: |φ̂(s0)| e^{|Re c| r} * rel * length
        t0 = poly.s0.im.mag()
        growth = iv.exp(ctx.lam2 * RealInterval(t0) * RealInterval(r))
        length = abs(h1 - h0)
        rem = (poly.base_value.abs() * growth * poly.remainder * length).hi
        out = main.inflate(rem)
    # round back to working precision (outward)
    return iv.ComplexInterval._make(_reround(out.re), _reround(out.im))


def _reround(a: RealInterval) -> RealInterval:
    d, u, _ = iv._ctx()
    return RealInterval._make(d.plus(a.lo), u.plus(a.hi))


# ---------------------------------------------------------------------------
# bounds used by the line evaluation


def b_bound(sigma, T, ctx: MellinContext) -> RealInterval:
    """B(σ,T) = exp(λ²(1−T²)/2) [x^σ/(T log x) + 1/(λ² T² x)] as [0, B]."""
    sigma = iv.coerce(sigma)
    T = iv.coerce(T)
    if T.lo <= 0:
        raise DomainError("T must be positive")
    g = iv.exp(ctx.lam2 * (1 - T.sqr()) / 2)
    xs = iv.exp(sigma * ctx.log_x)
    val = g * (xs / (T * ctx.log_x) + 1 / (ctx.lam2 * T.sqr() * ctx.x))
    return RealInterval._make(gmpy2.mpfr(0), val.hi)


def anchor_height(sigma, ctx: MellinContext, bound, t_min=1.0) -> float:
    """Smallest convenient T ≥ t_min with B(σ,T) ≤ bound, certified in intervals."""
    bound = iv.coerce(bound).lo
    if bound <= 0:
        raise BudgetExceeded("anchor bound must be positive")
    lam = ctx.lam_f
    T = max(float(t_min), 2.0 / lam, 1.0)

    def ok(T):
        return b_bound(sigma, _dyadic(T), ctx).hi <= bound

    while not ok(T):
        T *= 1.25
        if T > 1e30:
            raise BudgetExceeded("no anchor height meets the bound")
    lo = max(float(t_min), 1.0)
    if ok(lo):
        return _dyadic_float(lo)
    # bisect between lo (fails) and T (passes)
    for _ in range(40):
        mid = 0.5 * (lo + T)
        if ok(mid):
            T = mid
        else:
            lo = mid
        if T - lo < 1e-3 * T:
            break
    return _dyadic_float(math.ceil(T * 8) / 8)


def _dyadic(v: float) -> RealInterval:
    return RealInterval(float(v))


def _dyadic_float(v: float) -> float:
    return float(v)


def minus_one_line_bound(ctx: MellinContext) -> RealInterval:
    """[0, exp(λ²/2)/(2πxλ) (5√(2π) + 2/λ)]."""
    pi = iv.const_pi()
    val = iv.exp(ctx.lam2.mul_2exp(-1)) / (pi.mul_2exp(1) * ctx.x * ctx.lam)
    val = val * (5 * iv.sqrt(pi.mul_2exp(1)) + 2 / ctx.lam)
    return RealInterval._make(gmpy2.mpfr(0), val.hi)


# ---------------------------------------------------------------------------
# stepping along a vertical line


@dataclass
class LineState:
    sigma: object
    t: object
    re_phihat: RealInterval
    anchor_T: object
    anchor_bound: RealInterval


def _rel_err_float(N, lam, r, s0abs):
    R = r / s0abs
    if lam * r >= 1 or R >= 1:
        return math.inf
    ea = (lam * lam * r * r / 2) ** (N // 2) / math.factorial(N // 2)
    eb = R ** N / (1 - R)
    return ea / (1 - R) + (1 + ea) * eb


def _phihat_abs_float(sigma, t, ctx):
    lam = ctx.lam_f
    e = sigma * ctx.log_x_f + lam * lam * (sigma * sigma - t * t) / 2
    if e < -700:
        return 0.0
    return math.exp(e) / math.hypot(sigma, t)


def step_radius(sigma: float, t: float, ctx: MellinContext, tol: float, N: int = DEFAULT_ORDER,
                r_cap: float = None) -> float:
    """Largest radius (on a halving ladder) whose remainder per unit length is ≤ tol."""
    s0abs = math.hypot(sigma, t)
    lam = ctx.lam_f
    r = min(0.5 / lam, 0.5 * s0abs)
    if r_cap is not None:
        r = min(r, r_cap)
    while r > 1e-9:
        t_low = max(t - r, 0.0)
        mag = _phihat_abs_float(sigma, t_low, ctx) * math.exp(lam * lam * t * r)
        if mag * _rel_err_float(N, lam, r, s0abs) <= tol:
            return r
        r *= 0.5
    return r


def _line_plan(sigma_f, points, ctx, tol, N):
    """Split consecutive points (descending floats) into step intervals."""
    steps = []
    for a, b in zip(points[:-1], points[1:]):
        # step from a down to b (a > b)
        length = a - b
        if length <= 0:
            steps.append(None)
            continue
        pieces = []
        top = a
        # choose radii by where the step sits; work downward
        while top - b > 0:
            mid_guess = top - min(top - b, 1.0) / 2
            r = step_radius(sigma_f, mid_guess, ctx, tol, N, r_cap=(top - b) / 2)
            r = max(r, 1e-9)
            bottom = max(b, top - 2 * r)
            pieces.append((top, bottom))
            top = bottom
        steps.append(pieces)
    return steps


def re_phihat_line(sigma, heights: Sequence, ctx: MellinContext, anchor_T, *, budget=None,
                   tol: float = None, N: int = DEFAULT_ORDER, return_state: bool = False,
                   start: RealInterval = None):
    """Re Φ̂(σ+it) at each height (ascending RealIntervals or numbers).

    The value at anchor_T is taken as [−B(σ,anchor_T), B(σ,anchor_T)] and the
    line is integrated downward.  With start given, the value at anchor_T is
    start instead (anchor_T must then be an exact point); start = 0 yields
    values relative to anchor_T.  tol is the target remainder per unit of
    height; it only affects widths, never correctness.

    The returned state holds the value at the lowest height's upper end,
    before any widening for interval heights.
    """
    sigma_iv = _exact_real(sigma)
    sigma_f = float(sigma_iv.mid)
    anchor_iv = anchor_T if isinstance(anchor_T, RealInterval) else _exact_real(anchor_T)
    hs = [iv.coerce(h) for h in heights]
    for a, b in zip(hs, hs[1:]):
        if a.lo > b.lo:
            raise ValueError("heights must be sorted")
    if hs and (hs[0].lo < 0 or hs[-1].hi > anchor_iv.lo):
        raise ValueError("heights must lie in [0, anchor_T]")
    if start is None:
        B = b_bound(sigma_iv, anchor_iv, ctx)
        if budget is not None and B.hi > iv.coerce(budget).lo:
            raise BudgetExceeded("B(sigma, anchor_T) exceeds the budget share")
    else:
        if anchor_iv.lo != anchor_iv.hi:
            raise ValueError("a start value needs an exact anchor height")
        B = None
    if tol is None:
        tol = 1e-20 * max(1.0, _phihat_abs_float(sigma_f, 0.0, ctx))
        tol = min(tol, 1e-18)

    # points where we need a value: hi endpoints of each height, descending
    tops = [h.hi for h in hs]
    points = [anchor_iv.lo] + sorted(set(tops), reverse=True)
    points_f = [float(p) for p in points]
    plan = _line_plan(sigma_f, points_f, ctx, tol, N)

    value = RealInterval._make(-B.hi, B.hi) if start is None else iv.coerce(start)
    values_at = {anchor_iv.lo: value}
    for (a, b), pieces, a_exact, b_exact in zip(zip(points_f[:-1], points_f[1:]), plan, points[:-1], points[1:]):
        if not pieces and a_exact != b_exact:
            # distinct exact points that collapse in double precision
            pieces = [(a, b)]
        if pieces:
            for k, (top, bottom) in enumerate(pieces):
                # exact endpoints: first top and last bottom are the stored points
                top_e = RealInterval._make(a_exact, a_exact) if k == 0 else RealInterval(top)
                bot_e = RealInterval._make(b_exact, b_exact) if k == len(pieces) - 1 else RealInterval(bottom)
                value = value - _step_real(sigma_iv, bot_e, top_e, ctx, N)
        values_at[b_exact] = value

    out = []
    for h in hs:
        v = values_at[h.hi]
        if h.lo < h.hi:
            # Re Φ̂ varies by at most ∫|φ̂| over [lo, hi]
            m = phihat_abs_bound(sigma_iv, RealInterval._make(h.lo, h.lo), ctx)
            v = v.inflate((iv.coerce(h.width) * RealInterval._make(m, m)).hi)
        out.append(v)
    if return_state:
        low = hs[0].hi if hs else anchor_iv.lo
        state = LineState(sigma=sigma, t=low, re_phihat=values_at[low],
                          anchor_T=anchor_T, anchor_bound=B)
        return out, state
    return out


def _step_real(sigma_iv, bot: RealInterval, top: RealInterval, ctx, N):
    """Re ∫_bot^top i φ̂(σ+iu) du for exact point endpoints."""
    d, u, n = iv._ctx()
    mid_v = n.div_2exp(n.add(bot.lo, top.lo), 1)
    mid = RealInterval._make(mid_v, mid_v)
    s0 = ComplexInterval._make(sigma_iv, mid)
    h0 = bot - mid
    h1 = top - mid
    r = max(h0.mag(), h1.mag())
    poly = build_step_polynomial(s0, RealInterval._make(r, r), N, ctx)
    return integrate_step(poly, h0, h1, ctx).re


def phihat_at_one(ctx: MellinContext, anchor_T, *, budget=None, tol=None, N=DEFAULT_ORDER) -> RealInterval:
    """Φ̂(1), which is real."""
    return re_phihat_line(1, [RealInterval(0)], ctx, anchor_T, budget=budget, tol=tol, N=N)[0]


__all__ = [
    "MellinContext",
    "phi",
    "phihat",
    "phihat_abs_bound",
    "shift_factorization",
    "ea_bound",
    "eb_bound",
    "StepPolynomial",
    "build_step_polynomial",
    "integrate_step",
    "b_bound",
    "anchor_height",
    "minus_one_line_bound",
    "LineState",
    "re_phihat_line",
    "phihat_at_one",
    "step_radius",
]
