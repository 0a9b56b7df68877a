"""Windowed FFT evaluation of a Gaussian-damped Z function.

    f(t) = π^{−iT/2} Γ((½+iT)/2) exp(πT/4 − t²/2h²) ζ(½+iT),   T = t + t0,

which is real with the sign of Z(T).  The grid values f(n/A),
n = −N/2 .. N/2−1, are obtained by the chain

    g(n/A; k) → G̃^{(k)}(m) → G^{(k)}(m/B) → F(m/B) → F̃(m) → f̃(n) → f(n/A)

where every arrow either is a DFT (exact up to interval rounding) or drops
an aliasing / truncation term with an explicit bound.  The analytic bounds
are carried as scalars through the linear maps instead of being folded into
the intervals, which keeps the intervals thin.

Normalisation: G̃(m) = (1/A) Σ_n g̃(n) e(−mn/N) and f̃(n) = (1/B) Σ_m F̃(m) e(mn/N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence

import gmpy2

from . import interval as iv
from .errors import ParamViolation, RealityCheckFailed, SizeMismatch
from .interval import ComplexInterval, RealInterval

SIGMAS = (3, 5, 7, 9)
def _czero():
    return ComplexInterval._make(RealInterval(0), RealInterval(0))


def _upper(v):
    """Nonnegative upper bound as an mpfr."""
    v = iv.coerce(v)
    return max(v.hi, gmpy2.mpfr(0))


def _pi():
    return iv.const_pi()


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class GridParams:
    t0: Fraction
    h: Fraction
    A: int
    B: int
    K: int
    J: int
    sigmas: tuple = SIGMAS

    @property
    def N(self) -> int:
        return self.A * self.B

    @property
    def xi(self) -> Fraction:
        return Fraction(1, 2 * self.B)

    def validate(self):
        N = self.N
        if N <= 0 or N % 2:
            raise ParamViolation("N = A*B must be a positive even integer")
        if N & (N - 1):
            raise ParamViolation("N = A*B must be a power of two for the radix-2 DFT")
        if self.K < 1 or self.J < 1:
            raise ParamViolation("need K >= 1 and J >= 1")
        if self.h <= 0:
            raise ParamViolation("h must be positive")
        t0 = float(self.t0)
        if t0 <= math.exp(math.e):
            raise ParamViolation("t0 must exceed e^e")
        # the bound 4|2πt|^k e^{−t²/2h²} must already be decreasing at t = B/2
        if Fraction(self.B, 2) ** 2 < self.h**2 * (self.K - 1):
            raise ParamViolation("need B/2 >= h*sqrt(k) for all k < K")
        beta = _beta_float(t0)
        if not (beta * float(self.h) ** 2 / t0 <= self.B / 2 <= t0):
            raise ParamViolation("need beta*h^2/t0 <= B/2 <= t0")
        for s in self.sigmas:
            if s % 2 != 1 or s <= 1 or s >= t0 or t0 <= s + 0.5:
                raise ParamViolation("sigma values must be odd, > 1 and below t0 - 1/2")
        return self


def _beta_float(t0):
    return 1 / 6 + math.log(math.log(t0)) / math.log(t0)


def default_params(t0, **overrides) -> GridParams:
    """h = 4, A = 16, B = 64, K = 6, J = ceil(4 sqrt(t0)); B and h shrink if B/2 > t0."""
    t0 = Fraction(t0).limit_denominator(10**12) if not isinstance(t0, Fraction) else t0
    h, A, B = Fraction(4), 16, 64
    if B / 2 > t0:
        B = 1 << int(math.floor(math.log2(2 * float(t0))))
        h = Fraction(B, 16)
    vals = dict(t0=t0, h=h, A=A, B=B, K=6, J=int(math.ceil(4 * math.sqrt(float(t0)))))
    vals.update(overrides)
    vals["t0"] = Fraction(vals["t0"])
    vals["h"] = Fraction(vals["h"])
    return GridParams(**vals).validate()


@dataclass
class StageBudget:
    g_alias: object = 0
    G_alias: object = 0
    series_tail: object = 0
    taylor: object = 0
    F_alias: object = 0
    f_alias: object = 0
    rounding: object = 0

    @property
    def total(self):
        u = iv._ctx()[1]
        acc = gmpy2.mpfr(0)
        for name in ("g_alias", "G_alias", "series_tail", "taylor", "F_alias", "f_alias", "rounding"):
            acc = u.add(acc, gmpy2.mpfr(getattr(self, name)))
        return acc

    def as_dict(self):
        d = {k: _fmt_bound(v) for k, v in asdict(self).items()}
        d["total"] = _fmt_bound(self.total)
        return d


def _fmt_bound(v):
    v = gmpy2.mpfr(v)
    if v == 0:
        return "0"
    # round up to 6 significant digits
    s = "%.6e" % float(v)
    if gmpy2.mpfr(s) < v:
        m, e = s.split("e")
        s = "%.6fe%s" % (float(m) + 1e-6, e)
        s = "%.6e" % float(s)
    return s


# ---------------------------------------------------------------------------
# g and its bounds


def _T(t, params):
    return iv.coerce(t) + RealInterval(params.t0)


def g_base(t, params) -> ComplexInterval:
    """g(t; 0) = Γ((½+iT)/2) exp(πT/4 − t²/2h²)."""
    t = iv.coerce(t)
    T = _T(t, params)
    gam = iv.gamma(ComplexInterval._make(RealInterval(Fraction(1, 4)), T.mul_2exp(-1)))
    h = RealInterval(params.h)
    expo = _pi() * T / 4 - t.sqr() / (h.sqr().mul_2exp(1))
    return gam * iv.exp(expo)


def g_eval(n: int, k: int, params: GridParams) -> ComplexInterval:
    """g(n/A; k) = g(n/A; 0) (−2πi t)^k."""
    if abs(n) > params.N // 2:
        raise ParamViolation("|n| must not exceed N/2")
    t = RealInterval(Fraction(n, params.A))
    return g_base(t, params) * _mono(t, k)


def _mono(t: RealInterval, k: int) -> ComplexInterval:
    """(−2πi t)^k."""
    r = iv.pow_int(_pi().mul_2exp(1) * t, k)
    # (−i)^k cycles 1, −i, −1, i
    z = RealInterval(0)
    return [
        ComplexInterval._make(r, z),
        ComplexInterval._make(z, -r),
        ComplexInterval._make(-r, z),
        ComplexInterval._make(z, r),
    ][k % 4]


def g_trivial_bound(t, k, params) -> RealInterval:
    """4 |2πt|^k exp(−t²/2h²)."""
    t = iv.coerce(t)
    h = RealInterval(params.h)
    return 4 * iv.pow_int(abs(_pi().mul_2exp(1) * t), k) * iv.exp(-t.sqr() / h.sqr().mul_2exp(1))


def g_alias_bound(k: int, params: GridParams) -> RealInterval:
    """Bound on |Σ_{l≠0} g(n/A + lB; k)| for n in [−N/2, N/2−1]."""
    B = RealInterval(params.B)
    h = RealInterval(params.h)
    if Fraction(params.B, 2) ** 2 < params.h**2 * k:
        raise ParamViolation("need B/2 >= h*sqrt(k)")
    x = B.sqr() / (h.sqr() * 8)
    first = iv.exp(-x)
    second = iv.exp(RealInterval(Fraction(3 * k - 1, 2)) * iv.const_log2()) * iv.pow_int(h / B, k + 1) \
        * iv.incomplete_gamma(RealInterval(Fraction(k + 1, 2)), x)
    return 8 * iv.pow_int(_pi() * B, k) * (first + second)


# ---------------------------------------------------------------------------
# bounds on G^{(k)} (contour shifts)


def C_bound(sigma: int, t0, h, k: int) -> RealInterval:
    """Upper bound for C(σ, t0, h, k) from the split integral.

    Uses the two binomial sums obtained by splitting at t = σ + ½.
    """
    if sigma % 2 != 1 or sigma < 3:
        raise ParamViolation("sigma must be an odd integer >= 3")
    t0 = iv.coerce(t0)
    h = iv.coerce(h)
    if t0.lo <= sigma + 0.5:
        raise ParamViolation("need t0 > sigma + 1/2")
    M = (sigma - 1) // 2
    c = RealInterval(Fraction(2 * sigma + 1, 2))
    x = c.sqr() / (h.sqr().mul_2exp(1))
    log2 = iv.const_log2()
    s1 = RealInterval(0)
    s2 = RealInterval(0)
    for l in range(M + 1):
        binom = RealInterval(math.comb(M, l))
        tp = iv.pow_int(t0, M - l)
        a = RealInterval(Fraction(l + 1, 2))
        full = iv.gamma_real(a)
        part = full - iv.incomplete_gamma(a, x)
        part = RealInterval._make(max(part.lo, gmpy2.mpfr(0)), part.hi)
        s1 = s1 + binom * tp * iv.pow_int(h, l + 1) * iv.exp(RealInterval(Fraction(l - 1, 2)) * log2) \
            * iv.pow_int(c, k) * part
        s2 = s2 + binom * tp * iv.pow_int(h, l + k + 1) * iv.exp(RealInterval(Fraction(l + k - 1, 2)) * log2) \
            * iv.incomplete_gamma(RealInterval(Fraction(l + k + 1, 2)), x)
    pre = iv.exp(RealInterval(Fraction(6 * k + 7 - sigma, 4)) * log2) * iv.exp(RealInterval(Fraction(2 * k + 1, 2)) * iv.log(_pi())) \
        * iv.exp(RealInterval(Fraction(1, 2 * sigma)))
    return pre * (s1 + s2)


def Gk_bound(u, k: int, params: GridParams, sigma: int) -> RealInterval:
    """Envelope for |G^{(k)}(u)|."""
    u = abs(iv.coerce(u))
    h = RealInterval(params.h)
    t0 = RealInterval(params.t0)
    eight_h2 = h.sqr() * 8
    pi = _pi()
    main = C_bound(sigma, t0, h, k) * iv.exp(RealInterval((2 * sigma + 1) ** 2) / eight_h2
                                              - RealInterval(2 * sigma - 1) * pi * u)
    poles = RealInterval(0)
    for l in range((sigma - 1) // 2 + 1):
        q = RealInterval(Fraction(4 * l + 1, 2)).sqr()  # (2l+½)²
        base = iv.exp(RealInterval(Fraction(k, 2)) * iv.log(q + t0.sqr())) / math.factorial(l)
        poles = poles + base * iv.exp(RealInterval((4 * l + 1) ** 2) / eight_h2 - RealInterval(4 * l + 1) * pi * u)
    poles = poles * iv.exp(RealInterval(k + 2) * iv.const_log2() + RealInterval(k + 1) * iv.log(pi)
                           - t0.sqr() / h.sqr().mul_2exp(1))
    return main + poles


def best_over_sigma(fn, sigmas):
    best = None
    best_sigma = None
    for s in sigmas:
        try:
            v = fn(s)
        except ParamViolation:
            continue
        if best is None or v.hi < best.hi:
            best, best_sigma = v, s
    if best is None:
        raise ParamViolation("no admissible sigma")
    return best, best_sigma


def G_twid_err(k: int, params: GridParams, sigma: int) -> RealInterval:
    """Bound on |Σ_{l≠0} G^{(k)}(m/B + lA)| for m in [0, N/2]."""
    h = RealInterval(params.h)
    t0 = RealInterval(params.t0)
    A = RealInterval(params.A)
    pi = _pi()
    eight_h2 = h.sqr() * 8
    S = RealInterval(0)
    for l in range((sigma - 1) // 2 + 1):
        a = RealInterval(4 * l + 1)
        q = RealInterval(Fraction(4 * l + 1, 2)).sqr()
        term = (1 + 1 / (A * pi * a)) * iv.exp(RealInterval(Fraction(k, 2)) * iv.log(q + t0.sqr())) / math.factorial(l)
        S = S + term * iv.exp(a.sqr() / eight_h2 - A * pi * a / 2)
    first = iv.exp(RealInterval(k + 3) * iv.const_log2() + RealInterval(k + 1) * iv.log(pi)
                   - t0.sqr() / h.sqr().mul_2exp(1)) * S
    s2 = RealInterval(2 * sigma - 1)
    second = 2 * (1 + 1 / (A * pi * s2)) * C_bound(sigma, t0, h, k) \
        * iv.exp(RealInterval((2 * sigma + 1) ** 2) / eight_h2 - A * pi * s2 / 2)
    return first + second


def residue_term(params: GridParams, x=0) -> RealInterval:
    """2π^{5/4} exp(1/8h² − t0²/2h² − πx)."""
    h = RealInterval(params.h)
    t0 = RealInterval(params.t0)
    pi = _pi()
    return 2 * iv.exp(RealInterval(Fraction(5, 4)) * iv.log(pi) + 1 / (h.sqr() * 8)
                      - t0.sqr() / h.sqr().mul_2exp(1) - pi * iv.coerce(x))


def series_tail_bound(params: GridParams, sigma: int) -> RealInterval:
    """Bound on the Dirichlet terms j > J (valid for x ≥ 0)."""
    if sigma <= 1:
        raise ParamViolation("sigma must exceed 1")
    h = RealInterval(params.h)
    pi = _pi()
    s = RealInterval(sigma)
    return C_bound(sigma, params.t0, h, 0) * iv.exp(RealInterval((2 * sigma - 1) ** 2) / (h.sqr() * 8)) \
        * iv.exp(RealInterval(Fraction(1 - 2 * sigma, 4)) * iv.log(pi)) \
        * iv.exp((1 - s) * iv.log(RealInterval(params.J))) / (s - 1)


def tay_err(K: int, h, xi) -> RealInterval:
    """2^{(K+5)/2} π^{K+½} h^{K+1} ξ^K / Γ((K+2)/2)."""
    h = iv.coerce(h)
    xi = iv.coerce(xi)
    pi = _pi()
    num = iv.exp(RealInterval(Fraction(K + 5, 2)) * iv.const_log2() + RealInterval(Fraction(2 * K + 1, 2)) * iv.log(pi))
    return num * iv.pow_int(h, K + 1) * iv.pow_int(xi, K) / iv.gamma_real(RealInterval(Fraction(K + 2, 2)))


def f_hat_bound(x, params: GridParams, sigma: int) -> RealInterval:
    """Envelope for |F(x)|."""
    if not (1 < sigma < float(params.t0)):
        raise ParamViolation("need 1 < sigma < t0")
    x = abs(iv.coerce(x))
    h = RealInterval(params.h)
    pi = _pi()
    s = RealInterval(sigma)
    main = iv.zeta_real(s) * iv.exp(RealInterval(Fraction(1 - 2 * sigma, 4)) * iv.log(pi)) \
        * C_bound(sigma, params.t0, h, 0) \
        * iv.exp(RealInterval((2 * sigma - 1) ** 2) / (h.sqr() * 8) - pi * x * (2 * sigma - 1))
    return main + residue_term(params, x)


def f_hat_twid_err(params: GridParams, sigma: int) -> RealInterval:
    """Bound on |Σ_{l≠0} F(m/B + lA)| for m in [0, N/2]."""
    h = RealInterval(params.h)
    t0 = RealInterval(params.t0)
    A = RealInterval(params.A)
    pi = _pi()
    s2 = RealInterval(2 * sigma - 1)
    first = 2 * iv.zeta_real(RealInterval(sigma)) * iv.exp(RealInterval(Fraction(1 - 2 * sigma, 4)) * iv.log(pi)) \
        * C_bound(sigma, t0, h, 0) * iv.exp(s2.sqr() / (h.sqr() * 8) - A * pi * s2 / 2) * (1 + 1 / (A * pi * s2))
    second = 4 * iv.exp(RealInterval(Fraction(5, 4)) * iv.log(pi) + (1 - 4 * t0.sqr()) / (h.sqr() * 8) - pi * A / 2) \
        * (1 + 1 / (A * pi))
    return first + second


def _beta(t0) -> RealInterval:
    t0 = iv.coerce(t0)
    lt = iv.log(t0)
    return RealInterval(Fraction(1, 6)) + iv.log(lt) / lt


def f_bound(t, params: GridParams) -> RealInterval:
    """12 (t+t0)^β exp(−t²/2h²) for t ≥ 0."""
    t = iv.coerce(t)
    h = RealInterval(params.h)
    beta = _beta(RealInterval(params.t0))
    return 12 * iv.exp(beta * iv.log(t + RealInterval(params.t0))) * iv.exp(-t.sqr() / h.sqr().mul_2exp(1))


def f_twid_err(params: GridParams) -> RealInterval:
    """Bound on |Σ_{l≠0} f(n/A + lB)| over the grid."""
    h = RealInterval(params.h)
    t0 = RealInterval(params.t0)
    B = RealInterval(params.B)
    beta = _beta(t0)
    rt2 = iv.sqrt(RealInterval(2))
    X = iv.exp(beta * iv.log(B / 2 + t0)) * iv.exp(-B.sqr() / (h.sqr() * 8))
    Y = iv.exp(beta * iv.log(t0)) * iv.sqrt(_pi() / 2) * (iv.erf(t0 / (h * rt2)) - iv.erf(B / (2 * h * rt2)))
    Z = iv.exp((beta - 1) / 2 * iv.const_log2()) * iv.exp(beta * iv.log(h)) \
        * iv.incomplete_gamma((beta + 1) / 2, B.sqr() / (h.sqr() * 8))
    return 24 * (X + iv.exp(beta * iv.const_log2()) * h / B * (Y + Z))


# ---------------------------------------------------------------------------
# DFT


@lru_cache(maxsize=8)
def _twiddles(N: int, bits: int):
    """e(−j/N) for j < N/2 as complex intervals."""
    pi2 = iv.const_pi().mul_2exp(1)
    out = []
    for j in range(N // 2):
        a = pi2 * Fraction(j, N)
        out.append(ComplexInterval._make(iv.cos(a), -iv.sin(a)))
    return tuple(out)


def dft(values: Sequence[ComplexInterval], direction: int = -1) -> List[ComplexInterval]:
    """Unnormalised DFT: out[m] = Σ_n values[n] e(direction·mn/N)."""
    N = len(values)
    if N == 0 or N & (N - 1):
        raise SizeMismatch("DFT length must be a power of two")
    if direction not in (-1, 1):
        raise ValueError("direction must be -1 or +1")
    tw = _twiddles(N, iv.get_precision())
    if direction == 1:
        tw = tuple(w.conj() for w in tw)
    bits = N.bit_length() - 1
    a = [None] * N
    for i, v in enumerate(values):
        r = int(format(i, "0%db" % bits)[::-1], 2) if bits else 0
        a[r] = iv.ccoerce(v)
    size = 2
    while size <= N:
        half = size // 2
        step = N // size
        for start in range(0, N, size):
            for j in range(half):
                w = tw[j * step]
                u = a[start + j]
                v = a[start + j + half]
                if j:
                    v = v * w
                a[start + j] = u + v
                a[start + j + half] = u - v
        size *= 2
    return a


# ---------------------------------------------------------------------------
# the pipeline of stages


def g_samples(params: GridParams, K: int = None) -> List[List[ComplexInterval]]:
    """g(n/A; k) for k < K, laid out by n mod N."""
    K = params.K if K is None else K
    N, A = params.N, params.A
    out = [[None] * N for _ in range(K)]
    for n in range(-N // 2, N // 2):
        t = RealInterval(Fraction(n, A))
        base = g_base(t, params)
        for k in range(K):
            out[k][n % N] = base * _mono(t, k) if k else base
    return out


@dataclass
class GStage:
    values: List[List[ComplexInterval]]  # G^{(k)}(m/B) centres, m in [0, N/2]
    g_alias: List[object]  # E_g(k)
    G_alias: List[object]  # E_G(k)
    sigma: List[int]


def g_to_G(samples, params: GridParams) -> GStage:
    """G̃^{(k)}(m) for m in [0, N/2], with the recovery bounds for G^{(k)}(m/B)."""
    N = params.N
    K = len(samples)
    vals, eg, eG, sig = [], [], [], []
    invA = 1 / RealInterval(params.A)
    for k in range(K):
        if len(samples[k]) != N:
            raise SizeMismatch("sample vector has the wrong length")
        spec = dft(samples[k], -1)
        vals.append([spec[m] * invA for m in range(N // 2 + 1)])
        eg.append(_upper(g_alias_bound(k, params)))
        b, s = best_over_sigma(lambda s: G_twid_err(k, params, s), params.sigmas)
        eG.append(_upper(b))
        sig.append(s)
    return GStage(vals, eg, eG, sig)


@dataclass
class Bins:
    """Binned Dirichlet coefficients S_m^{(k)} (m = bin index, u_m = m/B)."""

    m: List[int]
    S: List[List[ComplexInterval]]  # S[k][i] for bin m[i]
    W: List[object]  # Σ_i |S[k][i]| / k!


def dirichlet_bins(params: GridParams, K: int = None, J: int = None) -> Bins:
    K = params.K if K is None else K
    J = params.J if J is None else J
    B = params.B
    pi = _pi()
    two_pi = pi.mul_2exp(1)
    sqrt_pi = iv.sqrt(pi)
    t0 = RealInterval(params.t0)
    acc: Dict[int, List[ComplexInterval]] = {}
    for j in range(1, J + 1):
        lj = iv.log(sqrt_pi * j)
        u = lj / two_pi
        pos = u * B + Fraction(1, 2)
        m = iv._floor(pos.lo)
        if iv._floor(pos.hi) != m:
            raise ParamViolation("Dirichlet term j=%d sits on a bin edge" % j)
        w = u - Fraction(m, B)
        amp = 1 / iv.sqrt(RealInterval(j))
        coef = iv.cexp(ComplexInterval._make(RealInterval(0), -(t0 * lj))) * amp
        row = acc.setdefault(m, [_czero() for _ in range(K)])
        p = RealInterval(1)
        for k in range(K):
            row[k] = row[k] + coef * p
            p = p * w
    ms = sorted(acc)
    S = [[acc[m][k] for m in ms] for k in range(K)]
    u = iv._ctx()[1]
    W = []
    for k in range(K):
        tot = gmpy2.mpfr(0)
        for z in S[k]:
            tot = u.add(tot, z.mag())
        W.append(u.div(tot, math.factorial(k)))
    return Bins(ms, S, W)


@dataclass
class FStage:
    values: List[ComplexInterval]  # F(m/B) centres, m in [0, N/2]
    budget: StageBudget
    bins: Bins


def assemble_F(G: GStage, params: GridParams, bins: Bins = None) -> FStage:
    """F(m/B) ≈ Σ_k Σ_bins G^{(k)}((m + m_b)/B) S^{(k)}_b / k!  for m in [0, N/2]."""
    N = params.N
    K = len(G.values)
    if bins is None:
        bins = dirichlet_bins(params, K=K)
    if len(bins.S) < K:
        raise ParamViolation("bins computed for fewer Taylor terms than G layers")
    half = N // 2
    top = half + (max(bins.m) if bins.m else 0)
    # G beyond the recovered table: centre 0, radius from the envelope
    beyond = {}
    for idx in range(half + 1, top + 1):
        u = RealInterval(Fraction(idx, params.B))
        beyond[idx] = [_upper(best_over_sigma(lambda s: Gk_bound(u, k, params, s), params.sigmas)[0])
                       for k in range(K)]
    inv_fact = [1 / RealInterval(math.factorial(k)) for k in range(K)]
    scaled = [[s * inv_fact[k] for s in bins.S[k]] for k in range(K)]
    out = []
    extra = gmpy2.mpfr(0)
    uctx = iv._ctx()[1]
    for m in range(half + 1):
        acc = _czero()
        rad = gmpy2.mpfr(0)
        for k in range(K):
            row = G.values[k]
            for b, mb in enumerate(bins.m):
                idx = m + mb
                if idx <= half:
                    acc = acc + row[idx] * scaled[k][b]
                else:
                    rad = uctx.add(rad, uctx.mul(beyond[idx][k], scaled[k][b].mag()))
        out.append(acc.inflate(rad) if rad else acc)
        extra = max(extra, rad)
    budget = StageBudget()
    # every G^{(k)} value carries E_g·B (g aliasing through the DFT) and E_G
    u = uctx
    gsum = gmpy2.mpfr(0)
    Gsum = gmpy2.mpfr(0)
    for k in range(K):
        gsum = u.add(gsum, u.mul(bins.W[k], u.mul(G.g_alias[k], params.B)))
        Gsum = u.add(Gsum, u.mul(bins.W[k], G.G_alias[k]))
    budget.g_alias = gsum
    budget.G_alias = Gsum
    tail, _ = best_over_sigma(lambda s: series_tail_bound(params, s), params.sigmas)
    budget.series_tail = _upper(tail + residue_term(params, 0))
    sq = iv.sqrt(RealInterval(params.J)).mul_2exp(1) - 1
    budget.taylor = _upper(tay_err(K, RealInterval(params.h), RealInterval(params.xi)) * sq)
    return FStage(out, budget, bins)


@dataclass
class GridEvaluation:
    params: GridParams
    f_values: List[RealInterval]  # index i ↔ n = i − N/2, t = n/A
    budget: StageBudget
    raw: List[ComplexInterval] = field(default=None, repr=False)

    def t(self, i: int) -> Fraction:
        return Fraction(i - self.params.N // 2, self.params.A)

    def height(self, i: int) -> Fraction:
        return self.params.t0 + self.t(i)


def F_to_f(F: FStage, params: GridParams) -> GridEvaluation:
    """Inverse DFT of F̃ and the last two aliasing charges."""
    N, A = params.N, params.A
    half = N // 2
    vals = list(F.values)
    # F̃(0) and F̃(N/2) are real; F̃(N−m) = conj F̃(m)
    vals[0] = ComplexInterval._make(vals[0].re, RealInterval(0))
    vals[half] = ComplexInterval._make(vals[half].re, RealInterval(0))
    full = vals + [vals[N - m].conj() for m in range(half + 1, N)]
    spec = dft(full, +1)
    invB = 1 / RealInterval(params.B)
    budget = F.budget
    fa, _ = best_over_sigma(lambda s: f_hat_twid_err(params, s), [s for s in params.sigmas if s < float(params.t0)])
    budget.F_alias = _upper(fa)
    budget.f_alias = _upper(f_twid_err(params))
    u = iv._ctx()[1]
    # F-stage bounds act on each F̃(m); the inverse DFT multiplies them by N/B = A
    scaled = gmpy2.mpfr(0)
    for name in ("g_alias", "G_alias", "series_tail", "taylor", "F_alias"):
        scaled = u.add(scaled, gmpy2.mpfr(getattr(budget, name)))
    total = u.add(u.mul(scaled, A), budget.f_alias)
    budget.g_alias = u.mul(budget.g_alias, A)
    budget.G_alias = u.mul(budget.G_alias, A)
    budget.series_tail = u.mul(budget.series_tail, A)
    budget.taylor = u.mul(budget.taylor, A)
    budget.F_alias = u.mul(budget.F_alias, A)
    f_vals = []
    raw = []
    width = gmpy2.mpfr(0)
    # output order: n = −N/2 .. N/2−1
    for i in range(N):
        n = i - half
        z = spec[n % N] * invB
        raw.append(z)
        width = max(width, z.re.rad)
        if not z.im.inflate(total).contains_zero():
            raise RealityCheckFailed("Im f(%d/A) excludes 0" % n)
        f_vals.append(z.re.inflate(total))
    budget.rounding = width
    return GridEvaluation(params, f_vals, budget, raw)


def evaluate_grid(params: GridParams) -> GridEvaluation:
    params.validate()
    samples = g_samples(params)
    G = g_to_G(samples, params)
    F = assemble_F(G, params)
    return F_to_f(F, params)


# ---------------------------------------------------------------------------
# single-point evaluation (Euler-Maclaurin) and zero location


def zeta_em(s: ComplexInterval, M: int = None, terms: int = None) -> ComplexInterval:
    """ζ(s) by Euler–Maclaurin summation with a rigorous remainder."""
    s = iv.ccoerce(s)
    T = float(s.im.mag())
    if M is None:
        M = int(T / (2 * math.pi)) + 20
    if terms is None:
        terms = max(10, iv.get_precision() // 4)
    if s.re.lo <= -(2 * terms + 1) + 1:
        raise ParamViolation("real part too small for the chosen number of terms")
    acc = _czero()
    for n in range(1, M):
        acc = acc + iv.cexp(-s * iv.log(RealInterval(n)))
    logM = iv.log(RealInterval(M))
    Ms = iv.cexp(-s * logM)  # M^{-s}
    acc = acc + Ms * M / (s - 1) + _cmul2(Ms, -1)
    # Σ_j B_{2j}/(2j)! (s)_{2j−1} M^{−s−2j+1}
    poch = s  # (s)_1
    Mpow = Ms / M  # M^{−s−1}
    invM2 = 1 / RealInterval(M * M)
    for j in range(1, terms + 1):
        b = iv.bernoulli_fraction(2 * j)
        acc = acc + poch * Mpow * RealInterval(b / math.factorial(2 * j))
        poch = poch * (s + (2 * j - 1)) * (s + 2 * j)
        Mpow = Mpow * invM2
    # poch is now (s)_{2K+1}; remainder is the next term times |s+2K+1|/(σ+2K+1)
    K = terms
    bnext = abs(iv.bernoulli_fraction(2 * K + 2))
    sig = s.re
    rem = RealInterval(bnext / math.factorial(2 * K + 2)) * poch.abs() \
        * (s + 2 * K + 1).abs() * iv.exp(-(sig + 2 * K + 1) * logM) / (sig + 2 * K + 1)
    return ComplexInterval._make(acc.re.inflate(rem.hi), acc.im.inflate(rem.hi))


def _cmul2(z: ComplexInterval, e: int) -> ComplexInterval:
    return ComplexInterval._make(z.re.mul_2exp(e), z.im.mul_2exp(e))


def f_point(t, params: GridParams) -> RealInterval:
    """f(t) at a single point via Euler–Maclaurin ζ and interval Γ."""
    t = iv.coerce(t)
    T = _T(t, params)
    s = ComplexInterval._make(RealInterval(Fraction(1, 2)), T)
    z = zeta_em(s)
    # π^{−iT/2}
    rot = iv.cexp(ComplexInterval._make(RealInterval(0), -(T.mul_2exp(-1) * iv.log(_pi()))))
    val = g_base(t, params) * rot * z
    if not val.im.contains_zero():
        raise RealityCheckFailed("Im f(t) excludes 0 at t=%s" % float(t.mid))
    return val.re


def z_sign(T, params: GridParams) -> int:
    """Sign of Z(T) (0 if undetermined)."""
    v = f_point(iv.coerce(T) - RealInterval(params.t0), params)
    if v.lo > 0:
        return 1
    if v.hi < 0:
        return -1
    return 0


def _sign(v: RealInterval) -> int:
    if v.lo > 0:
        return 1
    if v.hi < 0:
        return -1
    return 0


@dataclass
class ZeroScan:
    brackets: List[RealInterval]
    indeterminate: List[tuple]  # (t_lo, t_hi) heights with unresolved sign
    covered: tuple  # (lowest, highest) height with definite sign


def locate_zeros(ev: GridEvaluation, refine_width=Fraction(1, 10**6), resolve=True) -> ZeroScan:
    """Certified sign changes of f on the grid, refined by bisection."""
    p = ev.params
    N = p.N
    signs = [_sign(v) for v in ev.f_values]
    heights = [ev.height(i) for i in range(N)]
    definite = [i for i in range(N) if signs[i]]
    if not definite:
        return ZeroScan([], [], (None, None))
    first, last = definite[0], definite[-1]
    if resolve:
        for i in range(first, last + 1):
            if signs[i] == 0:
                try:
                    signs[i] = z_sign(heights[i], p)
                except RealityCheckFailed:
                    signs[i] = 0
    brackets = []
    indeterminate = []
    prev = first
    for i in range(first + 1, last + 1):
        if signs[i] == 0:
            continue
        if i - prev > 1:
            if signs[i] != signs[prev]:
                indeterminate.append((heights[prev], heights[i]))
            else:
                # same sign across an unresolved run: an even number of zeros may hide there
                indeterminate.append((heights[prev], heights[i]))
        elif signs[i] != signs[prev]:
            brackets.append(_bisect(heights[prev], heights[i], signs[prev], p, refine_width))
        prev = i
    return ZeroScan(brackets, indeterminate, (heights[first], heights[last]))


def _bisect(a: Fraction, b: Fraction, sa: int, params, width) -> RealInterval:
    while b - a > width:
        m = (a + b) / 2
        sm = z_sign(m, params)
        if sm == 0:
            # cannot decide at m; try nearby points before giving up
            for frac in (Fraction(1, 3), Fraction(2, 3)):
                m2 = a + (b - a) * frac
                sm = z_sign(m2, params)
                if sm:
                    m = m2
                    break
            if sm == 0:
                break
        if sm == sa:
            a = m
        else:
            b = m
    return RealInterval(a, b)


__all__ = [
    "GridParams",
    "default_params",
    "StageBudget",
    "GridEvaluation",
    "g_base",
    "g_eval",
    "g_trivial_bound",
    "g_alias_bound",
    "C_bound",
    "Gk_bound",
    "G_twid_err",
    "residue_term",
    "series_tail_bound",
    "tay_err",
    "f_hat_bound",
    "f_hat_twid_err",
    "f_bound",
    "f_twid_err",
    "dft",
    "g_samples",
    "g_to_G",
    "dirichlet_bins",
    "assemble_F",
    "F_to_f",
    "evaluate_grid",
    "zeta_em",
    "f_point",
    "z_sign",
    "locate_zeros",
    "ZeroScan",
]
