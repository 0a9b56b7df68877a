import json
from fractions import Fraction

import mpmath as mp
import pytest

import oracles
from analytic_pi import interval as iv
from analytic_pi import mellin, pipeline, sieve, zeros
from analytic_pi.errors import Ambiguous, FormatError, Infeasible, NoInteger, ParamViolation
from analytic_pi.interval import RealInterval


def test_parse_config():
    text = """
    # a run
    x = 1000000
    lambda = 6273445730170391x2^-84
    zeros = z.txt      # trailing comment
    window_k = 5/2
    threads = 2
    share.e1 = 1/16
    """
    v = pipeline.parse_config(text)
    assert v["x"] == 10**6 and v["zeros"] == "z.txt" and v["threads"] == 2
    assert v["lam"] == Fraction(6273445730170391, 2**84)
    assert v["window_k"] == Fraction(5, 2)
    cfg = pipeline.make_config(v)
    assert cfg.shares["e1"] == Fraction(1, 16) and cfg.shares["e2"] == Fraction(1, 64)
    for bad in ("x 5", "colour = red", "x = 2.5", "share.bogus = 1", "lambda = -3"):
        with pytest.raises(FormatError):
            pipeline.parse_config(bad)


def test_make_config_checks():
    with pytest.raises(ParamViolation):
        pipeline.make_config({})
    with pytest.raises(ParamViolation):
        pipeline.make_config({"x": 1})
    with pytest.raises(ParamViolation):
        pipeline.make_config({"x": 100, "shares": {"e1": Fraction(1, 2)}})


def test_lambda_text_round_trip():
    lam = pipeline.parse_lambda("6273445730170391x2^-84")
    assert pipeline.format_lambda(lam) == "6273445730170391x2^-84"
    assert pipeline.parse_lambda("6273445730170391*2^(-84)") == lam
    assert pipeline.format_lambda(Fraction(1, 1000)) == "1/1000"
    assert pipeline.format_lambda(Fraction(3, 4)) == "3x2^-2"
    assert pipeline.parse_lambda("0.005") == Fraction(1, 200)


def test_choose_lambda_meets_budget():
    x, T1 = 10**8, 10**4
    lam = pipeline.choose_lambda(x, T1, Fraction(1, 4))
    assert lam.denominator & (lam.denominator - 1) == 0
    assert lam.numerator.bit_length() <= 53
    ctx = mellin.MellinContext(x, lam)
    tb = zeros.TruncationBudget(T1, T1)
    # re-evaluate both bounds at the implied symmetric window
    e1 = zeros.e1_bound(tb, None, ctx).hi
    sw = pipeline.default_segment_width(x, lam)
    k = pipeline.choose_window_k(x, lam, Fraction(1, 8), sw)
    tail = sieve.window_tail_bound(sieve.window_for(x, lam, k, sw), ctx).hi
    assert e1 < 0.125 and tail < 0.125 and e1 + tail < 0.25
    # and λ is close to minimal: a slightly smaller one fails
    smaller = lam * (1 - Fraction(1, 10**6))
    assert zeros.e1_bound(tb, None, mellin.MellinContext(x, smaller)).hi >= 0.125 * (1 - 1e-3)


def test_choose_lambda_larger_T1():
    # E1 falls as T1 grows, so the feasible set grows and the smallest λ shrinks
    lams = [pipeline.choose_lambda(10**7, T, Fraction(1, 4)) for T in (1000, 2000, 4000)]
    assert lams == sorted(lams, reverse=True)


def test_choose_lambda_infeasible():
    with pytest.raises(Infeasible):
        pipeline.choose_lambda(10**8, 200, Fraction(1, 10**30), lam_max=Fraction(1, 100))
    with pytest.raises(ParamViolation):
        pipeline.choose_lambda(10**6, 50, Fraction(1, 4))


def test_pi_star_direct_and_recovery():
    assert pipeline.pi_star_direct(100) == Fraction(25) + Fraction(4, 2) + Fraction(2, 3) + Fraction(2, 4) \
        + Fraction(1, 5) + Fraction(1, 6)
    assert pipeline.pi_star_direct(100) == oracles.pi_star(100)
    ps = pipeline.pi_star_direct(100)
    assert pipeline.recover_pi(RealInterval(ps - Fraction(1, 10), ps + Fraction(1, 10)), 100) == 25
    # x = 2 is a prime: half weight at x
    assert pipeline.pi_star_direct(2) == Fraction(1, 2)
    assert pipeline.recover_pi(RealInterval(Fraction(1, 4), Fraction(3, 4)), 2) == 1
    for x in (64, 81, 97, 1000, 3**7, 2**10):
        q = oracles.pi_star(x)
        assert pipeline.recover_pi(RealInterval(q), x) == oracles.prime_count(x)
    with pytest.raises(Ambiguous):
        pipeline.recover_pi(RealInterval(ps - 1, ps + 1), 100)
    with pytest.raises(NoInteger):
        pipeline.recover_pi(RealInterval(ps + Fraction(1, 5), ps + Fraction(1, 4)), 100)


def test_prime_power_exponent():
    assert pipeline.prime_power_exponent(3**9) == 9
    assert pipeline.prime_power_exponent(97) == 1
    assert pipeline.prime_power_exponent(36) == 0
    assert pipeline.prime_power_exponent(2**20) == 20


@pytest.fixture(scope="module")
def run_1e6(zero_table):
    cfg = pipeline.make_config({"x": 10**6, "threads": 2})
    return pipeline.run(cfg, zero_table)


def test_end_to_end_1e6(run_1e6):
    r = run_1e6
    assert r.pi == 78498 == oracles.prime_count(10**6)
    with mp.workdps(40):
        assert r.pi_star.contains(oracles.mpq(oracles.pi_star(10**6)))
    assert r.ledger.total < 0.5
    assert all(v.lo >= 0 for _, v in r.ledger.entries())
    # rounding slack is what remains: the named entries plus it cover the half-width
    assert r.ledger.total >= r.pi_star.rad


def test_report_round_trip(run_1e6):
    text = pipeline.report(run_1e6)
    doc = pipeline.parse_report(text)
    assert doc["pi"] == 78498 and doc["x"] == "1000000"
    lo, hi = doc["pi_star"]
    assert pipeline._q(run_1e6.pi_star.lo) == lo and pipeline._q(run_1e6.pi_star.hi) == hi
    assert list(json.loads(text)) == ["x", "pi", "pi_star_lo", "pi_star_hi", "ledger", "parameters", "zeros", "config"]
    assert set(doc["ledger"]) == set(pipeline.LEDGER_KEYS) | {"total"}
    for k in pipeline.LEDGER_KEYS:
        assert Fraction(doc["ledger"][k]) >= pipeline._q(getattr(run_1e6.ledger, k).hi)
    assert "null" not in text
    assert "wall_time" in pipeline.report(run_1e6, include_timing=True)


def test_dec_helpers():
    assert pipeline._dec(Fraction(5, 4)) == "1.25"
    assert pipeline._dec(Fraction(-1, 8)) == "-0.125"
    assert pipeline._dec(Fraction(1, 3)) == "1/3"
    s = pipeline._dec_up(Fraction(1, 3), 5)
    assert Fraction(s) >= Fraction(1, 3) and s == "3.3334e-01"


def test_determinism_and_checkpoints(zero_table, tmp_path):
    base = {"x": 10**5, "lam": Fraction(1, 2**6)}
    a = pipeline.report(pipeline.run(pipeline.make_config(base), zero_table))
    b = pipeline.report(pipeline.run(pipeline.make_config(dict(base, threads=3)), zero_table))
    # only the config echo records the thread count
    assert a == b.replace('"threads": 3', '"threads": 1')
    ck = dict(base, checkpoint_dir=str(tmp_path))
    c = pipeline.report(pipeline.run(pipeline.make_config(ck), zero_table))
    files = sorted(p.name for p in tmp_path.iterdir())
    assert any(f.startswith("zerosum-") for f in files) and any(f.startswith("sieve-") for f in files)
    # cut the zero-sum checkpoint to one block plus a torn record, then resume
    zf = next(p for p in tmp_path.iterdir() if p.name.startswith("zerosum-"))
    lines = zf.read_text().split("\n")
    zf.write_text("\n".join(lines[:1]) + "\n" + lines[1][:20])
    d = pipeline.report(pipeline.run(pipeline.make_config(ck), zero_table))
    assert a == c == d


def test_plan_budget(zero_table):
    cfg = pipeline.make_config({"x": 10**7})
    with iv.precision(128):
        p = pipeline.plan(cfg, zero_table)
    for k in ("e1", "e2", "window_tail", "minus_one_line", "phihat_anchor"):
        assert pipeline._q(getattr(p.ledger, k).hi) < cfg.shares[k]
    assert p.N_T1 == len(p.used) <= 2 * 10**4
    # T1 sits between zeros, not on one
    assert all(not r.ordinate.contains(oracles.mpq(Fraction(p.T1))) for r in p.used[-3:])


def test_more_precision_does_not_widen(zero_table):
    base = {"x": 10**5, "lam": Fraction(1, 2**6), "threads": 4}
    lo = pipeline.run(pipeline.make_config(dict(base, precision_bits=128)), zero_table)
    hi = pipeline.run(pipeline.make_config(dict(base, precision_bits=192)), zero_table)
    assert hi.pi_star.subset(lo.pi_star)
    assert hi.pi == lo.pi == 9592
