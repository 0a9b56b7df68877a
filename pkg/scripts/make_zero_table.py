"""Generate a text zero table for the test suite.

Scans Z(t) on a fine grid in double precision, refines each sign change with
multiprecision secant steps and checks the final count against mpmath.nzeros.
"""

import argparse
import sys

import mpmath


def scan(t_max, step):
    fz = mpmath.fp.siegelz
    brackets = []
    a, za = 10.0, fz(10.0)
    while a < t_max:
        b = min(a + step, t_max)
        zb = fz(b)
        if za == 0.0 or (za < 0) != (zb < 0):
            brackets.append((a, b))
        a, za = b, zb
    return brackets


def refine(a, b, dps):
    with mpmath.workdps(dps):
        root = mpmath.findroot(mpmath.siegelz, (mpmath.mpf(a), mpmath.mpf(b)), solver="anderson")
        if not a <= root <= b:
            root = mpmath.findroot(mpmath.siegelz, (mpmath.mpf(a) + mpmath.mpf(b)) / 2)
        return root


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--step", type=float, default=0.04)
    p.add_argument("--digits", type=int, default=16)
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)

    with mpmath.workdps(25):
        t_max = float(mpmath.zetazero(args.count + 1).imag + mpmath.zetazero(args.count).imag) / 2
    brackets = scan(t_max, args.step)
    expected = mpmath.nzeros(t_max)
    if len(brackets) != expected:
        raise SystemExit(f"scan found {len(brackets)} sign changes, N(T)={expected}; reduce --step")
    zeros = [refine(a, b, 30) for a, b in brackets]
    zeros = zeros[: args.count]

    out = sys.stdout if args.out == "-" else open(args.out, "w")
    abs_err = "1e-%d" % (args.digits - 2)
    rh = mpmath.nstr(mpmath.floor(mpmath.mpf(t_max) * 1000) / 1000, 12)
    out.write(f"# zeta-zeros v1 abs_err={abs_err} rh_height={rh}\n")
    for z in zeros:
        out.write(mpmath.nstr(z, args.digits + 5, strip_zeros=False, min_fixed=-1, max_fixed=30) + "\n")
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
