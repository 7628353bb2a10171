"""Regenerate the Bessel reference tables used by the specfun tests.

Values are evaluated with mpmath at 40 significant digits and written with
20 significant digits. Run from this directory:

    python3 gen_bessel_fixtures.py
"""
import mpmath as mp

mp.mp.dps = 40

ORDERS = range(0, 41)
# log-spaced small arguments plus a linear sweep up to 100
XS = sorted(set(
    [mp.mpf(10) ** (mp.mpf(e) / 4) for e in range(-12, 4)]
    + [mp.mpf(i) / 4 for i in range(1, 401, 3)]
))


def emit(path, fn):
    with open(path, "w") as out:
        out.write("m,x,value\n")
        for m in ORDERS:
            for x in XS:
                v = fn(m, x)
                out.write("%d,%s,%s\n" % (m, mp.nstr(x, 20), mp.nstr(v, 20, min_fixed=0, max_fixed=0)))


emit("bessel_j.csv", mp.besselj)
emit("bessel_y.csv", mp.bessely)
