"""Arbitrary-precision reference values for Bessel J/Y and their derivatives.

Regenerate with:  python3 bessel_reference.py > bessel_reference.txt
Columns: order t J Y dJ/dt dY/dt  (50-digit mpmath, printed to 17 significant digits)
"""
import mpmath as mp

mp.mp.dps = 50

orders = [mp.mpf(k) / 2 for k in range(0, 21)]  # 0, 1/2, ..., 10
ts = ["1e-6", "1e-4", "1e-3", "0.01", "0.1", "0.5", "1", "2", "2.404825557695773",
      "3.5", "4.99", "5", "5.01", "7.3", "10", "12", "17.5", "24.9", "25", "25.1",
      "31.7", "50", "100", "333.3", "1000", "1606.2", "10000"]

print("# order t J Y dJ dY")
for nu in orders:
    for ts_ in ts:
        t = mp.mpf(ts_)
        j = mp.besselj(nu, t)
        y = mp.bessely(nu, t)
        dj = mp.besselj(nu, t, derivative=1)
        dy = mp.bessely(nu, t, derivative=1)
        print(" ".join(mp.nstr(v, 17, min_fixed=-30, max_fixed=30) if i < 2 else mp.nstr(v, 17)
                       for i, v in enumerate([nu, t, j, y, dj, dy])))
