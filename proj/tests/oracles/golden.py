"""Independent high-precision evaluations frozen into tests/golden.hpp.

Run with: python3 tests/oracles/golden.py
"""
from mpmath import mp, mpf, log, pi, nstr

mp.dps = 40


def stadium_constant(ell):
    l3 = 3 * log(3)
    return (4 + l3) / (4 - l3) * ell**2 / (4 * (pi + ell))


def rate(p, n):
    return mpf(1) if n == 0 else mpf(n) ** (-p)


def conv_at(p, q, n):
    return sum(rate(p, j) * rate(q, n - j) for j in range(n + 1))


def scalar_renewal(r, n_max):
    t = [mpf(1)]
    for n in range(1, n_max + 1):
        t.append(sum(r[j] * t[n - j] for j in range(1, n + 1) if j < len(r)))
    return t


def main():
    print("stadium_constant(2) =", nstr(stadium_constant(2), 17))
    print("stadium_constant(1) =", nstr(stadium_constant(1), 17))
    print("(rate(1.5)*rate(1.2))(4) =", nstr(conv_at(mpf("1.5"), mpf("1.2"), 4), 17))
    print("mfp stadium(2,1) =", nstr(pi * (pi + 4) / (2 * pi + 4), 17))
    print("mfp square+disk(0.2) =", nstr(pi * (1 - mpf("0.04") * pi) / (4 + mpf("0.4") * pi), 17))
    t = scalar_renewal([0, mpf(1) / 2, mpf(1) / 2], 1000)
    print("scalar renewal t(1000) - 2/3 =", nstr(t[1000] - mpf(2) / 3, 5))
    # Leb{phi > n} on Y for gamma = 1/2 by backward iteration of the left branch.
    g = mpf(1) / 2
    x = [mpf(1), mpf(1) / 2]
    for _ in range(40):
        target = x[-1]
        lo, hi = mpf(0), mpf(1) / 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if mid + mid * (2 * mid) ** g < target:
                lo = mid
            else:
                hi = mid
        x.append((lo + hi) / 2)
    print("x_k gamma=1/2, k=1..5 =", [nstr(v, 17) for v in x[2:7]])
    print("x_40 gamma=1/2 =", nstr(x[41], 17))


if __name__ == "__main__":
    main()
