#!/usr/bin/env python3
"""Minimax polynomial generator for the vectorized math functions.

Runs a Remez exchange with mpmath and prints hex-exact coefficient tables
for pasting into src/vecmath.cc. The checked-in constants were produced by
this script; rerun it to regenerate or to explore other degrees.

  sin:  sin(t) = t * P(t^2)        on [0, (pi/2)^2], relative error
  exp:  exp(r) = Q(r)              on [-ln2/2, ln2/2], relative error
"""

import struct
import mpmath as mp

mp.mp.dps = 60


def remez(f, w, a, b, n, iters=60):
    """Minimax fit of degree n to f on [a,b] with weight w (err = w*(p-f))."""
    pts = [mp.mpf(a) + (mp.mpf(b) - a) * (1 - mp.cos(mp.pi * i / (n + 1))) / 2
           for i in range(n + 2)]
    coeffs = None
    for _ in range(iters):
        rows, rhs = [], []
        for i, x in enumerate(pts):
            rows.append([x ** j for j in range(n + 1)] +
                        [(-1) ** i / w(x)])
            rhs.append(f(x))
        sol = mp.lu_solve(mp.matrix(rows), mp.matrix(rhs))
        coeffs = sol[:n + 1]

        def err(x):
            p = mp.mpf(0)
            for c in reversed(coeffs):
                p = p * x + c
            return (p - f(x)) * w(x)

        # locate new extrema on a dense grid between current points
        grid = 4000
        xs = [mp.mpf(a) + (mp.mpf(b) - a) * i / grid for i in range(grid + 1)]
        es = [err(x) for x in xs]
        extrema = []
        for i in range(1, grid):
            if (es[i] - es[i - 1]) * (es[i + 1] - es[i]) <= 0:
                extrema.append (xs[i])
        extrema = [xs[0]] + extrema + [xs[-1]]
        # keep n+2 extrema with alternating signs, largest magnitudes
        picked = []
        for x in extrema:
            if not picked or mp.sign(err(x)) != mp.sign(err(picked[-1])):
                picked.append(x)
            elif abs(err(x)) > abs(err(picked[-1])):
                picked[-1] = x
        if len(picked) < n + 2:
            break
        while len(picked) > n + 2:
            # drop the smallest-magnitude end
            if abs(err(picked[0])) < abs(err(picked[-1])):
                picked.pop(0)
            else:
                picked.pop()
        new_pts = picked
        if all(abs(np - op) < mp.mpf(10) ** -40 for np, op in zip(new_pts, pts)):
            pts = new_pts
            break
        pts = new_pts

    def err(x):
        p = mp.mpf(0)
        for c in reversed(coeffs):
            p = p * x + c
        return (p - f(x)) * w(x)

    grid = 20000
    worst = max(abs(err(mp.mpf(a) + (mp.mpf(b) - a) * i / grid))
                for i in range(grid + 1))
    return coeffs, worst


def hex_f64(x):
    return "0x%016x" % struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def hex_f32(x):
    return "0x%08x" % struct.unpack("<I", struct.pack("<f", float(x)))[0]


def report(name, coeffs, worst, as_f32):
    print(f"// {name}: max relative error {mp.nstr(worst, 5)} "
          f"({mp.nstr(mp.log(worst, 2), 5)} bits)")
    for i, c in enumerate(coeffs):
        if as_f32:
            print(f"  {float(mp.mpf(struct.unpack('<f', struct.pack('<f', float(c)))[0])).hex()}f, // "
                  f"{hex_f32(c)} c{i}")
        else:
            print(f"  {float(c).hex()}, // {hex_f64(c)} c{i}")
    print()


def sin_table(degree_u, as_f32):
    # P(u) with sin(t) = t*P(t^2); relative error in sin equals relative in P
    f = lambda u: mp.sin(mp.sqrt(u)) / mp.sqrt(u) if u > 0 else mp.mpf(1)
    w = lambda u: 1 / f(u)
    a, b = mp.mpf(0), (mp.pi / 2) ** 2
    coeffs, worst = remez(f, w, a, b, degree_u)
    report(f"sin {'f32' if as_f32 else 'f64'} P(t^2) degree {degree_u} "
           f"(sin degree {2 * degree_u + 1})", coeffs, worst, as_f32)


def exp_table(degree, as_f32):
    f = lambda r: mp.e ** r
    w = lambda r: 1 / f(r)
    a, b = -mp.log(2) / 2, mp.log(2) / 2
    coeffs, worst = remez(f, w, a, b, degree)
    report(f"exp {'f32' if as_f32 else 'f64'} degree {degree}", coeffs, worst,
           as_f32)


if __name__ == "__main__":
    for d in (3, 4):
        sin_table(d, True)
    for d in (6, 7, 8):
        sin_table(d, False)
    for d in (5, 6):
        exp_table(d, True)
    for d in (10, 11):
        exp_table(d, False)
