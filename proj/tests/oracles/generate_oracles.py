"""Regenerates the frozen reference values in this directory with mpmath.

    python3 generate_oracles.py

Fractional Laplacians are computed from the singular-integral definition
(second differences against |h|^{-1-2s}) and inverse operators from the Riesz
potential, so no hypergeometric identity enters the references.
"""

import json
import random

import mpmath as mp

mp.mp.dps = 40


def f(x):
    return float(x)


def dump(name, payload):
    with open(name, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def special_functions():
    rng = random.Random(20240611)
    gamma = [[x, f(mp.gamma(x))] for x in [0.1, 0.5, 1.5, 2.5, 5.0, 7.3, 12.25, 30.5, -0.5, -1.5, -2.7, -7.25]]
    for _ in range(40):
        x = rng.uniform(-9.5, 40.0)
        if abs(x - round(x)) < 1e-3 and x < 0.5:
            continue
        gamma.append([x, f(mp.gamma(x))])

    hyp = []
    while len(hyp) < 600:
        a, b, c = rng.uniform(-3, 6), rng.uniform(-3, 6), rng.uniform(0.3, 6)
        if rng.random() < 0.2:
            # c - a - b near an integer exercises the logarithmic connection cases
            c = a + b + rng.choice([0, 1, 2, -1, -2]) + rng.choice([0, 0, 1e-5, -3e-4, 2e-3])
        if c <= 0 and abs(c - round(c)) < 1e-9:
            continue
        u = rng.random()
        if u < 0.45:
            x = -(10 ** rng.uniform(-3, 4))
        elif u < 0.85:
            x = rng.uniform(-0.95, 0.95)
        else:
            x = 1 - 10 ** rng.uniform(-4, -0.5)
        hyp.append([a, b, c, x, f(mp.hyp2f1(a, b, c, x))])

    bessel_j = []
    bessel_k = []
    for _ in range(150):
        nu = rng.uniform(-0.9, 6.0)
        x = 10 ** rng.uniform(-3, 2.5)
        bessel_j.append([nu, x, f(mp.besselj(nu, x))])
    for _ in range(150):
        nu = rng.uniform(-6.0, 6.0)
        x = 10 ** rng.uniform(-3, 2.2)
        bessel_k.append([nu, x, f(mp.besselk(nu, x))])
    dump("special_functions.json", {"gamma": gamma, "hyp2f1": hyp, "bessel_j": bessel_j, "bessel_k": bessel_k})


def c_frac(N, s):
    return mp.mpf(4) ** s * mp.gamma(mp.mpf(N) / 2 + s) / (mp.pi ** (mp.mpf(N) / 2) * abs(mp.gamma(-s)))


def frac_lap_1d(g, x, s):
    """(-Delta)^s g at x in one dimension for a smooth decaying g."""
    # near h = 0 the second difference cancels, so integrate its Taylor series there
    delta = mp.mpf(1) / 100
    d2, d4, d6, d8 = (mp.diff(g, x, k) for k in (2, 4, 6, 8))
    head = -sum(c * delta ** (k - 2 * s) / (k - 2 * s)
                for k, c in ((2, d2), (4, d4 / 12), (6, d6 / 360), (8, d8 / 20160)))
    integrand = lambda h: (2 * g(x) - g(x + h) - g(x - h)) / h ** (1 + 2 * s)
    pts = [delta, mp.mpf(1) / 4, 1, abs(x) / 2 + 1, abs(x) + 2, 2 * abs(x) + 8, 64, mp.inf]
    pts = sorted(set(pts))
    return c_frac(1, s) * (head + mp.quad(integrand, pts))


def frac_lap_rising(N, s, q, R, lam, r):
    prof = lambda y: lam * (R ** 2 + y ** 2) ** (-q)
    if N == 1:
        return frac_lap_1d(prof, mp.mpf(r), s)
    # three dimensions: (-Delta)^s f(r) = (1/r) (-Delta)^s_1 [x f(|x|)](r)
    return frac_lap_1d(lambda x: x * prof(x), mp.mpf(r), s) / r


def riesz_compact(N, s, q, R, lam, r):
    """(-Delta)^{-s} of lam (R^2 - |y|^2)_+^q at |x| = r."""
    prof = lambda y: lam * (R ** 2 - y ** 2) ** q
    r = mp.mpf(r)
    if N == 1:
        c = mp.gamma(mp.mpf(1) / 2 - s) / (mp.mpf(4) ** s * mp.sqrt(mp.pi) * mp.gamma(s))
        k = lambda y: prof(y) * abs(r - y) ** (2 * s - 1)
        pts = sorted(set([-R, 0, R] + ([r] if abs(r) < R else [])))
        return c * mp.quad(k, pts)
    c = mp.gamma(mp.mpf(3) / 2 - s) / (mp.mpf(4) ** s * mp.pi ** 1.5 * mp.gamma(s))
    # spherical average of |x - y|^{2s-3} over |y| = rho
    if abs(2 * s - 1) < 1e-15:
        shell = lambda rho: 2 * mp.pi * mp.log((r + rho) / abs(r - rho)) / (r * rho)
    else:
        shell = lambda rho: 2 * mp.pi * ((r + rho) ** (2 * s - 1) - abs(r - rho) ** (2 * s - 1)) / ((2 * s - 1) * r * rho)
    k = lambda rho: prof(rho) * rho ** 2 * shell(rho)
    pts = sorted(set([0, R] + ([r] if r < R else [])))
    return c * mp.quad(k, pts)


def fractional():
    rising = []
    for N, s, q, R, lam in [(1, 0.25, 0.75, 1.0, 1.0), (1, 0.5, 1.0, 1.3, 0.7), (1, 0.75, 1.25, 0.8, 2.0),
                            (3, 0.5, 2.0, 1.0, 1.0), (3, 0.75, 2.25, 1.2, 0.5), (3, 0.3, 1.1, 1.0, 1.5)]:
        pts = []
        for r in [0.05, 0.3, 1.0, 2.0, 4.5, 12.0]:
            pts.append([r, f(frac_lap_rising(N, s, q, mp.mpf(R), mp.mpf(lam), r))])
        rising.append({"N": N, "s": s, "q": q, "R": R, "lambda": lam, "values": pts})
    compact = []
    for N, s, q, R, lam in [(3, 0.5, 1.0, 1.0, 1.0), (3, 0.75, 2.5, 1.0, 0.5), (1, 0.25, 1.5, 1.0, 1.0),
                            (1, 0.4, 0.5, 2.0, 1.0)]:
        pts = []
        for frac in [0.1, 0.5, 0.9, 1.5, 2.0, 6.0]:
            r = frac * R
            pts.append([r, f(riesz_compact(N, s, q, mp.mpf(R), mp.mpf(lam), r))])
        compact.append({"N": N, "s": s, "q": q, "R": R, "lambda": lam, "values": pts})

    ws = []
    for mu, nu, rho, a, b in [(0.5, 0.5, 0.0, 1.0, 1.0), (0.25, 1.5, 0.5, 2.0, 1.0), (0.0, 0.0, 0.0, 1.0, 0.5),
                              (1.2, 2.0, -0.5, 1.5, 3.0), (0.7, 1.0, 0.3, 0.5, 2.0)]:
        lhs = mp.quad(lambda e: e ** (-rho) * mp.besselk(mu, e * a) * mp.besselj(nu, e * b), [0, 1, 10, mp.inf])
        ws.append([mu, nu, rho, a, b, f(lhs)])
    dump("fractional.json", {"rising": rising, "compact": compact, "weber_schafheitlin": ws})


if __name__ == "__main__":
    special_functions()
    fractional()
