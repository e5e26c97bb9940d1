"""Regenerates goldens.json with mpmath at 40 significant digits.

Run: python3 goldens.py > goldens.json
"""
import json
import mpmath as mp

mp.mp.dps = 40


def f(x):
    return float(x)


def hit_prob(D, r, rr, t):
    vr = mp.mpf(4) / 3 * mp.pi * rr**3
    return vr * (4 * mp.pi * D * t) ** mp.mpf(-1.5) * mp.exp(-r**2 / (4 * D * t))


out = {}

out["regularized_q"] = [
    [s, x, f(mp.gammainc(s, x, mp.inf, regularized=True))]
    for s in [0.5, 1.0, 2.5, 7.0, 30.0, 120.5, 500.0]
    for x in [1e-3, 0.3, 1.0, 4.0, 0.8 * s, s, 1.3 * s, 2.5 * s + 10]
]
out["ln_upper_gamma"] = [
    [s, x, f(mp.log(mp.gammainc(s, x, mp.inf)))]
    for s in [0.5, 2.0, 14.0, 89.0, 299.0]
    for x in [1e-4, 0.02, 3.0, 150.0]
]
out["erfc"] = [[x, f(mp.erfc(x))] for x in [-2.0, -0.3, 0.0, 0.1, 0.9, 1.3, 2.0, 4.5, 9.0, 20.0]]
out["erfcx"] = [[x, f(mp.exp(x * x) * mp.erfc(x))] for x in [-3.0, -0.5, 0.2, 1.5, 5.0, 40.0, 1e4]]
def erfc_inv(y):
    with mp.workdps(120):
        return mp.erfinv(1 - mp.mpf(y))

out["erfc_inv"] = [[y, f(erfc_inv(y))] for y in [1e-30, 1e-8, 0.01, 0.05, 0.3, 0.95, 1.2, 1.9]]
out["ln_gamma"] = [[x, f(mp.loggamma(x))] for x in [0.01, 0.5, 1.5, 3.3, 9.99, 10.0, 47.5, 1234.5]]
out["hyp1f1"] = [
    [a, b, z, f(mp.hyp1f1(a, b, z))]
    for (a, b, z) in [(0.5, 1.5, 1.0), (1.0, 0.5, 4.5), (2.5, 1.5, -3.0), (-2.0, 0.5, 2.0), (7.0, 3.0, 10.0)]
]
out["pcfd"] = [
    [nu, z, f(mp.pcfd(nu, z))]
    for nu in [-1, -2, -3, -6, -11, -26, -51]
    for z in [-2.0, 0.0, 2.0]
] + [
    [nu, z, f(mp.pcfd(nu, z))]
    for nu in [-0.5, -2.5, -7.25]
    for z in [-1.0, 0.5, 1.5]
]
def ln_pcfd_neg_int(k, z):
    z = mp.mpf(z)
    try:
        return mp.log(mp.pcfd(-k - 1, z))
    except (ZeroDivisionError, mp.libmp.libhyper.NoConvergence):
        pass
    tp = (-z + mp.sqrt(z * z + 4 * k)) / 2
    w = 1 / mp.sqrt(1 + k / max(tp, mp.mpf(1e-30)) ** 2)
    pts = [0] + [p for p in [tp - 40 * w, tp - 5 * w, tp, tp + 5 * w, tp + 40 * w] if p > 0] + [mp.inf]
    val = mp.quad(lambda t: t**k * mp.exp(-z * t - t * t / 2), pts)
    return mp.log(val) - z * z / 4 - mp.loggamma(k + 1)

out["ln_pcfd_neg_int"] = [
    [k, z, f(ln_pcfd_neg_int(k, z))]
    for k in [0, 3, 40, 400, 2000]
    for z in [-150.0, -12.0, -1.0, 0.3, 4.0, 25.0, 300.0]
]

# High-rate pmf: ln p[k] via the Gaussian-Poisson integral directly.
def highrate_pmf(k1, k2, k):
    g = lambda m: mp.exp(-(m - k1) ** 2 / (2 * k2)) / mp.sqrt(2 * mp.pi * k2) * mp.exp(-m) * m**k / mp.factorial(k)
    ms = (-(k2 - k1) + mp.sqrt((k2 - k1) ** 2 + 4 * k * k2)) / 2
    w = 1 / mp.sqrt(k / max(ms, mp.mpf(1e-30)) ** 2 + 1 / k2)
    pts = sorted(set([mp.mpf(0)] + [p for p in [ms - 40 * w, ms - 5 * w, ms, ms + 5 * w, ms + 40 * w] if p > 0]))
    return mp.quad(g, pts + [mp.inf])

def highrate_pmf_pcfd(k1, k2, k):
    # Closed form through mpmath's own D_nu; falls back to quadrature where
    # mpmath cannot evaluate D_nu.
    try:
        z = (k2 - k1) / mp.sqrt(k2)
        lp = (-mp.log(2 * mp.pi * k2) / 2 - k1**2 / (2 * k2) + z * z / 4
              + mp.mpf(k + 1) / 2 * mp.log(k2) + mp.log(mp.pcfd(-k - 1, z)))
        return mp.exp(lp)
    except (ZeroDivisionError, mp.libmp.libhyper.NoConvergence):
        return highrate_pmf(k1, k2, k)

out["highrate_pmf"] = [
    [k1, k2, k, f(highrate_pmf_pcfd(mp.mpf(k1), mp.mpf(k2), k))]
    for (k1, k2) in [(16.866606041861421, 9.4674700181201654), (5.0, 40.0), (300.0, 2000.0), (2.0, 0.5)]
    for k in [0, 1, 5, 17, 60, 400]
]

D = mp.mpf("1.14e-9")
out["hit_prob"] = [
    [f(D), r, rr, t, f(hit_prob(D, mp.mpf(r), mp.mpf(rr), mp.mpf(t)))]
    for (r, rr, t) in [(4e-6, 0.5e-6, 0.1), (4e-6, 0.5e-6, 0.0023391812865497076), (8e-6, 0.5e-6, 0.5), (25e-6, 0.5e-6, 1e-3)]
]
out["hit_integral"] = [
    [f(D), r, rr, t, f(mp.quad(lambda u: hit_prob(D, mp.mpf(r), mp.mpf(rr), u), [0, mp.mpf(r)**2 / (6 * D), t]))]
    for (r, rr, t) in [(4e-6, 0.5e-6, 1.0), (8e-6, 0.5e-6, 3.0)]
]

# Cumulants by quadrature of lambda_e * int_0^K (lambda_a p(t))^n dt.
le, la, dc, K = mp.mpf(200), mp.mpf(2e4), mp.mpf(8e-6), mp.mpf(3)
peak = dc**2 / (6 * D)
out["cumulants"] = {
    "lambda_e": f(le), "lambda_a": f(la), "d_c": f(dc), "window_s": f(K), "r_r": 0.5e-6, "D": f(D),
    "values": [f(le * mp.quad(lambda t: (la * hit_prob(D, dc, mp.mpf(0.5e-6), t)) ** n, [0, peak, K])) for n in range(1, 7)],
}

print(json.dumps(out, indent=1))
