#!/usr/bin/env python3
"""Regenerate data/golden/*.csv with mpmath at 40 significant digits.

Every value is computed from its defining integral or series, never from
the closed forms the C++ library uses.
"""
import csv
import pathlib
import sys

import mpmath as mp

mp.mp.dps = 40
OUT = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "data" / "golden"


def lam_density(family, alpha, scale):
    if family == "uniform":
        return lambda u: scale
    return lambda u: scale * (1 - u) ** (alpha - 1) * u ** (1 - alpha)


def rate_quad(family, alpha, scale, n, k):
    f = lam_density(family, alpha, scale)
    return mp.quad(lambda u: u ** (k - 2) * (1 - u) ** (n - k) * f(u), [0, mp.mpf(1) / 2, 1])


def block_distribution(rate, n, t):
    q = mp.zeros(n, n)
    for j in range(2, n + 1):
        for k in range(2, j + 1):
            r = mp.binomial(j, k) * rate(j, k)
            q[j - 1, j - k] += r
            q[j - 1, j - 1] -= r
    p = mp.expm(q * t)
    return [p[n - 1, j] for j in range(n)]


def fmt(v):
    return mp.nstr(v, 20, min_fixed=-4, max_fixed=4)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "beta_rates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "alpha", "scale", "n", "k", "rate"])
        for family, alpha in [("beta", "1.2"), ("beta", "1.5"), ("beta", "1.8"), ("uniform", "1")]:
            a = mp.mpf(alpha)
            for n in range(2, 21):
                for k in range(2, n + 1):
                    w.writerow([family, alpha, 1, n, k, fmt(rate_quad(family, a, 1, n, k))])

    rows = []
    # mpmath's nsum extrapolation is only good to ~1e-7 on these slowly
    # decaying series, so zeta values come from mpmath's own zeta.
    z25 = mp.zeta(mp.mpf(2.5))
    z15 = mp.zeta(mp.mpf(1.5))
    z2 = mp.zeta(2)
    rows.append(("zeta_2p5", z25, 1e-12))
    rows.append(("zeta1p5_p0", 1 / z25, 1e-12))
    rows.append(("zeta1p5_mean", z15 / z25, 1e-12))
    rows.append(("zeta1_p0", 1 / z2, 1e-12))
    rows.append(("zeta1_p1", 1 / z2, 1e-12))
    tail = 1 - mp.fsum(mp.mpf(k) ** -2 for k in range(1, 101)) / z2
    rows.append(("zeta1_tail_gt100", tail, 1e-10))
    rows.append(("zeta1_pgf_0p9", mp.polylog(2, mp.mpf("0.9")) / z2, 1e-11))
    rows.append(("zeta1p5_pgf_0p5", mp.polylog(mp.mpf(2.5), mp.mpf("0.5")) / z25, 1e-11))

    # Stable regime with b = d = c = 1 and Zeta(1.5) offspring.
    m = z15 / z25
    n_star = m - 1
    scale = (1 / z25) * mp.mpf(1.5) / mp.sqrt(n_star)
    total = mp.quad(lam_density("beta", mp.mpf(1.5), scale), [0, 1])
    rows.append(("stable_b1_n_star", n_star, 1e-12))
    rows.append(("stable_b1_scale", scale, 1e-12))
    rows.append(("stable_b1_total_mass", total, 1e-10))

    eps = mp.mpf("1e-3")
    f = lam_density("beta", mp.mpf(1.5), 1)
    rows.append(("beta1p5_jump_rate_eps1e-3", mp.quad(lambda u: f(u) / u ** 2, [eps, mp.mpf("0.01"), 1]), 1e-10))
    rows.append(("beta1p5_small_mass_eps1e-3", mp.quad(f, [0, eps]), 1e-10))

    s = 6 / mp.pi ** 2
    uni = lambda j, k: rate_quad("uniform", 1, s, j, k)
    dist = block_distribution(uni, 3, mp.mpf("0.5"))
    for j, p in enumerate(dist, start=1):
        rows.append((f"uniform_n3_t0p5_p{j}", p, 1e-10))
    rows.append(("uniform_n3_t0p5_dual_x0p5", mp.fsum(p * mp.mpf("0.5") ** j for j, p in enumerate(dist, start=1)), 1e-10))
    rows.append(("neveu_heterozygosity_t1", mp.mpf("0.25") * mp.exp(-s), 1e-12))
    rows.append(("kingman4_heterozygosity_t0p25", mp.mpf("0.25") * mp.exp(-1), 1e-12))

    with open(OUT / "constants.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "value", "rel_tol"])
        for name, value, tol in rows:
            w.writerow([name, fmt(value), tol])


if __name__ == "__main__":
    main()
