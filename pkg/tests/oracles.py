"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical paths; the point is to
check those paths against a different route to the same number.
"""

import itertools
import math


def matmul2(x, y):
    """Plain-Python 2x2 complex matrix product."""
    return [[sum(x[i][k] * y[k][j] for k in range(2)) for j in range(2)] for i in range(2)]


def transpose2(x):
    return [[x[j][i] for j in range(2)] for i in range(2)]


def to_lists(m):
    return [[complex(m[i][j]) for j in range(2)] for i in range(2)]


def frob_dist(x, y):
    return math.sqrt(sum(abs(complex(x[i][j]) - complex(y[i][j])) ** 2
                         for i in range(2) for j in range(2)))


def matvec2(x, v):
    return [x[0][0] * v[0] + x[0][1] * v[1], x[1][0] * v[0] + x[1][1] * v[1]]


def rot(deg):
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return [[c, -s], [s, c]]


def analyzer_ket(theta_s, theta_i):
    """|theta_s> x |theta_i> as a 4-list over HH, HV, VH, VV."""
    cs, ss = math.cos(math.radians(theta_s)), math.sin(math.radians(theta_s))
    ci, si = math.cos(math.radians(theta_i)), math.sin(math.radians(theta_i))
    return [cs * ci, cs * si, ss * ci, ss * si]


def projector_prob(rho, theta_s, theta_i):
    """<theta_s theta_i| rho |theta_s theta_i> by explicit double sum."""
    k = analyzer_ket(theta_s, theta_i)
    return sum(k[r] * complex(rho[r][c]) * k[c] for r in range(4) for c in range(4)).real


def four_outcomes(rho, a, b):
    return [projector_prob(rho, a, b), projector_prob(rho, a, b + 90),
            projector_prob(rho, a + 90, b), projector_prob(rho, a + 90, b + 90)]


def correlation(rho, a, b):
    pp, pm, mp, mm = four_outcomes(rho, a, b)
    return (pp + mm - pm - mp) / (pp + mm + pm + mp)


def chsh(rho, a, a2, b, b2):
    return abs(correlation(rho, a, b) - correlation(rho, a, b2)
               + correlation(rho, a2, b) + correlation(rho, a2, b2))


def poisson_pmf(k, mu):
    return math.exp(-mu) * mu ** k / math.factorial(k)


def gate_probabilities(p4, mu, eta_s, eta_i, noise_s=0.0, noise_i=0.0, kmax=5):
    """Per-gate (P(coincidence), P(signal click), P(idler click)) by enumeration.

    ``p4`` = (pass-pass, pass-block, block-pass, block-block). Enumerates
    every assignment of outcomes and detection results to k <= kmax pairs,
    then the two noise-click Bernoullis.
    """
    per_pair = {}
    for o, po in enumerate(p4):
        pass_s = o in (0, 1)
        pass_i = o in (0, 2)
        for ds, dp_s in ((True, eta_s), (False, 1 - eta_s)):
            for di, dp_i in ((True, eta_i), (False, 1 - eta_i)):
                key = (pass_s and ds, pass_i and di)
                per_pair[key] = per_pair.get(key, 0.0) + po * dp_s * dp_i
    events = list(per_pair.items())

    coinc = single_s = single_i = 0.0
    for k in range(kmax + 1):
        wk = poisson_pmf(k, mu)
        for combo in itertools.product(events, repeat=k):
            w = wk
            for _, p in combo:
                w *= p
            any_s = any(e[0] for e, _ in combo)
            any_i = any(e[1] for e, _ in combo)
            for ns, pns in ((True, noise_s), (False, 1 - noise_s)):
                for ni, pni in ((True, noise_i), (False, 1 - noise_i)):
                    ww = w * pns * pni
                    cs, ci = any_s or ns, any_i or ni
                    coinc += ww * (cs and ci)
                    single_s += ww * cs
                    single_i += ww * ci
    return coinc, single_s, single_i
