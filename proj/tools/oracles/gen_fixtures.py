#!/usr/bin/env python3
"""Regenerates the committed fixtures under data/.

Independent of the C++ sources: equilibrium shares come from brute-force
Nash-product maximization with scipy, correlations from scipy.stats.
"""
import csv
import math
import random
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import pearsonr

DATA = Path(__file__).resolve().parents[2] / "data"

E, AH, AL, P = 200.0, 11.0, 1.0, 0.2
DE = {"PoorEnt": 0.0, "RichEnt": 160.0}
THETA_TRUE = 0.42


def expect(f):
    return P * f(AH) + (1 - P) * f(AL)


def inv_pay(a, I, s, j, pref):
    V = a * sum(I)
    if not pref:
        return s[j] * V
    if a == AL:
        return I[j]
    comp = max(I[1 - j] - V * (1 - s[j]), 0.0) if len(I) == 2 else 0.0
    return max(V * s[j] - comp, I[j])


def ent_pay(a, I, s, pref, de):
    if sum(I) == 0:
        return de
    V = a * sum(I)
    return max(V - sum(inv_pay(a, I, s, j, pref) for j in range(len(I)) if I[j] > 0), 0.0)


def argmax_share(f, hi):
    g = np.linspace(0.0, hi, 4001)
    v = [f(x) for x in g]
    k = int(np.argmax(v))
    r = minimize_scalar(lambda x: -f(x), bounds=(g[max(k - 1, 0)], g[min(k + 1, 4000)]),
                        method="bounded", options={"xatol": 1e-14})
    return r.x if f(r.x) >= v[k] else g[k]


def nash(th, gi, ge):
    if gi < 0 or ge < 0:
        return -1e300
    return th * math.log(max(gi, 1e-300)) + (1 - th) * math.log(max(ge, 1e-300))


def si_share(th, pref, de):
    I = [E]

    def f(x):
        gi = expect(lambda a: inv_pay(a, I, [x], 0, pref)) - E
        ge = expect(lambda a: ent_pay(a, I, [x], pref, de)) - de
        return nash(th, gi, ge)

    return 1 - argmax_share(f, 1.0)


def ti_share(th, pref, de):
    I = [E / 2, E / 2]
    s = [0.25, 0.25]
    for _ in range(200):
        old = list(s)
        for i in (0, 1):
            o = 1 - i
            Io = [0.0, 0.0]
            Io[o] = I[o]
            so = [0.0, 0.0]
            so[o] = s[o]
            dei = de * (E - I[o]) / E + expect(lambda a: ent_pay(a, Io, so, pref, de))

            def f(x):
                ss = list(s)
                ss[i] = x
                gi = expect(lambda a: inv_pay(a, I, ss, i, pref)) - I[i]
                ge = expect(lambda a: ent_pay(a, I, ss, pref, de)) - dei
                return nash(th, gi, ge)

            s[i] = argmax_share(f, 1 - s[o])
        if max(abs(a - b) for a, b in zip(s, old)) < 1e-13:
            break
    return 1 - sum(s)


def estimation_fixture():
    rows = []
    deltas = iter([0.011, 0.017, 0.023, 0.007, 0.013, 0.019, 0.029, 0.005])
    for inst in ("SI", "TI"):
        for contract in ("Common", "Preferred"):
            for arm in ("PoorEnt", "RichEnt"):
                pref = contract == "Preferred"
                fn = si_share if inst == "SI" else ti_share
                s = fn(THETA_TRUE, pref, DE[arm])
                d = next(deltas)
                # Symmetric perturbations keep the least-squares optimum at the truth.
                for v in (s, s + d, s - d):
                    rows.append((inst, contract, arm, f"{v:.15f}"))
    with open(DATA / "estimation_synthetic.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["institution", "contract", "arm", "share"])
        w.writerows(rows)


def deciles(rows):
    rows = sorted(rows, key=lambda r: (r[0], r[2], -r[1]))  # amount, count, -valuation
    n = len(rows)
    B = min(10, n)
    out, start = [], 0
    for k in range(1, B + 1):
        end = n if k == B else max(start, k * n // B)
        while 0 < end < n and rows[end][0] == rows[end - 1][0]:
            end += 1
        out.append(rows[start:end])
        start = end
    return out


def funding_fixture():
    rng = random.Random(20240601)
    stages = {"PreSeed": 40, "Seed": 57, "SeriesAB": 33}
    recs = []
    for stage, n in stages.items():
        scale = {"PreSeed": 0.5, "Seed": 2.0, "SeriesAB": 10.0}[stage]
        for _ in range(n):
            amount = round(scale * rng.lognormvariate(0, 0.6), 3)
            count = rng.choice([1, 1, 1, 2, 2, 3, 4, 5, 6])
            share = min(0.95, max(0.03, 0.12 + 0.025 * count + rng.gauss(0, 0.04)))
            recs.append([stage, amount, round(amount / share, 3), count])
        # A tie at a decile boundary.
        recs.append([stage, recs[-1][1], round(recs[-1][2] * 1.1, 3), 2])
    bad = [
        ["Seed", 1.5, 0, 2],            # nonpositive valuation
        ["Seed", 3.0, 2.0, 1],          # share > 1
        ["PreSeed", -1.0, 5.0, 1],      # nonpositive amount
        ["SeriesZ", 1.0, 5.0, 1],       # unknown stage
        ["Seed", 1.0, 5.0, 0],          # investor_count < 1
    ]
    allrows = recs + bad
    rng.shuffle(allrows)
    with open(DATA / "funding_toy.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "amount", "post_money_valuation", "investor_count"])
        w.writerows(allrows)

    with open(DATA / "funding_toy_expected.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "decile", "n", "r", "p"])
        for stage in ("PreSeed", "Seed", "SeriesAB"):
            sub = [(r[1], r[2], r[3]) for r in recs if r[0] == stage]
            for k, b in enumerate(deciles(sub), start=1):
                x = [c for _, _, c in b]
                y = [a / v for a, v, _ in b]
                r = p = ""
                if len(b) >= 3 and len(set(x)) > 1 and len(set(y)) > 1:
                    res = pearsonr(x, y)
                    r, p = repr(float(res[0])), repr(float(res[1]))
                w.writerow([stage, k, len(b), r, p])


def main():
    DATA.mkdir(exist_ok=True)
    estimation_fixture()
    funding_fixture()
    return 0


if __name__ == "__main__":
    sys.exit(main())
