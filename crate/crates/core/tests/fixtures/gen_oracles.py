"""Regenerates the frozen oracle values used by the acceptance suite.

    python3 gen_oracles.py > oracles.json
"""
import json

import mpmath
import numpy as np
from scipy.spatial.distance import jensenshannon

mpmath.mp.dps = 60


def js_pairs(rng, count, bins):
    out = []
    for _ in range(count):
        p = rng.integers(0, 20, bins).astype(float)
        q = rng.integers(0, 20, bins).astype(float)
        # sparse supports exercise the 0·log 0 convention
        p[rng.random(bins) < 0.3] = 0.0
        q[rng.random(bins) < 0.3] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
        if q.sum() == 0:
            q[-1] = 1.0
        out.append({"p": p.tolist(), "q": q.tolist(), "d": float(jensenshannon(p, q))})
    return out


def pearson_mp(xs, ys):
    x = [mpmath.mpf(v) for v in xs]
    y = [mpmath.mpf(v) for v in ys]
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    r = sxy / mpmath.sqrt(sxx * syy)
    df = n - 2
    # two-sided Student-t tail: I_{df/(df+t²)}(df/2, 1/2) = I_{1−r²}(df/2, 1/2)
    p = mpmath.betainc(mpmath.mpf(df) / 2, mpmath.mpf(1) / 2, 0, 1 - r * r, regularized=True)
    return float(r), float(p)


def pearson_cases(rng):
    cases = []
    for slope in (0.8, 0.1, -0.4):
        xs = rng.normal(0, 1, 10).round(6)
        ys = (slope * xs + rng.normal(0, 1, 10)).round(6)
        r, p = pearson_mp(xs, ys)
        cases.append({"x": xs.tolist(), "y": ys.tolist(), "r": r, "p": p})
    return cases


def main():
    rng = np.random.default_rng(20240611)
    print(json.dumps({"js": js_pairs(rng, 100, 10), "pearson": pearson_cases(rng)}, indent=1))


if __name__ == "__main__":
    main()
