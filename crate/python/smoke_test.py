"""Smoke test for the shortskew_py extension.

Build and run from the repository root:

    cargo build --release -p shortskew-py --features extension-module
    cp target/release/libshortskew_py.so python/shortskew_py.so
    python3 python/smoke_test.py
"""
import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import shortskew_py as ss


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    assert "kawai" in ss.PRESETS

    m = ss.Model.preset("kawai")
    assert m.kind == "ts"
    back = ss.Model.from_json(m.to_json())
    assert back.to_json() == m.to_json()
    d = m.derived()
    assert set(d) >= {"gamma_tilde", "eta"}
    assert 0.0 < m.positivity() < 1.0

    ex = ss.Expansion(m)
    t = 0.05
    skew = ex.eval("skew", t)
    first, second = ex.eval("skew", t, 1), ex.eval("skew", t, 2)
    assert math.isfinite(skew) and math.isfinite(first) and math.isfinite(second)
    terms = ex.terms("digital")
    exps = [e for _, e, _ in terms]
    assert exps == sorted(exps) and exps[0] == 0.0
    assert "coefficients" in ex.to_dict()

    # expansion digital price against Monte Carlo at short maturity
    tm = 1e-3
    mc, se = ss.mc_digital(m, tm, paths=200_000, seed=3)
    approx = ex.eval("digital", tm)
    assert abs(mc - approx) < 5 * se + 0.01, (mc, se, approx)
    assert ss.mc_digital(m, tm, paths=20_000, seed=3) == ss.mc_digital(m, tm, paths=20_000, seed=3)

    s, s_se = ss.mc_skew(m, 0.05, paths=100_000)
    assert s < 0 and s_se > 0
    smile = ss.mc_smile(m, 0.05, [-0.05, 0.0, 0.05], paths=50_000)
    assert len(smile) == 3 and all(iv > 0 for _, iv, _ in smile)

    for kind, k in [("call", 110.0), ("put", 90.0)]:
        p = ss.bs_price(100.0, k, 0.25, 0.3, kind)
        assert close(ss.implied_vol(p, 100.0, k, 0.25, kind), 0.3, 1e-10)
    try:
        ss.implied_vol(-1.0, 100.0, 100.0, 0.25)
        raise AssertionError("negative price accepted")
    except ValueError:
        pass

    assert ss.otm_vol(m, -0.2, 0.01) > 0
    assert ss.otm_skew(m, -0.2, 0.01) < 0

    mixed = ss.Model(0.0013, 0.0040, 0.41, 1.93, 1.5, sigma=0.1)
    assert mixed.kind == "ts+bm"
    assert ss.Expansion(mixed).eval("skew", 0.01) < 0

    try:
        ss.Model(0.01, 0.01, 1.0, 1.0, 2.5)
        raise AssertionError("Y > 2 accepted")
    except ValueError:
        pass

    here = os.path.dirname(os.path.abspath(__file__))
    sample = os.path.join(here, "..", "data", "chains", "sample_mixed_bm.csv")
    if os.path.exists(sample):
        res = ss.calibrate(sample, t_max=0.25, model="mixed")
        assert res and math.isfinite(res[0]["calibration"]["Y"])
        print("calibration:", json.dumps(res[0]["calibration"]))

    print("ok: skew(t=%.2f) first=%.4f second=%.4f full=%.4f" % (t, first, second, skew))


if __name__ == "__main__":
    main()
