"""Smoke test for the capnodal extension module."""

import math

import capnodal


def main():
    f = capnodal.HarmonicField.sample(20, seed=7)
    assert f.ell == 20 and len(f.coefficients) == 41
    g = capnodal.HarmonicField(20, f.coefficients)
    assert g.eval(0.3, 1.1) == f.eval(0.3, 1.1)
    dtheta, dphi = f.gradient(0.3, 1.1)
    assert math.isfinite(dtheta) and math.isfinite(dphi)

    p, dp, _ = capnodal.eval_legendre(10, 1.0)
    assert abs(p - 1.0) < 1e-12 and abs(dp - 55.0) < 1e-9

    z = capnodal.nodal_length_cap(f, 0.5)
    length, lines = capnodal.nodal_length_cap(f, 0.5, segments=True)
    assert abs(z - length) < 1e-12 and lines
    assert capnodal.nodal_length_global(f) > z

    h4, m = capnodal.local_trispectrum(f, 0.5)
    assert math.isfinite(h4) and math.isfinite(m)
    assert math.isfinite(capnodal.second_chaos_projection(f, 0.5))

    rep = capnodal.theory_report(200, 0.5)
    assert abs(rep["mean_local"] - capnodal.predict_mean_local(200, 0.5)) < 1e-12

    try:
        capnodal.predict_mean_local(200, 4.0)
    except ValueError as e:
        assert "radius" in str(e)
    else:
        raise AssertionError("radius 4.0 accepted")

    run = capnodal.run_experiment(20, 0.6, 8, seed=3)
    assert len(run["records"]) == 8
    assert [r["replicate_index"] for r in run["records"]] == list(range(8))

    stat, threshold, _ = capnodal.clt_check(capnodal.standardize([float(i % 17) for i in range(300)]))
    assert 0.0 <= stat <= 1.0 and threshold > 0.0
    print("smoke test ok, capnodal", capnodal.__version__)


if __name__ == "__main__":
    main()
