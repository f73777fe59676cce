#!/usr/bin/env python3
"""Smoke test for the pdform_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/
(release preferred), copies it into a temp directory under the import
name Python expects, and exercises one call from each functional area
against known values.  Run `cargo build -p pdform-py` first.
"""

import json
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libpdform_py.so",
        ROOT / "target" / "debug" / "libpdform_py.so",
        ROOT / "target" / "release" / "pdform_py.dll",
        ROOT / "target" / "debug" / "pdform_py.dll",
        ROOT / "target" / "release" / "libpdform_py.dylib",
        ROOT / "target" / "debug" / "libpdform_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("no built extension found; run: cargo build -p pdform-py")
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="pdform_py_"))
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    shutil.copy2(built, tmp / f"pdform_py{suffix}")
    sys.path.insert(0, str(tmp))
    import pdform_py

    return pdform_py


def main():
    m = load_module()
    checks = 0

    def ok(label, cond):
        nonlocal checks
        assert cond, f"FAIL {label}"
        checks += 1
        print(f"PASS {label}")

    disc = json.dumps(
        {"n": 2, "d": 2, "terms": [{"alpha": [2, 0], "coef": "1"}, {"alpha": [0, 2], "coef": "1"}]}
    )
    est = json.loads(m.volume_mc(disc, samples=20_000, seed=7))
    ok("volume of the unit disc is pi", abs(est["value"] - math.pi) < 1e-9)

    i2 = json.dumps({"size": 2, "rows": [[1, 0], [0, 1]]})
    ok("closed-form quadratic volume", abs(m.volume_quadratic_closed(i2) - math.pi) < 1e-12)
    ok(
        "weighted quadratic closed form is pi/2",
        abs(m.hsos_quadratic_closed(i2, i2) - math.pi / 2) < 1e-12,
    )

    ok("sigma_4^4 = 3/8 for two variables", abs(m.sigma_d(2, 4) ** 4 - 0.375) < 1e-12)
    ok("exact sigma_4^4 renders as 0.375", m.sigma_pow_d_exact(2, 4) == "0.375")

    mm = json.loads(m.moment_matrix(i2, 4))
    ok(
        "moment matrix of the identity has 9/8 on the leading diagonal",
        abs(mm["rows"][0][0] - 1.125) < 1e-12 and mm["basis"][0] == [2, 0],
    )

    residual, condition = m.gram_identity_residual(i2, 4)
    ok(f"float Gram residual {residual:.2e} <= 1e-10", residual <= 1e-10 and condition >= 1.0)
    ok("exact Gram residual is 0", m.gram_identity_residual_exact(i2, 4) == "0")

    value, stderr, _ = m.sphere_measure_moment_mc(i2, 4, [2, 2], samples=200_000, seed=5)
    ok(
        "sphere-measure moment (2,2) matches the matrix entry 3/8",
        abs(value - 0.375) <= 3 * stderr + 1e-12,
    )

    k = m.k_constant(2, 4)
    ok("partition mass is positive and finite", 0 < m.partition_mass(i2, 4, k) < float("inf"))

    cross = json.dumps({"n": 2, "d": 4, "terms": [{"alpha": [2, 2], "coef": "1"}]})
    cls = json.loads(m.classify_binary(cross))
    ok("x^2 y^2 classifies as infinite volume", cls["verdict"] == "infinite")

    quartic = json.dumps(
        {"n": 2, "d": 4, "terms": [{"alpha": [4, 0], "coef": "1"}, {"alpha": [0, 4], "coef": "1"}]}
    )
    vol = m.binary_volume_quadrature(quartic)
    ok("certified quadrature for x^4 + y^4", abs(vol - 3.7081493546027438) < 1e-9)

    axis = json.dumps(
        {
            "n": 3,
            "d": 4,
            "terms": [
                {"alpha": [2, 0, 2], "coef": "1"},
                {"alpha": [0, 2, 2], "coef": "1"},
                {"alpha": [4, 0, 0], "coef": "0.5"},
                {"alpha": [0, 4, 0], "coef": "0.5"},
            ],
        }
    )
    gc = json.loads(m.generic_check(axis))
    ok(
        "axis-family quartic is generic with one zero",
        gc["verdict"] == "generic" and len(gc["zeros"]) == 1,
    )

    diag = json.loads(m.finiteness_diagnostic(disc, samples=100_000, seed=3))
    ok("diagnostic calls the disc likely finite", diag["verdict"] == "likely_finite")

    i3 = json.dumps({"size": 3, "rows": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
    bundle = m.sos_expand(i3, 2, 4)
    sv = json.loads(m.sos_volume(bundle, samples=200_000, seed=11))
    reference = 3.371500709625192  # volume for x^4 + x^2 y^2 + y^4
    ok(
        "volume from the Gram bundle matches its reference",
        abs(sv["value"] - reference) <= 5 * max(sv["stderr"], 1e-6),
    )

    # Degree-4 moments of the identity-covariance functional: sigma^4 E[z^gamma].
    gaussian_moments = {(4, 0): 1.125, (3, 1): 0.0, (2, 2): 0.375, (1, 3): 0.0, (0, 4): 1.125}
    moments = {
        "n": 2,
        "d": 4,
        "moments": [{"gamma": list(g), "value": v} for g, v in gaussian_moments.items()],
    }
    gram = json.loads(m.nesterov_gram(json.dumps(moments)))
    coef = {tuple(t["alpha"]): float(t["coef"]) for t in gram["form"]["terms"]}
    ok(
        "barrier-gradient Gram of the identity moments expands to (x^2+y^2)^2",
        abs(coef[(4, 0)] - 1) < 1e-8 and abs(coef[(2, 2)] - 2) < 1e-8 and abs(coef[(0, 4)] - 1) < 1e-8,
    )

    try:
        m.volume_mc("{bad json")
        raise SystemExit("FAIL malformed input should raise ValueError")
    except ValueError:
        ok("malformed input raises ValueError", True)

    npd = json.dumps({"size": 2, "rows": [[1, 0], [0, -1]]})
    try:
        m.moment_matrix(npd, 4)
        raise SystemExit("FAIL indefinite matrix should raise RuntimeError")
    except RuntimeError:
        ok("indefinite matrix raises RuntimeError", True)

    print(f"\n{checks} checks passed (module version {m.__version__})")


if __name__ == "__main__":
    main()
