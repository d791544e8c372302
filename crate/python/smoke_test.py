#!/usr/bin/env python3
"""Smoke test for the `heavenly` extension module.

Build the module first:

    cargo build -p heavenly-py --release

The script locates the cdylib in target/, exposes it as `heavenly` on
sys.path, and exercises the main entry points.
"""
import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def locate_cdylib():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libheavenly.so", "libheavenly.dylib", "heavenly.dll")
    ]
    for c in candidates:
        if c.exists():
            return c
    sys.exit("build the extension first: cargo build -p heavenly-py --release")


def main():
    lib = locate_cdylib()
    tmp = tempfile.mkdtemp(prefix="heavenly_py_")
    suffix = ".so" if lib.suffix != ".dll" else ".pyd"
    shutil.copy2(lib, pathlib.Path(tmp) / f"heavenly{suffix}")
    sys.path.insert(0, tmp)

    import heavenly

    params = heavenly.canonical_params()
    box = heavenly.canonical_box()
    print(f"heavenly {heavenly.__version__}; box = {box}")

    # the evaluation point sits inside the certified box
    t, x, y, z = 0.1, 1.0, 0.2, -0.3

    u = heavenly.u_value(params, t, x, y, z)
    v = heavenly.v_value(params, t, x, y, z)
    ut = heavenly.u_partial(params, t, x, y, z, (1, 0, 0, 0))
    assert abs(ut - v) < 1e-14 * max(1.0, abs(v)), "v must equal u_t"
    print(f"u = {u:.12f}, v = u_t = {v:.12f}")

    r1, r2 = heavenly.cma_relative(params, t, x, y, z)
    assert r1 <= 1e-9 and r2 <= 1e-9, (r1, r2)
    e1, e2 = heavenly.invariance_relative(params, t, x, y, z)
    assert e1 <= 1e-8 and e2 <= 1e-8, (e1, e2)
    name, worst = heavenly.chain_worst(params, t, x, y, z)
    assert worst <= 1e-9, (name, worst)
    print(f"residuals: cma ({r1:.1e}, {r2:.1e}), invariance ({e1:.1e}, {e2:.1e}), "
          f"chain worst {name} {worst:.1e}")

    a, b, c, q = heavenly.metric(params, t, x, y, z)
    a2, b2, c2, q2 = heavenly.metric(params, t, x, y, z, closed_form=True)
    for u1, u2 in ((a, a2), (b, b2), (c, c2), (q, q2)):
        assert abs(u1 - u2) <= 1e-10 * max(abs(u1), 1e-10)
    print(f"metric: a={a:.6f} b={b:.6f} c={c:.6f} Q={q:.6f} (paths agree)")

    kret, ricci, duality, cross = heavenly.curvature_summary(params, t, x, y, z)
    assert ricci <= 1e-8 * kret ** 0.5
    assert duality <= 1e-9 and cross <= 1e-8
    print(f"curvature: kretschmann={kret:.9f} ricci_max={ricci:.1e} "
          f"duality={duality:.1e} cross={cross:.1e}")

    cert = json.loads(heavenly.certify(params, box, 128))
    assert cert["ok"], cert

    rep = json.loads(heavenly.killing_report(params, box, n_points=200, degree=3))
    assert rep["verdict"] == "noninvariant", rep
    flat = json.loads(heavenly.killing_report(params, box, n_points=200, degree=3, flat=True))
    assert flat["verdict"] == "inconclusive", flat
    print(f"killing: solution ratio {rep['smallest_rel']:.2e} (noninvariant), "
          f"flat ratio {flat['smallest_rel']:.2e} (kernel found)")

    # error paths surface as ValueError
    bad = json.loads(params)
    bad["c1"] = 0.0
    try:
        heavenly.u_value(json.dumps(bad), t, x, y, z)
    except ValueError as e:
        print(f"invalid params rejected: {e}")
    else:
        sys.exit("expected ValueError for c1 = 0")

    print("smoke test OK")


if __name__ == "__main__":
    main()
