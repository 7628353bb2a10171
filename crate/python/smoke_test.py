"""Smoke test for the spatial_anc Python extension.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml`, or
`cargo build --release -p spatial-anc-py` and copy
target/release/libspatial_anc_py.so to spatial_anc.so on PYTHONPATH.
"""

import cmath
import math
import sys
import tempfile
from pathlib import Path

import spatial_anc as sa


def check(cond, what):
    if not cond:
        sys.exit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    check(abs(sa.bessel_j(0, 1.0) - 0.7651976865579666) < 1e-14, "J0(1)")
    h = sa.hankel2(1, 2.5)
    check(abs(h - complex(sa.bessel_j(1, 2.5), -sa.bessel_y(1, 2.5))) < 1e-15, "H2 = J - iY")

    f = 400.0
    k = sa.wavenumber(f)
    ref = sa.ArrayGeometry(2.0, 41)
    scene = sa.Scene()
    scene.add_plane_wave(0.0)
    scene.add_plane_wave(3 * math.pi / 4, 0.7)
    samples = scene.sample(f, ref)
    check(len(samples) == 41, "array sampling")

    truth = scene.modes(f, 20)
    est = sa.extract_modes(samples, ref, k, 20)
    # orders beyond k * r alias into the top of the range; compare the ones
    # that matter inside a 1 m control disc
    inner = range(20 - int(k), 21 + int(k))
    err = max(abs(truth[i] - est[i]) for i in inner if est[i] is not None)
    check(err < 1e-6, f"low-order mode extraction (err {err:.1e})")

    d = sa.Dictionary(ref, sa.wavenumber(800.0))
    check(d.shape == (41, 128), "dictionary shape")
    s800 = scene.sample(800.0, ref)
    r = d.solve_irls(s800, p=0.5)
    top = sorted(range(128), key=lambda l: -abs(r["gamma"][l]))[:2]
    check(sorted(top) == [0, 48], f"IRLS support {sorted(top)}")
    beta = sa.modes_from_plane_waves(r["gamma"], d.angles(), sa.wavenumber(800.0), 20)
    check(sa.sdr(scene.modes(800.0, 20), beta) > 40.0, "IRLS reference SDR")

    g = sa.secondary_path(1.5, k, 20)
    check(abs(g[20] - (-0.25j) * sa.hankel2(0, 1.5 * k)) < 1e-15, "secondary path m=0")

    trace = sa.run_anc("irls-p0.5", 700.0)
    check(trace["final_noise_level_db"] < -20.0, f"ANC at 700 Hz ({trace['final_noise_level_db']:.1f} dB)")
    check(len(trace["noise_level_db"]) == 50, "trace length")

    try:
        sa.run_anc("irls-p2", 700.0)
        check(False, "bad method rejected")
    except ValueError:
        check(True, "bad method rejected")

    with tempfile.TemporaryDirectory() as tmp:
        cfg = sa.default_config().replace("methods = [", 'methods = ["mdff"]\n_unused = [', 1)
        try:
            sa.run_experiment("fig3", tmp, cfg)
            check(False, "unknown config key rejected")
        except ValueError:
            check(True, "unknown config key rejected")
        files = sa.run_experiment("fig3", tmp)
        check(Path(files[0]).read_text().startswith("# experiment: fig3"), "fig3 CSV written")

    print("all smoke tests passed")


if __name__ == "__main__":
    main()
