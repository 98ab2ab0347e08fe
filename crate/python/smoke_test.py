"""Smoke test for the rylab extension module.

Build and copy the module next to this script first:

    cargo build --release -p rylab-py
    cp target/release/librylab.so python/rylab.so
    python3 python/smoke_test.py
"""

import json
import tempfile

import rylab


def main():
    steady = rylab.Flow("cigar", alpha=0.5, beta=0.5, potential="steady")
    ry = steady.ry(0.1, [0.3, 0.4])
    assert max(abs(v) for row in ry for v in row) < 1e-6, ry
    assert steady.closed_form_ry(0.1, [0.3, 0.4]) == [[0.0, 0.0], [0.0, 0.0]]

    poincare = rylab.Flow("poincare", n=2)
    engine = poincare.ry(0.5, [0.2, 1.5])
    printed = poincare.closed_form_ry(0.5, [0.2, 1.5])
    gap = max(abs(a - b) for ra, rb in zip(engine, printed) for a, b in zip(ra, rb))
    assert gap < 1e-6, gap

    shrinking = rylab.Flow("cigar", alpha=0.3, beta=0.1, potential="exp 2")
    trend, uniform, lo, hi = shrinking.classify([(0.0, [0.0, 0.0]), (1.0, [0.5, -0.3])])
    assert trend == "Shrinking" and hi < 0, (trend, lo, hi)

    t, h, err = rylab.solve_cigar(21, 0.05)
    assert abs(t - 0.05) < 1e-9 and len(h) == 21 and err < 1e-2, (t, err)

    try:
        rylab.Flow("cigar", potential="sideways")
    except ValueError as e:
        assert "potential" in str(e)
    else:
        raise AssertionError("bad potential accepted")

    code, report = rylab.run_config(
        "command = classify\n[flow]\nkind = cigar\npotential = exp 2\n"
        "[params]\nalpha = 0.3\nbeta = 0.1\n[eval]\ntimes = 0, 1\n"
        "points = 0 0; 0.5 -0.3\ntol = 1e-8\n[output]\ndir = " + tempfile.mkdtemp() + "\n"
    )
    assert code == 0
    assert json.loads(report)["data"]["trend"] == "Shrinking"
    print(f"rylab {rylab.__version__} smoke test ok; cigar grid error {err:.2e}")


if __name__ == "__main__":
    main()
