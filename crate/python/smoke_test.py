#!/usr/bin/env python3
"""Smoke test for the anoq_py extension module.

Build the extension first:

    cargo build --release -p anoq-py

then run this script from the repository root:

    python3 python/smoke_test.py
"""

import json
import os
import shutil
import sys
import tempfile


def load_module():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates = [
        os.path.join(root, "target", "release", "libanoq_py.so"),
        os.path.join(root, "target", "debug", "libanoq_py.so"),
        os.path.join(root, "target", "release", "libanoq_py.dylib"),
        os.path.join(root, "target", "debug", "libanoq_py.dylib"),
    ]
    built = next((c for c in candidates if os.path.exists(c)), None)
    if built is None:
        sys.exit("build the extension first: cargo build --release -p anoq-py")
    tmp = tempfile.mkdtemp(prefix="anoq_py_")
    shutil.copy(built, os.path.join(tmp, "anoq_py.so"))
    sys.path.insert(0, tmp)
    import anoq_py

    return anoq_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


STABILITY_TOML = """
[scenario]
mode = "stability"
rounds = 2000
seed = 5
transmission = "bernoulli"

[topology]
servers = 3
links = [[1, 2], [2, 1], [2, 3], [3, 2]]
capacity_bound = 1.0
arrival_bound = 1.0

[adversary]
family = "piecewise"
cap_lo = 0.95
cap_hi = 1.0
phase_min = 100
phase_max = 200
slack_target = 0.28

[arrivals]
entries = [[1, 3]]
levels = [[0.2], [0.3]]

[reference]
c_a = 1.0
delta_a = 0.25

[scheduler]
kind = "nso"
"""


def main():
    aq = load_module()
    print(f"anoq_py {aq.__version__}")

    # Queue dynamics: direct substitution and underflow clipping.
    topo = aq.Topology(2, [(1, 2)], 2.0, 2.0)
    q = [[0.0, 3.0], [0.0, 0.0]]
    mu = [[0.0, 1.0]]
    lam = [[0.0, 0.5], [0.0, 0.0]]
    nxt = aq.step(topo, q, mu, lam)
    approx(nxt[0][1], 2.5)
    approx(nxt[1][1], 0.0)  # destination queue stays empty
    approx(aq.queue_l1(nxt), 2.5)

    # Deterministic transmissions are exactly C * a.
    topo3 = aq.Topology(3, [(1, 2)], 2.0, 0.0)
    mu = aq.realize_transmissions(topo3, [2.0], [[0.5, 0.5, 0.0]], "deterministic", 0)
    assert mu == [[1.0, 1.0, 0.0]], mu

    # Link learner: fresh uniform action, doubling on a large announcement.
    learner = aq.AdaPfol(3, 1000)
    assert all(abs(x - 1 / 3) < 1e-12 for x in learner.act())
    assert learner.announce_bound(3.0) is True
    approx(learner.scale, 6.0)
    learner.feed([1.0, 0.0, -1.0])
    assert learner.resets == 1

    # Arrival learner: schedule/act/feed round trip with a feasible point.
    bgd = aq.AdaBgd([0.0, 0.0], [1.0, 1.0], 1.0, 0.45, 1000, 1.0, 2.0, 2.0, 1.0, 3)
    eta, delta, alpha = bgd.schedule(0.0, 0.0)
    assert 0 < alpha < 1 and delta > 0 and eta > 0
    x = bgd.act()
    assert all(0.0 <= xi <= 1.0 for xi in x), x
    bgd.feed(0.25)
    assert bgd.eta_strictly_decreasing

    # Dynamic regret arithmetic.
    approx(aq.measure_dynamic_regret([[1.0, 0.0]], [[1.0, 0.0]], [[0.0, 1.0]]), 1.0)
    approx(aq.path_length([[0.0, 0.0], [1.0, 2.0]]), 3.0)

    # Full runs are deterministic in (scenario, seed).
    summary1, csv1 = aq.run_scenario(STABILITY_TOML)
    summary2, csv2 = aq.run_scenario(STABILITY_TOML)
    assert csv1 == csv2
    s = json.loads(summary1)
    assert s["invariants_ok"] is True
    assert s["certified_slack"] >= 0.28
    assert csv1.splitlines()[0].startswith("t,l1_queue")
    print(f"stability run: avg_queue={s['avg_queue']:.3f} slack={s['certified_slack']:.3f}")

    # Trace round trip through the text format.
    trace_text = aq.generate_trace(STABILITY_TOML)
    verdict = json.loads(aq.verify_trace(trace_text))
    assert verdict["accept"] is True and verdict["slack"] >= 0.28
    assert aq.trace_hash(trace_text) == aq.trace_hash(trace_text)
    assert json.loads(summary1)["trace_hash"] == aq.trace_hash(trace_text)

    # A small scheduler sweep shares the trace across schedulers.
    sweep_csv = aq.sweep(STABILITY_TOML, "scheduler", ["nso", "uniform_random"], [5])
    rows = [r.split(",") for r in sweep_csv.strip().splitlines()[1:]]
    hashes = {r[-1] for r in rows}
    assert len(rows) == 2 and len(hashes) == 1, sweep_csv

    print("smoke test passed")


if __name__ == "__main__":
    main()
