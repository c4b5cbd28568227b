#!/usr/bin/env python3
"""Smoke test for the relaybeam_py extension module.

Builds the cdylib if needed, loads it without installing, and checks the
bindings end to end: channel sampling, the optimizing solver, boundary
points, a small region sweep, the heuristic baselines, and error surfaces.

Run from anywhere:  python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    """Build (if needed) and import relaybeam_py from the cargo target dir."""
    candidates = [
        REPO / "target" / "debug" / "librelaybeam_py.so",
        REPO / "target" / "release" / "librelaybeam_py.so",
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        print("building relaybeam-py ...", flush=True)
        subprocess.run(
            ["cargo", "build", "-p", "relaybeam-py"], cwd=REPO, check=True
        )
        lib = candidates[0]
    stage = Path(tempfile.mkdtemp(prefix="relaybeam_py_"))
    shutil.copy2(lib, stage / "relaybeam_py.so")
    sys.path.insert(0, str(stage))
    import relaybeam_py

    return relaybeam_py


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def main():
    rb = load_module()

    # Unit conversion.
    assert close(rb.dbw_to_watts(10.0), 10.0)
    assert close(rb.dbw_to_watts(0.0), 1.0)

    # Channel sampling is deterministic in the seed and sized by k.
    ch = rb.ChannelSet.sample(7, 3)
    assert ch.k == 3
    assert len(ch.h_s) == 3 and isinstance(ch.h_s[0], complex)
    again = rb.ChannelSet.sample(7, 3)
    assert ch.h_d == again.h_d
    assert rb.ChannelSet.sample(8, 3).h_d != ch.h_d

    # Construction from explicit lists round-trips.
    rebuilt = rb.ChannelSet(ch.h_s, ch.h_j, ch.h_d, ch.h_e)
    assert rebuilt.h_e == ch.h_e

    p = rb.SystemParams(
        k=3,
        p_s=rb.dbw_to_watts(6.0),
        p_j=rb.dbw_to_watts(10.0),
        p_r_max=rb.dbw_to_watts(10.0),
    )
    assert p.k == 3 and close(p.epsilon, 0.99) and p.q_target == 0.0

    # The optimizing solver: positive rate, certified bound, tight
    # recovery, and a design that honors the power budget.
    sol = rb.solve(ch, p)
    assert sol.rate_bits > 0.0
    assert sol.rate_bound >= sol.rate_bits - 1e-9
    assert sol.rank1_gap < 1e-3
    assert sol.iterations > 0
    assert sol.formulation in ("direct", "reduced", "combined")
    bf = sol.beamformer
    assert bf.k == 3 and len(bf.matrix) == 3
    assert close(rb.capacity(bf, ch, p), sol.rate_bits)
    assert rb.relay_power(bf, ch, p) <= p.p_r_max * (1.0 + 1e-6)

    # Determinism: the same inputs give bit-identical results.
    assert rb.solve(ch, p).rate_bits == sol.rate_bits

    # The three formulations agree on the achieved rate.
    for name in ("direct", "reduced", "combined"):
        alt = rb.solve(ch, p, formulation=name)
        assert close(alt.rate_bits, sol.rate_bits, 1e-3), (name, alt.rate_bits)

    # Boundary points: the iterative and closed-form energy maxima match,
    # and a solve at half the maximum target actually harvests that much.
    qm = rb.q_max(ch, p)
    assert qm.q_max_watts > 0.0
    assert close(rb.q_max_closed_form(ch, p), qm.q_max_watts, 1e-4)
    target = 0.5 * qm.q_max_watts
    constrained = rb.solve(ch, p.with_q_target(target))
    assert rb.harvested_energy(constrained.beamformer, ch, p) >= target * (1.0 - 1e-6)
    assert constrained.rate_bits <= sol.rate_bits + 1e-6

    # A small region sweep: full grid, monotone rate, matching corners.
    reg = rb.rate_energy_region(ch, p, n_grid=4)
    assert len(reg.points) + len(reg.failures) == 4
    qs = [q for q, _ in reg.points]
    rates = [r for _, r in reg.points]
    assert qs == sorted(qs)
    for lo, hi in zip(rates[1:], rates[:-1]):
        assert lo <= hi + 1e-6 * (1.0 + hi)
    assert close(rates[0], reg.r_max, 1e-9)
    assert close(rates[-1], reg.r_eh, 1e-9)
    assert reg.q_max > 0.0 and reg.eh_backoff >= 0.0

    # Heuristic baselines spend the whole budget and never beat the solver.
    for name, design in (
        ("pmf", rb.pmf(ch, p)),
        ("zf", rb.zf(ch, p, seed=11)),
        ("dr", rb.dr(ch, p)),
    ):
        assert close(rb.relay_power(design, ch, p), p.p_r_max, 1e-6), name
        assert rb.capacity(design, ch, p) <= sol.rate_bits + 1e-6, name

    # Error surfaces.
    try:
        rb.SystemParams(k=3, p_s=1.0, p_j=1.0, p_r_max=1.0, epsilon=1.5)
        raise AssertionError("epsilon=1.5 should be rejected")
    except ValueError:
        pass
    try:
        rb.solve(ch, p, formulation="fancy")
        raise AssertionError("unknown formulation should be rejected")
    except ValueError:
        pass
    try:
        rb.Beamformer([[1 + 0j, 0j], [0j]])
        raise AssertionError("ragged matrix should be rejected")
    except ValueError:
        pass

    print("smoke test passed")


if __name__ == "__main__":
    main()
