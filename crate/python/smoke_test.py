#!/usr/bin/env python3
"""Smoke test for the qfst_py extension module.

Builds nothing itself: run `cargo build -p qfst-python` (or --release)
first, then `python3 python/smoke_test.py`. The script locates the built
cdylib, exposes it under the importable name, and exercises the main
types and operations.
"""

import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def import_qfst_py():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libqfst_py.so", "qfst_py.so", "libqfst_py.dylib")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("build the extension first: cargo build -p qfst-python")
    # newest build wins
    src = max(built, key=lambda p: p.stat().st_mtime)
    stage = pathlib.Path(tempfile.mkdtemp(prefix="qfst-py-"))
    shutil.copy2(src, stage / "qfst_py.so")
    sys.path.insert(0, str(stage))
    import qfst_py

    return qfst_py


def close(a, b, tol=1e-9):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


def main():
    q = import_qfst_py()

    # R4: branch machine separating 1/2 vs 0
    r4 = q.build_machine("R4", "qfst", cap=8)
    assert r4.kind == "quantum"
    assert not r4.validate()
    accept, reject = r4.distribution("00112")
    assert close(accept["44"], 0.5) and close(reject, 0.5), (accept, reject)
    assert close(r4.accept_prob("000113", "44"), 0.5)

    # file format round trip
    again = q.Transducer.from_json(r4.to_json())
    assert again.n_states == r4.n_states

    # tile machine: matching index word accepted at 2/3, and the
    # squared-moduli collapse preserves it (identity tile unitaries)
    pcp = q.build_pcp_machine(["a", "ba"], ["ab", "a"], kind="qfst")
    assert close(pcp.accept_prob("12", "aba"), 2.0 / 3.0)
    pfst = q.squared_moduli(pcp)
    assert pfst.kind == "probabilistic"
    assert close(pfst.accept_prob("12", "aba"), 2.0 / 3.0)

    # relation checks: R4 has an isolated cutpoint at 1/4 but cannot be
    # computed with probability 0.55
    ok, margin, failures = q.check_relation(
        r4, "R4", "cutpoint", alpha=0.25, epsilon=0.2, max_len=6
    )
    assert ok and not failures, (ok, margin, failures[:3])
    ok, _, failures = q.check_relation(r4, "R4", "prob", alpha=0.55, max_len=6)
    assert not ok and failures

    # range membership with witness
    r1 = q.build_machine("R1", "qfst", k=4, cap=10)
    verdict, witness = r1.range_member("22", alpha=0.5, delta=0.25)
    assert verdict == "yes" and witness is not None
    assert close(r1.accept_prob(witness, "22"), 1.0)
    verdict, _ = r1.range_member("2" * 13, alpha=0.5, delta=0.25)
    assert verdict == "no"

    # automaton conversions round-trip acceptance probabilities
    parity = q.build_sample_qfa("parity")
    assert not parity.validate()
    norm = q.normalize_end_transition(parity)
    as_qfst = q.qfa_to_qfst(norm)
    back = q.qfst_to_qfa(as_qfst)
    for w in ("", "1", "11", "0110", "10101"):
        a0, r0 = parity.outcome(w)
        assert close(as_qfst.accept_prob(w, "0"), a0)
        assert close(as_qfst.accept_prob(w, "1"), r0)
        a1, r1_ = back.outcome(w)
        assert close(a0, a1) and close(r0, r1_)

    # cutpoint shifting is the convex mixture
    mixed = q.shift_cutpoint(pfst, alpha=0.6, epsilon=0.05)
    p = 1.0 - 1.0 / (2.0 * 0.6)
    assert close(mixed.accept_prob("12", "aba"), (1.0 - p) * (2.0 / 3.0))

    # oracle agreement on a small machine
    assert q.oracle_max_deviation(pcp, max_len=3) < 1e-12

    # chain classification of a deterministic matrix
    r5 = q.build_machine("R5", "dfst")
    cls = r5.classify("0")
    assert any("last[0]" in c["states"] for c in cls["ergodic_classes"])

    print("qfst_py smoke test: all checks passed")


if __name__ == "__main__":
    main()
