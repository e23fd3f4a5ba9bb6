"""Acceptance suite: one test per criterion, exact on the exact backend.

Every test records a PASS/FAIL line (echoed again in the terminal summary)
and asserts at the stated tolerance and time budget.
"""

import random
import time

import pytest

from fedosov import checks
from fedosov.checks import FlatteningPool, curved_context
from fedosov.coefficients import ExactRing
from fedosov.geometry import ChartGeometry
from fedosov.gravity import (
    KINDS,
    LorentzConnection,
    MetricField,
    TetradField,
    background_eta,
    build_eh_endos,
    build_palatini_endos,
    self_adjointness,
)
from fedosov.trace import HomotopyPath

pytestmark = pytest.mark.acceptance

T2 = ChartGeometry(1)


def summary(results):
    parts = []
    for r in results:
        s = f"{r.name}={'ok' if r.passed else 'FAIL'}(n={r.count},{r.seconds:.1f}s)"
        if r.witness:
            s += f" witness={r.witness}"
        parts.append(s)
    return "; ".join(parts)


# ---------------------------------------------------------------------------


def test_moyal_involution_rule(record):
    ring = ExactRing(2)
    ctx = curved_context(ring, 2, 6, random.Random(101))
    t0 = time.perf_counter()
    res = checks.moyal_involution(ctx.space, ctx.bundle.gram, random.Random(1), n_pairs=50)
    dt = time.perf_counter() - t0
    ok = res.passed and res.count >= 50 and dt < 10
    record(1, ok, f"{summary([res])}, {dt:.1f}s < 10s")
    assert ok


def test_fedosov_core_identities(record):
    ring = ExactRing(2)
    t0 = time.perf_counter()
    ctx = curved_context(ring, 2, 6, random.Random(102))
    res = checks.core_identities(ctx, random.Random(2), n_triples=25)
    dt = time.perf_counter() - t0
    assoc = next(r for r in res if r.name == "associativity")
    ok = all(r.passed for r in res) and assoc.count >= 25 and dt < 120
    record(2, ok, f"{summary(res)}; total {dt:.1f}s < 120s")
    assert ok


def test_flat_plane_wave_closed_form(record):
    res = checks.flat_closed_form(ExactRing(2), T2, h_max=3, kmax=2)
    record(3, res.passed, summary([res]))
    assert res.passed and res.count == 25 * 25


def test_first_order_bracket_sign(record):
    ctx = curved_context(ExactRing(2), 1, 4, random.Random(104))
    res = checks.first_order_bracket(ctx, random.Random(4), n_pairs=20)
    ok = res.passed and res.count >= 20
    record(4, ok, f"{summary([res])}, s = {res.detail['s']}")
    assert ok


@pytest.fixture(scope="module")
def pool6():
    """Curved ``Gamma`` and ``Gamma^E`` on ``T^2``, rank 2, ``M`` through total degree 6."""
    ring = ExactRing(2)
    ctx = curved_context(ring, 2, 7, random.Random(105), target=6)
    return FlatteningPool(ctx, HomotopyPath(ctx, target=6), random.Random(5), size=5)


def test_flattening_isomorphism(record, pool6):
    t0 = time.perf_counter()
    res = checks.flattening_checks(pool6)
    dt = time.perf_counter() - t0
    hom = res[0]
    ok = all(r.passed for r in res) and hom.count >= 20 and dt < 300
    record(5, ok, f"{summary(res)}; total {dt:.1f}s < 300s")
    assert ok


def test_trace_cyclicity_and_reality(record, pool6):
    t0 = time.perf_counter()
    ring = ExactRing(2)
    ctx = curved_context(ring, 2, 5, random.Random(106), target=4)
    pool7 = FlatteningPool(ctx, HomotopyPath(ctx, target=4), random.Random(6), size=7)
    res4 = checks.trace_checks(pool7)
    for r in res4:
        r.name += "@N4"
    dt = time.perf_counter() - t0
    # the degree-6 pool reuses flattenings from the isomorphism test
    res6 = checks.trace_checks(pool6)
    for r in res6:
        r.name += "@N6"
    cyc = res4[0]
    ok = all(r.passed for r in res4 + res6) and cyc.count >= 20 and dt < 300
    record(6, ok, f"{summary(res4 + res6)}; {dt:.1f}s < 300s")
    assert ok


def test_self_adjointness_relations(record):
    ring = ExactRing(2, eps_order=2)
    failures, n = [], 0
    for seed in range(3):
        rng = random.Random(700 + seed)
        for lorentzian in (False, True):
            rel = self_adjointness(build_eh_endos(MetricField.random(ring, rng, background_eta(2, lorentzian))), "EH")
            n += len(rel)
            failures += [(seed, k) for k, v in rel.items() if not v]
        eta = background_eta(2, True)
        rel = self_adjointness(build_palatini_endos(TetradField.random(ring, rng, eta),
                                                    LorentzConnection.random(ring, rng, eta, 2)), "P")
        n += len(rel)
        failures += [(seed, k) for k, v in rel.items() if not v]
    record(7, not failures, f"{n} relations exact at E=2" + (f", failed {failures}" if failures else ""))
    assert not failures


@pytest.fixture(scope="module")
def actions_t2():
    ring = ExactRing(2, eps_order=2)
    out = {}
    for kind in KINDS:
        t0 = time.perf_counter()
        res, rep = checks.action_checks(kind, ring, T2, 4, random.Random(f"800:{kind}"), K=1)
        out[kind] = (res, rep, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def smoke_t4():
    return {kind: checks.torus4_smoke(kind, N=2, seed=9) for kind in ("P", "EH1A")}


def test_action_reality(record, actions_t2, smoke_t4):
    parts, ok = [], True
    for kind, (res, rep, dt) in actions_t2.items():
        real = next(r for r in res if r.name.endswith("reality"))
        ok &= real.passed and dt < 900 and bool(rep["rows"])
        table = ", ".join(f"h^{r['h']}e^{r['eps']}:{r['re']}{'+' if r['im'] >= 0 else ''}{r['im']}i"
                          for r in rep["rows"])
        parts.append(f"{kind} Im=0 {'ok' if real.passed else 'FAIL'} ({dt:.1f}s) [{table}]")
    res, rep = smoke_t4["P"]
    real = next(r for r in res if r.name.endswith("reality"))
    ratios = [abs(r["im"]) / abs(r["re"]) for r in rep["rows"] if r["re"]]
    ok &= real.passed and bool(ratios) and max(ratios) < 1e-9
    parts.append(f"T4 Palatini float max|Im|/|Re|={max(ratios or [float('nan')]):.1e}")
    record(8, ok, "; ".join(parts))
    assert ok


def test_classical_limit(record, actions_t2, smoke_t4):
    parts, ok = [], True
    for kind in ("EH1A", "EH1B", "P"):
        res, rep, _ = actions_t2[kind]
        lim = next(r for r in res if r.name.endswith("classical-limit"))
        dens = next(r for r in res if r.name.endswith("classical-density"))
        ok &= lim.passed and dens.passed
        parts.append(f"T2 {kind}: h0 {dict(rep['h0'])} vs oracle {rep['oracle']}, density {'ok' if dens.passed else 'FAIL'}")
    for kind, (res, rep) in smoke_t4.items():
        lim = next(r for r in res if r.name.endswith("classical-limit"))
        ok &= lim.passed and bool(rep["oracle"])
        h0 = {m: round(complex(v).real, 9) for m, v in rep["h0"].items()}
        oracle = {m: round(complex(v).real, 9) for m, v in rep["oracle"].items()}
        parts.append(f"T4 float {kind}: h0 {h0} vs oracle {oracle}")
    record(9, ok, "; ".join(parts))
    assert ok


def test_negative_controls(record):
    ring = ExactRing(2)
    parts, ok = [], True
    for label, sign, flip in (("bundle-sign", -1, False), ("form-involution", 1, True)):
        ctx = curved_context(ring, 2, 6, random.Random(102), bundle_sign=sign)
        res = [checks.moyal_involution(ctx.space, ctx.bundle.gram, random.Random(1), flip_forms=flip)]
        res += checks.core_identities(ctx, random.Random(2), flip_forms=flip)
        failed = [r for r in res if not r.passed]
        ok &= bool(failed) and all(r.witness for r in failed)
        first = failed[0] if failed else None
        parts.append(f"{label}: {len(failed)} check(s) fail, first {first.name if first else None} "
                     f"witness={first.witness if first else None}")
    record(10, ok, "; ".join(parts))
    assert ok
