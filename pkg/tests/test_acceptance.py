"""Acceptance suite: one test and one printed pass/fail line per criterion.

Convergence thresholds are cross-checked against an independent dense
reference implementation (numpy, below) so the engine never grades its own
homework; identities are checked at the stated tolerances on every trace this
module produces.
"""

import math

import numpy as np
import pytest

from greedyexp.analysis import (
    residual_extrema,
    verify_block_partition,
    verify_energy_identity,
    verify_greedy_condition,
)
from greedyexp.core import SparseVector
from greedyexp.counterexample import build_plan, build_target, default_config, run_counterexample
from greedyexp.dictionaries import (
    direct_sum,
    estimate_coherence,
    make_augmented_onb,
    make_finite,
    make_symmetrized_onb,
    pushforward,
)
from greedyexp.engine import run
from greedyexp.sequences import ConstantWeakening, Harmonic, Power

ONB = make_symmetrized_onb()
T1 = ConstantWeakening(1.0)

#: every trace produced here; criterion 2 sweeps them all
ALL_TRACES = []


def _report(criterion: int, ok: bool, detail: str):
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {criterion}: {detail}"


def tracked_run(*args, **kwargs):
    trace = run(*args, **kwargs)
    ALL_TRACES.append(trace)
    return trace


def dense(values, offset=0):
    return SparseVector({i + 1 + offset: float(v) for i, v in enumerate(values) if v != 0})


# ---------------------------------------------------------------------------
# independent reference: dense weak-greedy with prescribed coefficients
# ---------------------------------------------------------------------------

def reference_min_residual(atom_rows: np.ndarray, f0: np.ndarray, coeff, steps: int) -> float:
    """Smallest residual norm seen in `steps` max-greedy steps; rows must
    already contain both signs of each atom."""
    f = f0.astype(float).copy()
    best = float(np.linalg.norm(f))
    for n in range(1, steps + 1):
        ips = atom_rows @ f
        f = f - coeff(n) * atom_rows[int(np.argmax(ips))]
        best = min(best, float(np.linalg.norm(f)))
        if best == 0.0:
            break
    return best


def symmetrized_rows(rows: np.ndarray) -> np.ndarray:
    unit = rows / np.linalg.norm(rows, axis=1, keepdims=True)
    return np.vstack([unit, -unit])


# ---------------------------------------------------------------------------
# shared inputs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def corpus():
    """>= 50 randomized engine runs: finite dictionaries in R^3..R^8, targets
    on the symmetrized basis with support <= 50, and direct sums."""
    traces = []
    rng = np.random.default_rng(190)
    for i in range(24):   # finite dictionaries
        d = 3 + i % 6
        atoms = [dense(r) for r in rng.standard_normal((2 * d + 2, d))]
        target = dense(rng.standard_normal(d) * rng.uniform(0.5, 4.0))
        coeff = (Harmonic(), Power(0.8), Power(0.6))[i % 3]
        tau = (T1, ConstantWeakening(0.7), ConstantWeakening(0.9))[i % 3]
        traces.append(tracked_run(target, make_finite(atoms), coeff, tau, max_steps=250))
    for i in range(18):   # basis targets with support up to 50
        support = rng.choice(np.arange(1, 121), size=rng.integers(1, 51), replace=False)
        target = SparseVector({int(j): float(v) for j, v in
                               zip(support, rng.standard_normal(len(support)))})
        traces.append(tracked_run(target, ONB, Harmonic(), T1, max_steps=250))
    for i in range(12):   # direct sums
        d = 3 + i % 3
        comp = make_finite([dense(r) for r in rng.standard_normal((2 * d, d))])
        target = SparseVector(
            {(1, int(j) + 1): float(v) for j, v in enumerate(rng.standard_normal(d))}
            | {(2, int(j)): float(v) for j, v in
               zip(rng.choice(np.arange(1, 40), size=10, replace=False),
                   rng.standard_normal(10))})
        traces.append(tracked_run(target, direct_sum([comp, ONB]),
                                  Harmonic(), (T1, ConstantWeakening(0.7))[i % 2],
                                  max_steps=250))
    assert len(traces) >= 50
    return traces


@pytest.fixture(scope="module")
def adversarial():
    cfg = default_config(0.5, 6)
    assert cfg.k == 2
    plan = build_plan(cfg)
    trace = run_counterexample(cfg)
    ALL_TRACES.append(trace)
    return cfg, plan, trace


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_1_energy_identity_corpus(corpus):
    worst = 0.0
    for trace in corpus:
        report = verify_energy_identity(trace, tol=1e-10)
        worst = max(worst, report.checks[0].worst_violation)
        assert report.all_passed
    _report(1, worst <= 1e-10,
            f"{len(corpus)} randomized runs, worst relative violation {worst:.2e}")


def test_criterion_3_finite_dimensional_convergence():
    rng = np.random.default_rng(2024)
    rows = rng.standard_normal((8, 3))
    assert np.linalg.matrix_rank(rows) == 3          # atoms span R^3
    dictionary = make_finite([dense(r) for r in rows])
    target_arr = rng.standard_normal(3)
    target = dense(target_arr)

    finals = []
    for coeff, tau in ((Harmonic(), T1), (Power(0.8), ConstantWeakening(0.7))):
        oracle = reference_min_residual(symmetrized_rows(rows), target_arr,
                                        coeff.eval, 10**5)
        assert oracle <= 0.05                        # threshold certified independently
        trace = tracked_run(target, dictionary, coeff, tau,
                            max_steps=10**5, stop_below=0.045)
        assert len(trace.steps) <= 10**5
        finals.append(trace.steps[-1].residual_norm)
    _report(3, all(f <= 0.05 for f in finals),
            f"finals {finals[0]:.4f} (harmonic, t=1) / {finals[1]:.4f} (power 0.8, t=0.7)")


def test_criterion_4_onb_convergence_t1():
    target_arr = np.array([2.0 ** -i for i in range(1, 21)])
    oracle = reference_min_residual(
        symmetrized_rows(np.eye(20)), target_arr, Harmonic().eval, 10**5)
    assert oracle <= 0.05
    trace = tracked_run(dense(target_arr), ONB, Harmonic(), T1,
                        max_steps=10**5, stop_below=0.045)
    running_min, _ = residual_extrema(trace)
    non_increasing = all(a >= b for a, b in zip(running_min, running_min[1:]))
    final = running_min[-1]
    _report(4, final <= 0.05 and non_increasing and len(trace.steps) <= 10**5,
            f"running min reaches {final:.4f} in {len(trace.steps)} steps")


def test_criterion_5_counterexample(adversarial):
    cfg, plan, trace = adversarial
    t, k, J = cfg.t, cfg.k, cfg.num_groups
    norms = trace.residual_norms()
    running_min, _ = residual_extrema(trace)
    assert trace.status.kind == "stopped"

    at_marks = [norms[gm.subnorm_one_step - 1] for gm in plan.marks]
    ok_a = len(at_marks) == 6 and all(v >= 1.0 - 1e-9 for v in at_marks)

    ok_b = ok_c = ok_e = True
    for j, gm in enumerate(plan.marks):
        cs = plan.coefficients.values[gm.first_step - 1:gm.zeroed_step]
        ok_b &= max(cs) <= 2.0 / math.sqrt(gm.h) + 1e-12
        ok_c &= any(c == 1.0 / math.sqrt(gm.h) for c in cs)
        tail = math.sqrt(sum((k + jp) * t ** (2 * (k + jp)) for jp in range(j + 1, J)))
        ok_e &= abs(running_min[gm.zeroed_step - 1] - tail) <= 1e-9

    ok_d = verify_greedy_condition(trace, tol=1e-12).all_passed
    _report(5, ok_a and ok_b and ok_c and ok_d and ok_e,
            f"marks min {min(at_marks):.12f}; bounds/exact-coefficient/admissibility/"
            f"tail checks {ok_b}/{ok_c}/{ok_d}/{ok_e}")


def test_criterion_6_direct_sum_convergence():
    rng = np.random.default_rng(61)
    rows = rng.standard_normal((8, 3))
    assert np.linalg.matrix_rank(rows) == 3
    block2 = np.array([2.0 ** -i for i in range(1, 16)])
    block1 = rng.standard_normal(3) * 0.5
    target = SparseVector(
        {(1, i + 1): float(v) for i, v in enumerate(block1)}
        | {(2, i + 1): float(v) for i, v in enumerate(block2)})

    flat = np.hstack([symmetrized_rows(rows), np.zeros((16, 15))])
    tail = np.hstack([np.zeros((30, 3)), symmetrized_rows(np.eye(15))])
    oracle = reference_min_residual(np.vstack([flat, tail]),
                                    np.concatenate([block1, block2]),
                                    Harmonic().eval, 10**5)
    assert oracle <= 0.05

    d = direct_sum([make_finite([dense(r) for r in rows]), ONB])
    trace = tracked_run(target, d, Harmonic(), T1, max_steps=10**5, stop_below=0.045)
    final = trace.steps[-1].residual_norm
    blocks_ok = (verify_block_partition(trace).all_passed
                 and all(r.block in (1, 2) for r in trace.steps)
                 and {r.m for r in trace.steps} == set(range(1, len(trace.steps) + 1)))
    _report(6, final <= 0.05 and blocks_ok,
            f"final {final:.4f} in {len(trace.steps)} steps, block labels consistent")


def test_criterion_7_pushforward_preserves_dynamics():
    rng = np.random.default_rng(7)
    d = 4
    rows = rng.standard_normal((6, d))
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    base = make_finite([dense(r) for r in rows])
    moved = pushforward(base, q)
    x = rng.standard_normal(d)
    tr_base = tracked_run(dense(x), base, Harmonic(), T1, max_steps=10**4)
    tr_moved = tracked_run(dense(q @ x), moved, Harmonic(), T1, max_steps=10**4)
    assert len(tr_base.steps) == len(tr_moved.steps) == 10**4
    gap = max(abs(a.residual_norm - b.residual_norm)
              for a, b in zip(tr_base.steps, tr_moved.steps))
    same_ids = all(a.atom.id == b.atom.id for a, b in zip(tr_base.steps, tr_moved.steps))
    _report(7, gap <= 1e-9 and same_ids,
            f"max residual gap {gap:.2e} over 10^4 steps, selections identical: {same_ids}")


def test_criterion_8_augmented_onb_convergence():
    y = [1 / math.sqrt(3)] * 3
    tail = [2.0 ** -i for i in range(1, 8)]
    target_arr = np.array([0.5, -0.3, 0.2] + tail)
    rows = np.vstack([np.eye(10), np.array(y + [0.0] * 7)])
    oracle = reference_min_residual(symmetrized_rows(rows), target_arr,
                                    Harmonic().eval, 10**5)
    assert oracle <= 0.05
    dictionary = make_augmented_onb([dense(y)], e_prime={1, 2, 3})
    trace = tracked_run(dense(target_arr), dictionary, Harmonic(), T1,
                        max_steps=10**5, stop_below=0.045)
    final = trace.steps[-1].residual_norm
    _report(8, final <= 0.05 and len(trace.steps) <= 10**5,
            f"final {final:.4f} in {len(trace.steps)} steps")


def test_criterion_9_coherence_estimate():
    d = make_finite([dense([1, 0]), dense([0, 1])])
    est = estimate_coherence(d, samples=10**6, seed=20240808)
    ok = 0.70710 <= est.value <= 0.70810
    _report(9, ok, f"estimate {est.value:.6f}, analytic minimax sqrt(2)/2 = 0.707107")


def test_criterion_10_incomplete_dictionary_negative_control():
    trace = tracked_run(dense([1, 1]), make_finite([dense([1, 0])]),
                        Harmonic(), T1, max_steps=10**4)
    norms = trace.residual_norms()
    never_below = min(norms) >= 1.0 - 1e-9
    final_gap = norms[-1] - 1.0
    _report(10, never_below and 0 <= final_gap <= 1e-6,
            f"min residual {min(norms):.12f}, final 1 + {final_gap:.2e}")


def test_criterion_2_admissibility_everywhere(corpus, adversarial):
    # runs last: sweeps every trace produced by this module, equality steps included
    assert len(ALL_TRACES) > len(corpus)
    worst = 0.0
    for trace in ALL_TRACES:
        report = verify_greedy_condition(trace, tol=1e-12)
        worst = max(worst, report.checks[0].worst_violation)
        assert report.all_passed
    _report(2, worst <= 1e-12,
            f"{len(ALL_TRACES)} traces, worst violation {worst:.2e}")
