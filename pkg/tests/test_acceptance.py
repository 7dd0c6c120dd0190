"""Acceptance gate: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the verdict lines.
Every tolerance is pinned here; nothing is deferred to later calibration.
"""

import json
import math
import time

import numpy as np

from nfix.cli import main
from nfix.harness import (
    canonical_space,
    check_axiom_suite,
    check_contractive_ratio,
    check_product_ball_lemma,
    random_kernel_preserving_operator,
    reduction_suite,
)
from nfix.nnorm import AnchoredSpace, gram_nnorm
from nfix.operators import affine_operator, apply, builtin_operator, operator_norm
from nfix.solvers import (
    PreconditionError,
    SolverConfig,
    ball_solve,
    edelstein_solve,
    kannan_solve,
    picard_solve,
)


def _verdict(num, label, problems):
    status = "PASS" if not problems else "FAIL"
    suffix = "" if not problems else f" | {problems[:3]}"
    print(f"ACCEPTANCE {num} {status}: {label}{suffix}")
    assert not problems, f"criterion {num}: {problems}"


def space_e23(d=3):
    return AnchoredSpace(dim=d, order=3, anchors=np.eye(d)[1:3])


def half_shift_problem_dict():
    return {
        "dimension": 3,
        "order": 3,
        "anchors": [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        "operator": {
            "kind": "affine",
            "matrix": [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.5]],
            "offset": [1.0, 0.0, 0.0],
        },
        "solver": {"regime": "picard", "alpha": 0.5, "tol": 1e-10},
        "x0": [0.0, 0.0, 0.0],
        "seed": 42,
    }


def test_criterion_1_axiom_suite():
    problems = []
    start = time.perf_counter()
    for (d, n) in [(3, 2), (4, 3), (5, 3)]:
        for report in check_axiom_suite(d, n, trials=1000, seed=101):
            if report.failures != 0:
                problems.append(f"(d={d}, n={n}) {report.property_id}: {report.failures} failures")
    rng = np.random.default_rng(102)
    checked = 0
    while checked < 1000:
        a, b, c, d = rng.standard_normal(4) * 3.0
        want = abs(a * d - b * c)
        # same condition bound as the axiom sampling: near-parallel pairs sit
        # below double precision for a 1e-12 relative comparison
        if want < 0.05 * math.hypot(a, b) * math.hypot(c, d):
            continue
        checked += 1
        got = gram_nnorm([(a, b), (c, d)])
        if abs(got - want) > 1e-12 * max(got, want, 1e-30):
            problems.append(f"2x2 determinant mismatch: {got} vs {want}")
            break
    elapsed = time.perf_counter() - start
    if elapsed >= 5.0:
        problems.append(f"runtime {elapsed:.2f}s >= 5s")
    _verdict(1, "norm axioms N1-N4 at (3,2), (4,3), (5,3) plus 2-D determinant equivalence", problems)


def test_criterion_2_picard_envelope():
    problems = []
    sp = space_e23()
    op = affine_operator(0.5 * np.eye(3), offset=[1.0, 0.0, 0.0])
    star = np.array([2.0, 0.0, 0.0])

    report = picard_solve(op, sp, np.zeros(3), SolverConfig(regime="picard", alpha=0.5, tol=1e-10))
    if not report.converged:
        problems.append("did not certify at tol=1e-10")
    if report.iterations != 35:
        problems.append(f"expected exactly 35 bound-crossing iterations, got {report.iterations}")
    if report.certified_error > 1e-10:
        problems.append(f"certified error {report.certified_error} above tol")

    x = np.zeros(3)
    for k in range(1, 41):
        x = apply(op, x)
        err = sp.seminorm_raw(x - star)
        bound = 2.0 ** (1 - k)
        if err > bound + 1e-12:
            problems.append(f"k={k}: error {err} above envelope {bound}")
        if abs(err - bound) > 1e-12:
            problems.append(f"k={k}: envelope not tight: |{err} - {bound}| > 1e-12")
    _verdict(2, "geometric error envelope is valid and tight on the analytic problem", problems)


def test_criterion_3_residual_recursions():
    problems = []
    sp = space_e23()
    rng = np.random.default_rng(303)
    for trial in range(100):
        alpha = float(rng.uniform(0.1, 0.9))
        op = affine_operator(alpha * np.eye(3), offset=rng.standard_normal(3))
        x0 = rng.standard_normal(3)
        report = picard_solve(op, sp, x0, SolverConfig(regime="picard", alpha=alpha, tol=1e-10))
        rows = report.trace
        for prev, cur in zip(rows, rows[1:]):
            if cur.residual > alpha * prev.residual + 1e-12:
                problems.append(f"trial {trial}: step {cur.k} broke res <= alpha*prev + 1e-12")
                break
    kreport = kannan_solve(
        builtin_operator("scale", factor=0.25), sp, np.array([1.0, 0.0, 0.0]),
        SolverConfig(regime="kannan", beta=1.0 / 3.0, tol=1e-10),
    )
    for prev, cur in zip(kreport.trace, kreport.trace[1:]):
        if cur.residual > 0.5 * prev.residual + 1e-12:
            problems.append(f"kannan step {cur.k} broke res <= r*prev + 1e-12")
    _verdict(3, "picard and kannan residual recursions hold step by step", problems)


def test_criterion_4_summable_reduction():
    report = reduction_suite(3, 3, trials=20, seed=404)
    problems = []
    if report.failures != 0:
        problems.append(f"{report.failures} of 20 problems disagreed: {report.counterexample}")
    if report.worst_violation > 1e-12:
        problems.append(f"worst per-iterate discrepancy {report.worst_violation} > 1e-12")
    _verdict(4, "summable solver with geometric constants replays the picard solver", problems)


def test_criterion_5_ball_theorem(capsys):
    problems = []
    sp = space_e23()
    op = affine_operator(0.5 * np.eye(3), offset=[1.0, 0.0, 0.0])
    report = ball_solve(op, sp, np.zeros(3),
                        SolverConfig(regime="ball", alpha=0.5, radius=3.0, tol=1e-10))
    if not report.converged:
        problems.append("radius-3 instance did not certify")
    for k, disp, _ in report.ball_trace:
        if disp > (1 - 0.5 ** k) * 3.0 + 1e-9:
            problems.append(f"containment broken at step {k}: {disp}")
            break
    try:
        ball_solve(op, sp, np.zeros(3),
                   SolverConfig(regime="ball", alpha=0.5, radius=1.5, tol=1e-10))
        problems.append("radius-1.5 instance was not rejected")
    except PreconditionError as e:
        if not (abs(e.lhs - 1.0) < 1e-12 and abs(e.rhs - 0.75) < 1e-12):
            problems.append(f"rejection sides wrong: {e.lhs} vs {e.rhs}")
        if "1" not in str(e) or "0.75" not in str(e):
            problems.append("rejection message does not quote both sides")
    _verdict(5, "ball iterates obey the induction bound; small radius is rejected with both sides", problems)


def test_criterion_6_operator_norm_equivalence():
    problems = []
    start = time.perf_counter()
    sp = canonical_space(4, 3)
    rng = np.random.default_rng(606)
    for i in range(50):
        op = random_kernel_preserving_operator(sp, rng)
        values = [operator_norm(op, sp, m, budget=10_000, seed=707).value for m in ("I", "II", "III")]
        for a in values:
            for b in values:
                if abs(a - b) > 0.02 * max(a, b, 1e-30):
                    problems.append(f"op {i}: methods disagree beyond 2%: {values}")
                    break
    diag = affine_operator(np.diag([2.0, 1.0, 1.0]))
    sp3 = space_e23()
    for m in ("I", "II", "III"):
        v = operator_norm(diag, sp3, m, budget=10_000, seed=707).value
        if abs(v - 2.0) > 0.02 * 2.0:
            problems.append(f"diag(2,1,1) method {m}: {v} outside 2 +- 2%")
    elapsed = time.perf_counter() - start
    if elapsed >= 10.0:
        problems.append(f"runtime {elapsed:.2f}s >= 10s")
    _verdict(6, "norm formulas I/II/III agree within 2% at budget 10^4 (50 seeded operators)", problems)


def test_criterion_7_uniqueness_modulo_kernel():
    problems = []
    sp = space_e23()
    tol = 1e-10
    op = affine_operator(0.6 * np.eye(3), offset=[0.8, -0.3, 0.2])
    for seed in range(50):
        rng = np.random.default_rng([808, seed])
        a = picard_solve(op, sp, rng.standard_normal(3),
                         SolverConfig(regime="picard", alpha=0.6, tol=tol))
        b = picard_solve(op, sp, rng.standard_normal(3),
                         SolverConfig(regime="picard", alpha=0.6, tol=tol))
        gap = sp.seminorm_raw(a.fixed_point - b.fixed_point)
        if gap > 2 * tol:
            problems.append(f"seed {seed}: endpoints {gap} apart > 2*tol")
    _verdict(7, "independent starts land within 2*tol of the same point (50 seeds)", problems)


def test_criterion_8_product_ball():
    sp = space_e23()
    zero = np.zeros(3)
    report = check_product_ball_lemma(sp, zero, zero, r1=1.0, r=0.4, r_prime=0.4,
                                      trials=1000, seed=909)
    problems = []
    if report.failures != 0:
        problems.append(f"{report.failures} pairs left the product ball")
    if report.worst_violation > 1e-9:
        problems.append(f"margin fell below 0.2 - 1e-9 (violation {report.worst_violation})")
    _verdict(8, "1000 sampled pairs stay in the product ball with margin >= 0.2 - 1e-9", problems)


def test_criterion_9_edelstein_best_effort(tmp_path, capsys):
    problems = []
    sp = space_e23()
    report = edelstein_solve(builtin_operator("saturating"), sp, np.array([1.0, 0.0, 0.0]),
                             SolverConfig(regime="edelstein", tol=1e-6, max_iter=1100))
    if not report.converged or report.iterations > 1100:
        problems.append(f"saturating instance: converged={report.converged} after {report.iterations}")
    if report.certified_error > 1e-6:
        problems.append(f"best residual {report.certified_error} above 1e-6")

    iso = {
        "dimension": 4,
        "order": 3,
        "anchors": [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
        "operator": {"kind": "builtin", "name": "rotation-scale",
                     "params": {"axis1": 0, "axis2": 3, "angle": 1.0, "factor": 1.0}},
        "solver": {"regime": "edelstein", "tol": 1e-6, "max_iter": 200},
        "x0": [1.0, 0.0, 0.0, 0.0],
        "seed": 1,
    }
    path = tmp_path / "isometry.json"
    path.write_text(json.dumps(iso))
    code = main(["solve", "--config", str(path)])
    capsys.readouterr()
    if code != 2:
        problems.append(f"isometry solve exited {code}, expected 2")
    ratio_report = check_contractive_ratio(
        builtin_operator("rotation-scale", axis1=0, axis2=3, angle=1.0, factor=1.0),
        canonical_space(4, 3), np.array([1.0, 0.0, 0.0, 0.0]),
        trials=500, seed=910, max_iter=200,
    )
    if ratio_report.failures == 0:
        problems.append("isometry was not flagged by the ratio suite")
    if ratio_report.worst_violation < 1.0 - 1e-9:
        problems.append(f"max ratio {ratio_report.worst_violation} below 1 - 1e-9")
    _verdict(9, "saturating map certifies at 1e-6 within 1100 steps; isometry is flagged", problems)


def test_criterion_10_determinism(tmp_path, capsys):
    problems = []
    out1 = tmp_path / "all1.json"
    out2 = tmp_path / "all2.json"
    code1 = main(["check", "all", "--seed", "7", "--out", str(out1)])
    code2 = main(["check", "all", "--seed", "7", "--out", str(out2)])
    capsys.readouterr()
    if code1 != 0 or code2 != 0:
        problems.append(f"check all exited {code1}/{code2}")
    if out1.read_bytes() != out2.read_bytes():
        problems.append("check all outputs differ between runs")

    cfgpath = tmp_path / "problem.json"
    cfgpath.write_text(json.dumps(half_shift_problem_dict()))
    t1 = tmp_path / "t1.csv"
    t2 = tmp_path / "t2.csv"
    main(["solve", "--config", str(cfgpath), "--out", str(t1)])
    main(["solve", "--config", str(cfgpath), "--out", str(t2)])
    capsys.readouterr()
    if t1.read_bytes() != t2.read_bytes():
        problems.append("solve traces differ between runs")
    rows = t1.read_text().splitlines()
    if len(rows) != 36:
        problems.append(f"expected 36 trace lines, got {len(rows)}")
    _verdict(10, "check-all JSON and solve traces are byte-identical across runs", problems)
