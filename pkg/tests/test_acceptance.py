"""Acceptance suite: one or more tests per criterion, summarised at the end of
the run as one PASS/FAIL line per criterion.

Discrepancy reports are written to ``$COLLUSIONLAB_ARTIFACTS`` (default
``acceptance_artifacts/`` next to ``tests/``) so failures can be audited.
"""

import itertools
import json
import math
import os
import random
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import pytest
from scipy.stats import chisquare

from collusionlab.classify import classify_kapproval, margin
from collusionlab.cli import main as cli_main
from collusionlab.core import Rule, TieBreak
from collusionlab.count import (
    BoundId,
    at_least_two_cover_count,
    audit_kapproval,
    count_F_kapproval,
    count_scoring_profiles,
    enumerate_scoring_profiles,
    exp_partial_sum,
    plurality_closed_form,
    series_identity_check,
)
from collusionlab.estimate import (
    ExperimentConfig,
    agreement_harness,
    borda_sufficient_estimate,
    estimate_fraction,
    exhaustive_fraction,
    non_decreasing_within_ci,
    non_increasing_within_ci,
    verify_bounds,
)
from collusionlab.oracle import Status, collusion_oracle, replay_witness, strategyproof_oracle
from collusionlab.presets import (
    bound_grid,
    borda_grid,
    kapproval_sp_grid,
    plurality_grid,
    soundness_grid,
)
from collusionlab.sample import RngStream, sample_ic, sample_isc
from helpers import almost_equal_profile_count

TIE_BREAKS = ("for", "against")
ARTIFACTS = Path(os.environ.get("COLLUSIONLAB_ARTIFACTS", Path(__file__).parent.parent / "acceptance_artifacts"))


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def save(name, payload):
    ARTIFACTS.mkdir(parents=True, exist_ok=True)
    path = ARTIFACTS / name
    path.write_text(json.dumps(payload, indent=1, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path


def summarize(disagreements):
    return Counter(
        (d["grid_point"]["rule"], d["grid_point"]["tie_break"], d["grid_point"]["c"],
         d["classifier"], d["oracle"])
        for d in disagreements
    )


# 1 ---------------------------------------------------------------------------


@criterion(1, "plurality classifier equals the oracle (m<=4, n<=5, c<=3, both tie-breaks)")
def test_plurality_iff():
    start = time.perf_counter()
    report = agreement_harness(plurality_grid())
    elapsed = time.perf_counter() - start
    save("criterion01_plurality.json", report.to_dict())
    assert not report.errors
    assert elapsed < 300
    assert report.disagreements == [], (
        f"{len(report.disagreements)} disagreements: {dict(summarize(report.disagreements))}"
    )


# 2 ---------------------------------------------------------------------------


def _kapproval_rows(tb_name):
    tb = TieBreak.parse(tb_name)
    rows = []
    for m in (3, 4, 5):
        for n in (1, 2, 3):
            for x in enumerate_scoring_profiles(Rule.kapproval(2, m), n):
                cls = classify_kapproval(x, 2, 1, tb)
                verdict = strategyproof_oracle(x, tb)
                rows.append({
                    "m": m, "n": n, "profile": list(x.scores), "classifier": cls.status.value,
                    "basis": cls.basis, "oracle": verdict.status.value,
                    "witness": verdict.witness.to_dict() if verdict.witness else None,
                })
    return rows


@criterion(2, "2-approval single voter: exact under For, no false proof under Against")
def test_kapproval_for_exact():
    rows = _kapproval_rows("for")
    bad = [r for r in rows if r["classifier"] != r["oracle"]]
    save("criterion02_kapproval_for.json", {"profiles": len(rows), "disagreements": bad})
    assert bad == [], f"{len(bad)} of {len(rows)} profiles disagree, e.g. {bad[0]['profile']} m={bad[0]['m']}"


@criterion(2, "2-approval single voter: exact under For, no false proof under Against")
def test_kapproval_against_no_false_proof():
    rows = _kapproval_rows("against")
    bad = [r for r in rows if r["classifier"] != r["oracle"]]
    path = save("criterion02_kapproval_against.json", {"profiles": len(rows), "disagreements": bad})
    assert path.exists()
    assert all(r["classifier"] in ("proof", "manipulable") for r in rows)
    false_proof = [r for r in bad if r["classifier"] == "proof"]
    assert false_proof == []
    for r in bad:
        assert r["oracle"] == "proof" or r["witness"] is not None


# 3 ---------------------------------------------------------------------------


def _soundness(rule):
    grid = [p for p in soundness_grid() if p.rule == rule]
    report = agreement_harness(grid)
    save(f"criterion03_{rule}.json", report.to_dict())
    assert not report.errors
    return [d for d in report.disagreements if d["classifier"] == "proof"]


@criterion(3, "sufficient conditions are sound (2-approval c=2, veto c<=2)")
def test_kapproval_pairs_sound():
    assert _soundness("kapproval") == []


@criterion(3, "sufficient conditions are sound (2-approval c=2, veto c<=2)")
def test_veto_sound():
    unsound = _soundness("veto")
    assert unsound == [], [(d["grid_point"], d["profile"], d["witness"]) for d in unsound]


# 4 ---------------------------------------------------------------------------


@criterion(4, "Borda: margin >= m and all-equal profiles are proof")
def test_borda_margin_sufficiency():
    matrix = Counter()
    margin_fail, equal_fail = [], []
    for m in (3, 4):
        for n in range(1, 5):
            for x in enumerate_scoring_profiles(Rule.borda(m), n):
                s = x.scores
                for tb_name in TIE_BREAKS:
                    status = strategyproof_oracle(x, TieBreak.parse(tb_name)).status
                    big_lead = margin(s) >= m
                    equal = max(s) == min(s)
                    kind = "margin>=m" if big_lead else "all-equal" if equal else "other"
                    matrix[(m, n, tb_name, kind, status.value)] += 1
                    if big_lead and status is not Status.PROOF:
                        margin_fail.append((m, n, tb_name, s))
                    if equal and tb_name == "for" and status is not Status.PROOF:
                        equal_fail.append((m, n, s))
    save("criterion04_borda_matrix.json", [
        {"m": m, "n": n, "tie_break": tb, "case": kind, "oracle": st, "count": c}
        for (m, n, tb, kind, st), c in sorted(matrix.items())
    ])
    harness = agreement_harness(borda_grid())
    save("criterion04_borda_harness.json", harness.to_dict())
    assert margin_fail == [] and equal_fail == []
    assert harness.false_proof == 0


# 5 ---------------------------------------------------------------------------


@criterion(5, "counting: DP, closed form, F-count and the printed-sum audit")
def test_counting_dp_vs_enumeration():
    for m in range(1, 6):
        rules = [Rule.plurality(m), Rule.veto(m)]
        for n in range(0, 7):
            for rule in rules:
                assert count_scoring_profiles(rule, n) == sum(1 for _ in enumerate_scoring_profiles(rule, n))
        if m > 2:
            for n in range(0, 5):
                rule = Rule.kapproval(2, m)
                assert count_scoring_profiles(rule, n) == sum(1 for _ in enumerate_scoring_profiles(rule, n))


@criterion(5, "counting: DP, closed form, F-count and the printed-sum audit")
def test_counting_closed_form():
    for n in range(0, 31):
        for m in range(1, 31):
            assert plurality_closed_form(n, m) == count_scoring_profiles(Rule.plurality(m), n)


@criterion(5, "counting: DP, closed form, F-count and the printed-sum audit")
def test_counting_F_vs_enumeration():
    checked = 0
    for m in range(2, 10):
        for n in range(1, m + 1):
            if math.factorial(m) ** n > 10**6:
                break
            for k in range(1, m):
                if n * k > m:
                    break
                rule = Rule.plurality(m) if k == 1 else Rule.kapproval(k, m)
                assert count_F_kapproval(n, k, m) == almost_equal_profile_count(rule, n), (n, k, m)
                checked += 1
    assert checked >= 20


@criterion(5, "counting: DP, closed form, F-count and the printed-sum audit")
def test_counting_audit():
    row = audit_kapproval(2, 2, 3)
    assert (row.authoritative, row.paper_formula, row.match) == (6, 10, False)


# 6 ---------------------------------------------------------------------------


@criterion(6, "exact bound inequalities on the n<=8, m<=4, c<=2 grid")
def test_bounds_exact():
    rows = verify_bounds(bound_grid(max_n=8, max_m=4, max_c=2))
    save("criterion06_bounds.json", [r.row() for r in rows])
    ids = {r.check.spec.bound_id for r in rows}
    assert ids >= {BoundId.PLURALITY_CP, BoundId.PLURALITY_E, BoundId.VETO_E, BoundId.VETO_CP, BoundId.KAPPROVAL_F}
    assert [r.row() for r in rows if r.verdict != "Pass"] == []


# 7 ---------------------------------------------------------------------------


def _chi2(counts, support):
    assert set(counts) == set(support)
    return chisquare([counts[s] for s in support]).pvalue


@criterion(7, "samplers are uniform (chi-square p > 0.01) with exact support")
def test_ic_uniform():
    gen = RngStream(0, 1).generator()
    counts = Counter(sample_ic(1, 4, gen)[0] for _ in range(240_000))
    assert _chi2(counts, list(itertools.permutations(range(4)))) > 0.01


@criterion(7, "samplers are uniform (chi-square p > 0.01) with exact support")
@pytest.mark.parametrize(
    "rule,n,draws",
    [(Rule.plurality(3), 4, 150_000), (Rule.kapproval(2, 3), 2, 60_000), (Rule.veto(3), 3, 100_000)],
    ids=["plurality", "2-approval", "veto"],
)
def test_isc_uniform(rule, n, draws):
    gen = RngStream(0, 2).generator()
    counts = Counter(sample_isc(rule, n, gen).scores for _ in range(draws))
    support = [x.scores for x in enumerate_scoring_profiles(rule, n)]
    assert len(support) == count_scoring_profiles(rule, n)
    assert _chi2(counts, support) > 0.01


# 8 ---------------------------------------------------------------------------


@criterion(8, "inclusion-exclusion, series identity and exponential limit")
def test_combinatorial_identities():
    rnd = random.Random(8)
    for _ in range(100):
        sets = [
            {e for e in range(rnd.randint(1, 20)) if rnd.random() < 0.4}
            for _ in range(rnd.randint(1, 6))
        ]
        brute, formula = at_least_two_cover_count(sets)
        assert brute == formula
    for l in range(3, 26):
        lhs, rhs = series_identity_check(l)
        assert lhs == rhs
    for x in (0, 0.5, 1, 2, 5):
        assert abs(exp_partial_sum(x, 60) - (1 - (1 + x) * math.exp(-x))) <= 1e-9


# 9 ---------------------------------------------------------------------------


@criterion(9, "desk-scale trends (Borda in m, plurality in n, tie-break contrast)")
@pytest.mark.parametrize("tb", TIE_BREAKS)
def test_borda_proof_fraction_non_increasing_in_m(tb):
    results = [
        estimate_fraction(ExperimentConfig(
            "borda", m=m, n=2, tie_break=tb, culture="ic", labeler="oracle", trials=2000, seed=90 + m,
        ))
        for m in (3, 4, 5, 6)
    ]
    assert all(r.unknown_count == 0 for r in results)
    assert non_increasing_within_ci(results), [round(r.fraction_proof, 4) for r in results]


@criterion(9, "desk-scale trends (Borda in m, plurality in n, tie-break contrast)")
@pytest.mark.parametrize("tb", TIE_BREAKS)
def test_borda_sufficient_bound_exceeds_small_m_manipulability(tb):
    m = 100
    est = borda_sufficient_estimate(n=2, m=m, l=math.isqrt(m), trials=20_000, seed=9, tie_break=tb)
    _, manipulable, _ = exhaustive_fraction(
        ExperimentConfig("borda", m=3, n=2, tie_break=tb, culture="ic", labeler="oracle")
    )
    save(f"criterion09a_{tb}.json", {
        "sufficient_fraction": est.fraction, "ci": [est.ci_low, est.ci_high],
        "manipulable_fraction_m3": str(manipulable),
    })
    assert est.fraction > manipulable, f"{est.fraction:.4f} <= {manipulable}"


@criterion(9, "desk-scale trends (Borda in m, plurality in n, tie-break contrast)")
@pytest.mark.parametrize("tb", TIE_BREAKS)
def test_plurality_proof_fraction_grows_in_n(tb):
    results = [
        estimate_fraction(ExperimentConfig(
            "plurality", m=3, n=n, tie_break=tb, culture="isc", labeler="oracle", trials=5000, seed=n,
        ))
        for n in (5, 10, 20, 40)
    ]
    fractions = [r.fraction_proof for r in results]
    assert fractions == sorted(fractions) and len(set(fractions)) == 4
    assert non_decreasing_within_ci(results)
    for n, r in zip((5, 10, 20, 40), results):
        assert r.ci_low >= ((n - 1) / (n + 1)) ** 2, (n, r.fraction_proof)


@criterion(9, "desk-scale trends (Borda in m, plurality in n, tie-break contrast)")
def test_plurality_tie_break_contrast():
    for labeler in ("classify", "oracle"):
        base = dict(m=3, n=3, culture="isc", labeler=labeler)
        assert exhaustive_fraction(ExperimentConfig("plurality", tie_break="for", **base))[0] == Fraction(4, 10)
        assert exhaustive_fraction(ExperimentConfig("plurality", tie_break="against", **base))[0] == 1


# 10 --------------------------------------------------------------------------


@criterion(10, "byte-identical output across thread counts; witnesses replay")
def test_thread_count_determinism(tmp_path, capsys):
    blobs = []
    for threads in (1, 4, 8):
        out = tmp_path / f"t{threads}.csv"
        code = cli_main([
            "estimate", "--rule", "veto", "--n", "5", "--m", "4", "--c", "2", "--trials", "3000",
            "--seed", "77", "--threads", str(threads), "--out", str(out),
        ])
        assert code == 0
        blobs.append(out.read_bytes())
    capsys.readouterr()
    assert blobs[0] == blobs[1] == blobs[2]


@criterion(10, "byte-identical output across thread counts; witnesses replay")
def test_every_witness_replays():
    grids = plurality_grid() + kapproval_sp_grid() + soundness_grid() + borda_grid()
    replayed = 0
    for point in grids:
        tb = TieBreak.parse(point.tie_break)
        for x in enumerate_scoring_profiles(point.rule_obj, point.n):
            verdict = collusion_oracle(x, point.c, tb)
            if verdict.status is Status.MANIPULABLE:
                assert replay_witness(x, verdict.witness, tb), (point, x.scores)
                replayed += 1
    assert replayed > 1000
