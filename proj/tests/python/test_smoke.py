"""End-to-end smoke tests for the python bindings."""

from fractions import Fraction

import pytest

import graphecon


def frac(v):
    return Fraction(v) if isinstance(v, str) else Fraction(v)


def test_broker_fixture_verifies_exactly():
    fix = graphecon.gen_fixture("broker", b="1/2")
    report = graphecon.verify(fix["economy"], fix["certificate"], kind="exact", value="0")
    assert report["pass"]
    assert [frac(u) for u in fix["utilities"]] == [
        Fraction(1, 2),
        Fraction(1),
        Fraction(1, 2),
    ]


def test_assumption_checker():
    fix = graphecon.gen_fixture("broker", b="1/2")
    report = graphecon.check(fix["economy"])
    assert report["all_pass"]
    dead = dict(fix["economy"])
    dead["resale_bounds"] = [0, 0, 0]
    report = graphecon.check(dead)
    assert not report["all_pass"]
    failed = [v for v in report["assumptions"] if not v["pass"]]
    assert any(v["assumption"] == 3 for v in failed)


def test_solve_and_verify_roundtrip():
    fix = graphecon.gen_fixture("broker", b="1/2")
    result = graphecon.solve(fix["economy"], eps="1/10")
    assert result["stats"]["self_verification"]
    report = graphecon.verify(
        fix["economy"], result["certificate"], kind="approx", value="1/10"
    )
    assert report["pass"]
    assert result["stats"]["termination_reason"] in (
        "exact-local-clearing",
        "surplus-threshold",
    )


def test_kko_fixture():
    fix = graphecon.gen_fixture("epsilon-kko", eps_pad="1/10")
    report = graphecon.verify(fix["economy"], fix["certificate"], kind="kko")
    assert report["pass"]


def test_gated_economy_raises():
    fix = graphecon.gen_fixture("pmax-chain", m=3, alpha="2")
    with pytest.raises(RuntimeError):
        graphecon.solve(fix["economy"], eps="1/10")
    result = graphecon.solve(fix["economy"], eps="1/10", force=True)
    assert result["stats"]["self_verification"]


def test_brute_force_smoke():
    fix = graphecon.gen_fixture("broker", b="1/2")
    hits = graphecon.brute_force(fix["economy"], depth=8, tol="10")
    assert hits
    assert "residual" in hits[0]
