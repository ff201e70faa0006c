import json

import numpy as np
import pytest

from qszego import io as qio
from qszego.heisenberg import GroupPoint, dilate, hnorm
from qszego.kernel import KernelConfig, s_closed_form, s_derivative_oracle, s_sum_form
from qszego import verification as ver

CFG = KernelConfig(2, 1.0)


def test_form_equivalence_passes():
    rep = ver.check_form_equivalence(CFG, 2000)
    assert rep.passed and rep.sup < 1e-9


def test_form_equivalence_catches_corrupt_evaluator():
    bad = lambda s, c: s_sum_form(s, c) * (1 + 1e-6)
    rep = ver.check_form_equivalence(CFG, 500, evaluators=(bad, s_closed_form, s_derivative_oracle))
    assert not rep.passed and rep.sup == pytest.approx(1e-6, rel=1e-2)


def test_form_equivalence_with_zero_c():
    assert ver.check_form_equivalence(CFG.with_c(0.0), 200).passed


def test_exact_equivalence():
    rep = ver.check_form_equivalence_exact(CFG, 20, seed=3)
    assert rep.passed and rep.extra["mismatches"] == 0


def test_homogeneity_and_wrong_exponent():
    assert ver.check_homogeneity(CFG, 1000).passed
    bad = ver.check_homogeneity(CFG, 1000, Q=4 * CFG.n + 1)
    assert not bad.passed and bad.sup > 1e-2


def test_size_bound_scan():
    rep = ver.scan_size_bound(CFG, 2048, refine=2)
    assert rep.passed
    assert rep.extra["dilation_drift"] <= 1e-10
    # the sup is attained at t = 0 where ||g||^Q |K| = s(1) = 12
    assert rep.sup == pytest.approx(12, rel=1e-6)


def test_gradient_bound_wrong_exponent_drifts():
    rep = ver.scan_gradient_bound(CFG, 512, exponent=CFG.Q, refine=1)
    assert not rep.passed and rep.extra["dilation_drift"] > 1e-3


def test_gradient_fd():
    rep = ver.gradient_fd_check(CFG, 200)
    assert rep.passed and rep.extra["order"] >= 1.9


def test_commutator_bracket_vs_literal():
    assert ver.commutator_check(2, "bracket").passed
    lit = ver.commutator_check(2, "literal")
    assert not lit.passed
    with pytest.raises(ValueError):
        ver.commutator_check(2, "other")


def test_regularity_argument_checks():
    with pytest.raises(ValueError):
        ver.check_regularity(CFG, c_sep=0)
    with pytest.raises(ValueError):
        ver.check_regularity(CFG, variant="iv")
    with pytest.raises(ValueError):
        ver.mean_value_check(CFG, c0=1.5)


def test_a_constant_matches_direct_evaluation():
    nv = ver.unit_sphere_nonvanishing(CFG)
    assert nv.passed and nv.norm == pytest.approx(1, abs=1e-12)
    for m, row in nv.a_table.items():
        assert row["abs_A"] > 0
        assert row["formula_rel_dev"] < 1e-12
    g0, value = nv
    assert float(hnorm(g0)) == pytest.approx(1.0)


def test_nonvanishing_rejects_zero_c():
    with pytest.raises(ver.ConsistencyError):
        ver.unit_sphere_nonvanishing(CFG.with_c(0.0))


def test_witness_at_identity():
    g = GroupPoint.identity(2)
    res = ver.lower_bound_witness(g, 2.0, CFG)
    assert res.rho_dev <= 1e-12 and res.product_dev <= 1e-12
    with pytest.raises(ValueError):
        ver.lower_bound_witness(g, 0.0, CFG)


def test_witness_check():
    rep = ver.check_witness(CFG, 300)
    assert rep.passed and rep.sup <= 1e-10


def test_half_value_radius_positive():
    eps0 = ver.half_value_radius(CFG, probes=64)
    assert 0 < eps0 <= 1


def test_ball_pair_scale_invariance():
    g = GroupPoint([0.2, -0.1, 0.3], [0.4, 0.0, -0.2, 0.1])
    a = ver.ball_pair_lower_bound(g, 0.1, CFG, 500)
    b = ver.ball_pair_lower_bound(dilate(3.0, g), 0.3, CFG, 500)
    assert a.passed and a.inf > 0
    assert b.inf == pytest.approx(a.inf, rel=1e-8)


def test_verify_all_subset_is_json_and_deterministic():
    claims = ("homogeneity", "witness", "nonvanishing", "commutator")
    r1 = ver.verify_all(CFG, seed=2, samples=256, claims=claims)
    r2 = ver.verify_all(CFG, seed=2, samples=256, threads=4, claims=claims)
    assert r1["pass"]
    assert qio.dumps(r1) == qio.dumps(r2)
    assert [r["claim"] for r in json.loads(qio.dumps(r1))["reports"]] == ["homogeneity", "witness", "nonvanishing", "commutator_bracket"]


def test_unknown_claim():
    with pytest.raises(ValueError):
        ver.run_claim("nope", CFG)
