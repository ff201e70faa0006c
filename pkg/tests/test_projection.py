import warnings

import numpy as np
import pytest

from qszego.heisenberg import DomainError, GroupPoint, LatticeSpec, SiegelPoint
from qszego.io import InputError
from qszego.kernel import KernelConfig
from qszego.projection import (
    QuadratureError, QuadratureWarning, SampledFunction, _odd_square_counts, operator_norm_estimate, project,
    project_eps, reproduce_check, reproducing_constant,
)

CFG = KernelConfig(2, 1.0)
SPEC = LatticeSpec(1.5, 0.5, 0.5, 0.1)
SMALL = LatticeSpec(1.0, 0.8, 0.8, 0.1)


def bump(pts):
    r2 = (pts.y ** 2).sum(axis=1) + (pts.t ** 2).sum(axis=1)
    out = np.zeros((len(pts), 4))
    out[:, 0] = np.exp(-r2)
    out[:, 2] = pts.t[:, 0] * np.exp(-r2)
    return out


@pytest.fixture(scope="module")
def fbump():
    return SampledFunction.from_callable(bump, SPEC, 2)


G = GroupPoint([0.05, -0.1, 0.02], [0.1, 0.0, -0.05, 0.2])


def test_zero_function():
    f = SampledFunction.from_callable(lambda p: np.zeros((len(p), 4)), SPEC, 2)
    assert np.all(project(f, G, SPEC, CFG) == 0)


def test_linearity(fbump):
    other = SampledFunction(fbump.points, np.roll(fbump.values, 1, axis=1))
    comb = SampledFunction(fbump.points, 2.5 * fbump.values + other.values)
    lhs = project(comb, G, SPEC, CFG)
    rhs = 2.5 * project(fbump, G, SPEC, CFG) + project(other, G, SPEC, CFG)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())


def test_scaled_matches_c(fbump):
    np.testing.assert_allclose(project(fbump, G, SPEC, CFG.with_c(3.0)), 3 * project(fbump, G, SPEC, CFG), rtol=1e-12)


def test_reversed_order_differs(fbump):
    a = project(fbump, G, SPEC, CFG)
    b = project(fbump, G, SPEC, CFG, order="reversed")
    assert np.linalg.norm(a - b) > 1e-6 * np.linalg.norm(a)
    # real parts agree: Re(pq) = Re(qp)
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    with pytest.raises(ValueError):
        project(fbump, G, SPEC, CFG, order="sideways")


def test_thread_count_does_not_change_bits(fbump):
    ref = project(fbump, G, SPEC, CFG, threads=1)
    for th in (2, 4, 8):
        assert project(fbump, G, SPEC, CFG, threads=th).tobytes() == ref.tobytes()


def test_empty_shell_raises(fbump):
    far = GroupPoint([0.0, 0, 0], [50.0, 0, 0, 0])
    with pytest.raises(QuadratureError):
        project(fbump, far, SPEC, CFG)


def test_nan_sample_rejected(fbump):
    vals = fbump.values.copy()
    vals[7, 2] = np.nan
    with pytest.raises(InputError):
        project(SampledFunction(fbump.points, vals), G, SPEC, CFG)


def test_dimension_mismatch(fbump):
    with pytest.raises(ValueError):
        project(fbump, GroupPoint.identity(3), SPEC, CFG)


def test_csv_round_trip(tmp_path):
    f = SampledFunction.from_callable(bump, SMALL, 2)
    path = tmp_path / "f.csv"
    f.to_csv(path)
    back = SampledFunction.from_csv(path)
    assert np.array_equal(back.values, f.values)
    assert np.array_equal(back.points.t, f.points.t) and np.array_equal(back.points.y, f.points.y)


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t1,t2,t3,y1,y2,y3,y4,a,b,c,d\n" + ",".join(["0"] * 11) + "\n")
    with pytest.raises(InputError):
        SampledFunction.from_csv(path)


def test_left_translation_equivariance(fbump):
    # (ah)^{-1} (ag) = h^{-1} g, so moving samples and point by a on the left changes nothing
    a = GroupPoint([0.1, 0.0, -0.2], [0.0, 0.3, 0.0, 0.1])
    moved = SampledFunction(a * fbump.points, fbump.values)
    lhs = project(moved, a * G, SPEC, CFG)
    np.testing.assert_allclose(lhs, project(fbump, G, SPEC, CFG), rtol=1e-10)


def test_eps_version_approaches_hole_free_sum():
    spec = LatticeSpec(1.5, 0.5, 0.5, 1e-9)
    f = SampledFunction.from_callable(bump, spec, 2)
    g = GroupPoint.identity(2)  # never a cell centre
    ref = project(f, g, spec, CFG)
    errs = [np.linalg.norm(project_eps(f, g, eps, spec, CFG) - ref) / np.linalg.norm(ref) for eps in (1e-3, 1e-5, 1e-7)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6
    with pytest.raises(ValueError):
        project_eps(f, g, 0.0, spec, CFG)


def test_odd_square_counts():
    # odd vectors in Z^2 with |m|^2 = 2: (+-1, +-1)
    c = _odd_square_counts(2, 20)
    assert c[2] == 4 and c[10] == 8 and c[18] == 4 and c[3] == 0
    assert _odd_square_counts(1, 9)[9] == 2


def test_radial_and_direct_agree():
    cfg = KernelConfig(2, reproducing_constant(2))
    spec = LatticeSpec(1.5, 0.5)
    p = SiegelPoint.real_axis(2.0, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        d = reproduce_check(p, p, spec, cfg, method="direct")
        r = reproduce_check(p, p, spec, cfg, method="radial")
    np.testing.assert_allclose(d.approx, r.approx, rtol=1e-12, atol=1e-14)
    assert d.method == "direct" and r.method == "radial"


def test_reproduce_small_radius_warns():
    cfg = KernelConfig(2, reproducing_constant(2))
    p = SiegelPoint.real_axis(2.0, 2)
    with pytest.warns(QuadratureWarning):
        reproduce_check(p, p, LatticeSpec(1.5, 0.5), cfg)


def test_reproduce_needs_interior_points():
    p = SiegelPoint(np.zeros(4), np.zeros(4))
    with pytest.raises(DomainError):
        reproduce_check(p, p, SMALL, CFG)


def test_radial_needs_real_axis():
    p = SiegelPoint(np.array([3.0, 0.5, 0, 0]), np.zeros(4))
    with pytest.raises(ValueError):
        reproduce_check(p, p, SMALL, CFG, method="radial")


def test_reproducing_constant_stable():
    c = reproducing_constant(2)
    assert c > 0
    assert reproducing_constant(2, 1.0, 3.0) == pytest.approx(c, rel=1e-8)


def test_operator_norm_zero_and_linear():
    assert operator_norm_estimate(SMALL, CFG.with_c(0.0)).value == 0.0
    a = operator_norm_estimate(SMALL, CFG, seed=1)
    b = operator_norm_estimate(SMALL, CFG.with_c(2.0), seed=1)
    assert a.converged and a.points == 128
    assert b.value == pytest.approx(2 * a.value, rel=1e-6)
    with pytest.raises(ValueError):
        operator_norm_estimate(SMALL, CFG, trials=0)
