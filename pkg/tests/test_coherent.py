import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxzlab.coherent import (CoherentState, FluctuationOperator, characteristic_function,
                             clt_rows, coherent_by_rotation, site_char_closed_form, site_char_dense,
                             expectation, field_hash, from_tangent, grand_canonical_energy_residual,
                             grand_canonical_vector, kink_z, overlap_by_vectors,
                             overlap_decay_check, phase_aligned_distance, phase_relation_residual,
                             phase_rotation_check, product_coherent_vector, random_tangent_field,
                             tangent_projection, window_for_tolerance)
from xxzlab.kinkmath import make_params
from xxzlab.spinchain import SectorBasis, SpinSite


@given(st.integers(1, 12), st.floats(0.0, math.pi), st.floats(-math.pi, math.pi))
@settings(max_examples=40, deadline=None)
def test_coefficients_match_rotation(two_j, theta, phi):
    a = CoherentState(two_j, theta, phi).coefficients
    b = coherent_by_rotation(two_j, theta, phi)
    assert np.abs(a - b).max() <= 1e-13
    assert abs(np.linalg.norm(a) - 1) <= 1e-13


def test_coherent_expectation_direction():
    s = SpinSite(3)
    cs = CoherentState(3, 1.1, 0.4)
    v = cs.coefficients
    mean = [np.vdot(v, op @ v).real for op in (s.Sx, s.Sy, s.Sz)]
    np.testing.assert_allclose(mean, 1.5 * cs.direction(), atol=1e-13)


def test_poles():
    np.testing.assert_array_equal(CoherentState(4, 0.0).coefficients, [1, 0, 0, 0, 0])
    c = CoherentState(4, math.pi).coefficients
    assert abs(c[-1]) == pytest.approx(1.0) and np.abs(c[:-1]).max() <= 1e-15


def test_grand_canonical_product_two_sites():
    p = make_params(1, 1.25, 1.0, (1, 2))
    z = kink_z(p)
    assert z == pytest.approx(p.q)
    a = grand_canonical_vector(p, z)
    b = product_coherent_vector(p)
    assert phase_aligned_distance(a, b) <= 1e-12


@given(st.integers(1, 3), st.floats(1.05, 4.0), st.floats(-1.0, 2.0), st.floats(-3.0, 3.0))
@settings(max_examples=25, deadline=None)
def test_grand_canonical_is_product(two_j, delta, r, phi):
    p = make_params(two_j, delta, r, (-1, 2))
    a = grand_canonical_vector(p, kink_z(p, phi))
    b = product_coherent_vector(p, phi)
    assert phase_aligned_distance(a, b) <= 1e-12


def test_phase_relation():
    p = make_params(2, 1.25, 0.3, (-1, 1))
    assert phase_relation_residual(p, kink_z(p), 0.8) <= 1e-12


def test_small_z_selects_extremal_sector():
    p = make_params(1, 2.0, 0.0, (0, 2))
    vec = grand_canonical_vector(p, 1e-40)
    basis = SectorBasis(1, p.window, None)
    top = np.argmax(np.abs(vec))
    assert basis.magnetization()[top] == -1.5
    with pytest.raises(ValueError):
        grand_canonical_vector(p, 0)


def test_grand_canonical_zero_energy():
    p = make_params(2, 1.5, 0.4, (-1, 2))
    assert grand_canonical_energy_residual(p, kink_z(p, 0.3)) <= 1e-10


def test_overlap_equal_windows():
    p = make_params(1, 1.25, 0.0, (0, 1))
    res = overlap_decay_check(p, 3, 3)
    assert res["lhs"] == 0 and res["bound"] == 0


def test_overlap_reference_case():
    p = make_params(1, 1.25, 0.0, (0, 1))
    res = overlap_decay_check(p, 2, 4)
    assert res["lhs"] == pytest.approx(overlap_by_vectors(p, 2, 4), abs=1e-12)
    # the squared distance obeys the bound; the distance itself does not
    assert res["squared_form_holds"]
    assert not res["stated_form_holds"]
    assert res["lhs_sq"] == pytest.approx(0.0933, abs=5e-4)
    assert res["bound"] == pytest.approx(0.0977, abs=5e-4)


@given(st.integers(1, 3), st.floats(1.1, 5.0), st.floats(0.0, 1.0), st.integers(1, 4), st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_overlap_squared_bound(two_j, delta, r, a_n, gap):
    p = make_params(two_j, delta, r, (0, 1))
    res = overlap_decay_check(p, a_n, a_n + gap)
    assert res["squared_form_holds"]


def test_overlap_bound_monotone():
    p = make_params(2, 1.5, 0.3, (0, 1))
    bounds = [overlap_decay_check(p, a, a + 2)["bound"] for a in range(1, 8)]
    assert np.all(np.diff(bounds) < 0)
    with pytest.raises(ValueError):
        overlap_decay_check(p, 3, 2)


def test_window_for_tolerance():
    p = make_params(4, 1.25, 0.5, (0, 1))
    a = window_for_tolerance(p, 1e-24)
    assert overlap_decay_check(p, a, a + 50)["bound"] <= 1e-24
    assert overlap_decay_check(p, a - 1, a + 50)["bound"] > 1e-24 * (1 - p.q ** 100)


def test_phase_rotation_identity():
    assert phase_rotation_check(make_params(1, 1.25, 0.2, (0, 1)), 0.0) == 0.0


@pytest.mark.parametrize("two_j,window,phi", [(1, (0, 1), math.pi / 3), (2, (0, 0), 1.0),
                                              (3, (-1, 1), -2.5)])
def test_phase_rotation(two_j, window, phi):
    p = make_params(two_j, 1.25, 0.2, window)
    assert phase_rotation_check(p, phi) <= 1e-10


def test_phase_rotation_rejects_large_phi():
    with pytest.raises(ValueError):
        phase_rotation_check(make_params(1, 1.25, 0.2, (0, 1)), math.pi)


def test_tangent_projection_roundtrip():
    p = make_params(1, 1.7, 0.3, (-2, 2))
    vt = np.array([0.3, -1.2])
    v = from_tangent(p, 1, vt)
    np.testing.assert_allclose(tangent_projection(p, 1, v), vt, atol=1e-15)


def test_first_moment():
    p = make_params(3, 1.5, 0.2, (-2, 2))
    rng = np.random.default_rng(2003)
    s = SpinSite(3)
    for x in p.sites:
        v = rng.standard_normal(3)
        theta = math.atan2(1 / math.cosh(p.eta * (x - p.r)), math.tanh(p.eta * (x - p.r)))
        u = np.array([math.sin(theta), 0, math.cos(theta)])
        assert expectation(p, int(x), s.vec(v)).real == pytest.approx(1.5 * v @ u, abs=1e-12)


def test_fluctuation_hermitian_and_centred():
    p = make_params(2, 1.5, 0.2, (-1, 1))
    rng = np.random.default_rng(5)
    F = FluctuationOperator(p, rng.standard_normal((3, 3)))
    M = F.matrix()
    assert np.abs(M - M.conj().T).max() <= 1e-13
    psi = product_coherent_vector(p)
    assert abs(np.vdot(psi, M @ psi)) <= 1e-12


def test_covariance_closed_form_matches_state():
    p = make_params(3, 1.5, 0.2, (-1, 1))
    rng = np.random.default_rng(7)
    v, w = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    Fv, Fw = FluctuationOperator(p, v), FluctuationOperator(p, w)
    psi = product_coherent_vector(p)
    direct = np.vdot(psi, Fv.matrix() @ Fw.matrix() @ psi)
    assert abs(direct - Fv.covariance(Fw)) <= 1e-12
    # <v, w> is the complex inner product of the tangent projections
    expect = 0j
    for x in p.sites:
        a = tangent_projection(p, int(x), Fv.field[int(x)])
        b = tangent_projection(p, int(x), Fw.field[int(x)])
        expect += 0.5 * ((a[0] - 1j * a[1]) * (b[0] + 1j * b[1]))
    assert abs(Fv.covariance(Fw) - expect) <= 1e-13
    assert abs(Fv.inner(Fw) - 2 * expect) <= 1e-13


def test_parallel_field_has_no_fluctuations():
    p = make_params(2, 1.5, 0.2, (-1, 1))
    field = {int(x): 0.7 * u for x, u in zip(p.sites, np.array(
        [[math.sin(t), 0, math.cos(t)] for t in
         np.arctan2(1 / np.cosh(p.eta * (p.sites - p.r)), np.tanh(p.eta * (p.sites - p.r)))]))}
    F = FluctuationOperator(p, field)
    assert abs(F.inner()) <= 1e-15
    assert characteristic_function(p, field).gaussian_limit == 1.0


def test_site_char_single_site_pole():
    for two_j in (1, 2, 5):
        for t in (0.3, 1.7):
            val = site_char_dense(two_j, [t, 0, 0], 0.0)
            assert val == pytest.approx(math.cos(t / 2) ** two_j, abs=1e-13)


def test_site_char_random():
    rng = np.random.default_rng(2003)
    for _ in range(20):
        two_j = int(rng.integers(1, 17))
        theta = rng.uniform(0, math.pi)
        v = rng.standard_normal(3) * rng.uniform(0.1, 3)
        u = np.array([math.sin(theta), 0, math.cos(theta)])
        assert abs(site_char_closed_form(two_j, v, u) - site_char_dense(two_j, v, theta)) <= 1e-12
    assert site_char_closed_form(3, [0, 0, 0], [0, 0, 1]) == 1


def test_characteristic_function_consistency():
    p = make_params(4, 1.5, 0.3, (-1, 1))
    rng = np.random.default_rng(11)
    field = {0: rng.standard_normal(3), 1: rng.standard_normal(3)}
    res = characteristic_function(p, field)
    assert abs(res.exact - res.single_site_formula) <= 1e-12
    F = FluctuationOperator(p, field)
    import scipy.linalg as sla
    psi = product_coherent_vector(p)
    dense = np.vdot(psi, sla.expm(1j * F.matrix()) @ psi)
    assert abs(dense - res.exact) <= 1e-12


def test_gaussian_limit_approached():
    rng = np.random.default_rng(2003)
    base = make_params(1, 1.25, 0.5, (0, 1))
    field = random_tangent_field(base, rng)
    errs = []
    for tj in (2, 8, 32):
        res = characteristic_function(base.replace(two_j=tj), field)
        errs.append(abs(res.exact - res.gaussian_limit))
    assert errs[0] > errs[1] > errs[2]


def test_field_validation():
    p = make_params(1, 1.5, 0.0, (0, 1))
    with pytest.raises(ValueError):
        FluctuationOperator(p, {5: [1, 0, 0]})
    with pytest.raises(ValueError):
        FluctuationOperator(p, {0: [1, 0]})
    with pytest.raises(ValueError):
        FluctuationOperator(p, np.zeros((3, 3)))


def test_clt_rows_and_hash():
    p = make_params(2, 1.5, 0.0, (0, 1))
    f = {0: np.array([0.0, 1.0, 0.0])}
    assert field_hash(f) == field_hash({0: [0.0, 1.0, 0.0]})
    header, rows = clt_rows([(p, f, characteristic_function(p, f))])
    assert header == ["two_j", "site_count", "v_hash", "exact_re", "exact_im", "gauss", "abs_err"]
    assert rows[0][0] == 2 and rows[0][1] == 1
