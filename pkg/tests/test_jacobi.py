import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxzlab.jacobi import (build_jacobi, ipr, jacobi_norm, lowest_continuum_eigenvalue,
                           phase_diagram, phase_rows, spectral_report, zero_mode,
                           zero_mode_residual)
from xxzlab.kinkmath import make_params

# dense tridiagonal solve at Delta = 1.25, r = 0.5 on [-60, 60]
GAMMA_TILDE_60 = 0.39100031726854567


def test_build_small_window():
    h = build_jacobi(make_params(1, 1.25, 0.0, (-1, 1)))
    A = h.toarray()
    assert A[1, 1] == pytest.approx(1.28, abs=1e-14)
    np.testing.assert_array_equal(h.offdiag, [-0.8, -0.8])
    np.testing.assert_array_equal(A, A.T)


def test_build_rejects_single_site():
    with pytest.raises(ValueError):
        build_jacobi(make_params(1, 1.25, 0.0, (0, 0)))


def test_large_anisotropy_bulk():
    p = make_params(1, 50.0, 0.3, (-6, 6))
    d = build_jacobi(p).diagonal[1:-1]
    far = np.abs(p.sites[1:-1] - p.r) >= 2
    assert np.all(np.abs(d[far] - 2) <= 0.01)


def test_zero_mode_values():
    v, n2, n1 = zero_mode(make_params(1, 1.25, 0.0, (-3, 3)))
    assert v[3] == pytest.approx(1.0)
    assert v[4] == pytest.approx(0.8)
    assert v[5] == pytest.approx(8 / 17)
    assert n1 == pytest.approx(v.sum())


def test_zero_mode_translation():
    a = zero_mode(make_params(1, 1.7, 0.2, (-5, 5)))[0]
    b = zero_mode(make_params(1, 1.7, 1.2, (-4, 6)))[0]
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_zero_mode_residual_window():
    p = make_params(1, 1.25, 0.0, (-40, 40))
    assert zero_mode_residual(p) <= 10 * math.exp(-p.eta * 39)


def test_truncation_residual_decays_at_rate_eta():
    # plain truncation (bulk well at the end sites) breaks the zero mode
    Ls = [10, 20, 30, 40]
    res = [zero_mode_residual(make_params(1, 1.25, 0.5, (-L, L)), "dirichlet") for L in Ls]
    slope = -np.polyfit(Ls, np.log(res), 1)[0]
    assert slope == pytest.approx(math.log(2), rel=0.05)


def test_spectral_report_basics():
    p = make_params(1, 1.25, 0.5, (-60, 60))
    rep = spectral_report(p, k=6)
    assert -1e-10 <= rep.eigenvalues[0] <= rep.zero_tol
    assert rep.continuum_edge == pytest.approx(0.4)
    assert rep.gap == pytest.approx(GAMMA_TILDE_60, abs=1e-12)
    assert np.all(np.diff(rep.eigenvalues) >= 0)
    assert rep.solver == "dense"


def test_lanczos_path_agrees():
    p = make_params(1, 1.25, 0.5, (-60, 60))
    a = spectral_report(p, k=6).eigenvalues
    b = spectral_report(p, k=6, solver="lanczos").eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_lanczos_path_large_window():
    p = make_params(1, 2.0, 0.3, (-1200, 1200))
    a = spectral_report(p, k=3).eigenvalues
    b = spectral_report(p, k=3, solver="lanczos").eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_spectral_report_rejects_k():
    with pytest.raises(ValueError):
        spectral_report(make_params(1, 2.0, 0.0, (-3, 3)), k=0)


@given(st.floats(1.05, 20.0), st.floats(0.0, 1.0), st.integers(2, 40))
@settings(max_examples=60, deadline=None)
def test_psd_and_positive_gap(delta, r, L):
    p = make_params(1, delta, r, (-L, L))
    w = np.linalg.eigvalsh(build_jacobi(p).toarray())
    assert w[0] >= -1e-10
    assert spectral_report(p, k=3).gap > 0


@pytest.mark.parametrize("delta_inv", [0.2, 0.4, 0.5])
def test_gap_stable_under_window_growth(delta_inv):
    p = make_params(1, 1 / delta_inv, 0.3, (-40, 40))
    g1 = spectral_report(p, k=4).gap
    g2 = spectral_report(p.replace(window=(-80, 80)), k=4).gap
    assert abs(g1 - g2) <= 1e-8


def test_isolated_state_and_continuum_edge():
    p = make_params(1, 1.25, 0.5, (-200, 200))
    rep = spectral_report(p, k=8)
    assert rep.n_isolated == 1
    assert rep.isolated_below_edge[0][0] == rep.gap
    assert abs(lowest_continuum_eigenvalue(rep) - 0.4) <= 5e-3


def test_ipr_limits():
    assert ipr(np.eye(4)[:, :1])[0] == pytest.approx(1.0)
    assert ipr(np.ones((4, 1)))[0] == pytest.approx(0.25)


def test_norm_below_four():
    p = make_params(1, 1.25, 0.5, (-10, 10))
    assert 0 < jacobi_norm(p) <= 2 + 2 * p.delta_inv + 1e-12


def test_phase_diagram_symmetry_and_counts():
    d_grid = [0.3, 0.5, 0.7]
    r_grid = [0.1, 0.2, 0.5, 0.8, 0.9]
    cells = phase_diagram(d_grid, r_grid, (-60, 60))
    assert [(c.delta_inv, c.r) for c in cells] == [(d, r) for d in d_grid for r in r_grid]
    by = {(c.delta_inv, c.r): c for c in cells}
    for d in d_grid:
        for r in r_grid:
            c = by[(d, r)]
            assert c.n_isolated >= 1
            assert 0 < c.gap / c.continuum_edge <= 1
            assert c.n_isolated == by[(d, round(1 - r, 10))].n_isolated
            assert c.gap == pytest.approx(by[(d, round(1 - r, 10))].gap, abs=1e-9)


def test_phase_diagram_threads_deterministic():
    a = phase_diagram([0.3, 0.6], [0.0, 0.5], (-20, 20), threads=1)
    b = phase_diagram([0.3, 0.6], [0.0, 0.5], (-20, 20), threads=3)
    assert phase_rows(a, 6) == phase_rows(b, 6)


def test_phase_diagram_validation():
    with pytest.raises(ValueError):
        phase_diagram([], [0.0])
    with pytest.raises(ValueError):
        phase_diagram([1.0], [0.0])
