import csv

import numpy as np
import pytest

from strfm.analysis import (complex_matrix, convergence_sweep, eigen_report, error_report, flatness_ratio,
                            growth_fit, propagation_matrices, unique_eigenvalue_count, write_eigen_csv,
                            write_segments_csv, write_sweep_csv, SweepRow)
from strfm.problems import get_problem

from conftest import small_config


def test_exact_solution_has_zero_error():
    p = get_problem("wave_1d")
    rep = error_report(p, p.exact_values, n_space=50, n_time=40)
    assert rep.L2_global <= 1e-14 and rep.Linf_global <= 1e-14
    assert rep.reference_L2 > 0


def test_constant_offset():
    p = get_problem("heat_1d")
    c = -0.37
    rep = error_report(p, lambda X, T: p.exact_values(X, T) + c, n_space=60, n_time=50)
    assert rep.Linf_global == pytest.approx(abs(c), rel=1e-12)
    # trapezoid rule is exact for constants: |c| * sqrt(|domain| * T)
    assert rep.L2_global == pytest.approx(abs(c) * np.sqrt(12.0 * 10.0), rel=1e-12)


def test_segmented_grid_matches_plain_grid_when_aligned():
    # 5 segments of 2 steps each use exactly the levels of an 11-level plain grid
    p = get_problem("heat_1d")
    sol = lambda X, T: p.exact_values(X, T) + 1e-3 * T[:, None]  # noqa: E731
    plain = error_report(p, sol, n_space=20, n_time=11)
    seg = error_report(p, sol, n_space=20, n_time=11, segments=np.linspace(0, 10, 6))
    assert seg.L2_global == pytest.approx(plain.L2_global, rel=1e-12)
    assert seg.Linf_global == pytest.approx(plain.Linf_global, rel=1e-12)
    with pytest.raises(ValueError):
        error_report(p, sol, n_space=20, n_time=3, segments=np.linspace(0, 10, 6))


def test_segments_square_sum_to_global():
    p = get_problem("schrodinger_1d")
    sol = lambda X, T: p.exact_values(X, T) * (1 + 0.01 * np.sin(T))[:, None]  # noqa: E731
    rep = error_report(p, sol, n_space=40, n_time=100, segments=np.linspace(0, 10, 6))
    assert len(rep.segment_L2) == 5
    assert rep.grid_shape == (40, 100)
    assert np.sum(np.square(rep.segment_L2)) == pytest.approx(rep.L2_global**2, rel=1e-12)
    assert len(rep.Linf_components) == 2


def test_error_report_with_reference_and_grid_shape():
    p = get_problem("heat_1d_nonsmooth")
    with pytest.raises(ValueError):
        error_report(p, lambda X, T: np.zeros((len(T), 1)))
    ref = lambda X, T: np.ones((len(T), 1))  # noqa: E731
    rep = error_report(p, lambda X, T: np.zeros((len(T), 1)), ref, n_space=30, n_time=20)
    assert rep.L2_relative == pytest.approx(1.0, rel=1e-12)
    assert rep.grid_shape == (30, 20)


def test_two_dimensional_grid_respects_holes():
    p = get_problem("membrane_complex")
    one = lambda X, T: np.ones((len(T), 1))  # noqa: E731
    zero = lambda X, T: np.zeros((len(T), 1))  # noqa: E731
    rep = error_report(p, one, zero, n_space=(101, 81), n_time=2)
    area = rep.L2_global**2 / 10.0
    notch = 1.0
    holes = np.pi * (0.5**2 + 0.45**2)
    assert area == pytest.approx(20.0 - notch - holes, rel=0.02)


def test_eigen_identity_and_diagonal():
    rep = eigen_report(np.eye(6))
    assert rep.unique_count == 1 and rep.max_modulus == 1.0 and rep.growth_factor == 1.0
    rep = eigen_report(np.diag(np.arange(1.0, 9.0)))
    assert rep.unique_count == 8 and rep.max_modulus == 8.0
    assert rep.unique_count <= len(rep.eigenvalues)


def test_unique_count_clusters_close_values():
    ev = np.array([1.0, 1.0 + 1e-12, 2.0, 2.0 * (1 + 5e-10), 3.0 + 1e-3])
    assert unique_eigenvalue_count(ev) == 3
    assert unique_eigenvalue_count(ev, rel_tol=1e-13) == 5


def test_eigen_report_rejects_bad_input():
    with pytest.raises(ValueError):
        eigen_report(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigen_report(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_complex_form_recovers_complex_spectrum(rng):
    n = 5
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    # realification on interleaved (re, im) unknowns
    B = np.zeros((2 * n, 2 * n))
    B[0::2, 0::2] = M.real
    B[0::2, 1::2] = -M.imag
    B[1::2, 0::2] = M.imag
    B[1::2, 1::2] = M.real
    np.testing.assert_allclose(complex_matrix(B), M)
    rep = eigen_report(B, complex_form=True)
    assert rep.unique_count == n
    np.testing.assert_allclose(np.sort_complex(rep.eigenvalues), np.sort_complex(np.linalg.eigvals(M)))
    # the real form doubles the spectrum with conjugates
    assert eigen_report(B).unique_count == 2 * n


def test_growth_fit_geometric_and_flat():
    rate, r2 = growth_fit([1.0, 2.0, 4.0, 8.0])
    assert rate == pytest.approx(2.0, rel=1e-14) and r2 == pytest.approx(1.0, rel=1e-14)
    assert growth_fit([3.0, 3.0, 3.0]) == (1.0, 1.0)


def test_growth_fit_scale_invariant(rng):
    e = np.exp(rng.normal(size=12))
    # a common factor only shifts the intercept of the log-linear fit
    for c in (1e-6, 8.0, 3e5):
        assert growth_fit(e * c)[0] == pytest.approx(growth_fit(e)[0], rel=1e-12)


@pytest.mark.parametrize("bad", [[1.0, 2.0], [1.0, 0.0, 2.0], [1.0, -1.0, 3.0], [1.0, np.nan, 1.0]])
def test_growth_fit_rejects(bad):
    with pytest.raises(ValueError):
        growth_fit(bad)


def test_flatness_ratio():
    assert flatness_ratio([2.0, 4.0, 1.0]) == 4.0


@pytest.mark.parametrize("solver", ["strfm", "march"])
def test_tiny_feature_count_q_sweep_is_flat(solver):
    cfg = small_config(J_n=5)
    rows = convergence_sweep(get_problem("heat_1d"), cfg, "Q", [10, 20, 40, 80], solver=solver,
                             n_space=100, n_time=100)
    L2 = np.array([r.L2 for r in rows])
    assert L2.max() / L2.min() < 1.1
    assert [r.value for r in rows] == [10, 20, 40, 80] and all(r.axis == "Q" for r in rows)


def test_sweep_argument_checks():
    p = get_problem("heat_1d")
    with pytest.raises(ValueError):
        convergence_sweep(p, small_config(), "J_n", [4, 4])
    with pytest.raises(ValueError):
        convergence_sweep(p, small_config(), "R_m", [1, 2])


def test_propagation_matrices_block_width():
    p = get_problem("heat_1d")
    cfg = small_config(J_n=6, Q_x=6, Q_t=6)
    with pytest.raises(ValueError):
        propagation_matrices(p, cfg, n_blocks=1)
    a = propagation_matrices(p, cfg, n_blocks=2, block_width=1.0)[0]
    b = propagation_matrices(p, cfg, n_blocks=3, block_width=1.0)
    np.testing.assert_array_equal(a, b[0])
    np.testing.assert_array_equal(b[0], b[1])
    c = propagation_matrices(p, cfg, n_blocks=2)[0]
    assert not np.allclose(a, c)


def test_csv_writers(tmp_path):
    write_sweep_csv(tmp_path / "s.csv", [SweepRow("J_n", 10, 0.5, 0.25)])
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows == [["axis", "value", "L2", "Linf"], ["J_n", "10", "0.5", "0.25"]]
    write_eigen_csv(tmp_path / "e.csv", [1.0, 3j, -2.0])
    rows = list(csv.reader(open(tmp_path / "e.csv")))
    assert rows[0] == ["re", "im", "modulus"] and float(rows[1][2]) == 3.0
    p = get_problem("heat_1d")
    rep = error_report(p, p.exact_values, n_space=10, n_time=10, segments=[0, 5, 10])
    write_segments_csv(tmp_path / "g.csv", rep)
    rows = list(csv.reader(open(tmp_path / "g.csv")))
    assert rows[0] == ["segment", "t_mid", "L2"] and [r[1] for r in rows[1:]] == ["2.5", "7.5"]
