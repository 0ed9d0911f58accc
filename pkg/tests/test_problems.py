import numpy as np
import pytest

from strfm.features import DerivativeIndex
from strfm.problems import (CATALOG, boundary_residual, get_problem, make_heat_1d, make_membrane_2d,
                            make_schrodinger_1d, make_wave_1d, nonsmooth_initial, residuals)

EXACT = ["heat_1d", "wave_1d", "schrodinger_1d", "membrane_2d"]


def _points(p, rng, n):
    lo, hi = p.domain.bounding_box()
    X = lo + rng.random((n, p.d_x)) * (hi - lo)
    return X, rng.random(n) * p.T


def test_heat_exact_values():
    p = make_heat_1d()
    assert p.exact_values([[1.0]], [0.0])[0, 0] == pytest.approx(2.0, rel=1e-15)
    t = np.linspace(0, 10, 7)
    np.testing.assert_allclose(p.exact_values(np.zeros((7, 1)), t), 0.0, atol=1e-15)


@pytest.mark.parametrize("name", EXACT)
def test_exact_residuals_vanish(name, rng):
    p = get_problem(name)
    X, T = _points(p, rng, 1000)
    res = residuals(p, X, T)
    for key, r in res.items():
        assert np.max(np.abs(r)) <= 1e-10, key


@pytest.mark.parametrize("name", EXACT)
def test_boundary_residuals_vanish(name, rng):
    p = get_problem(name)
    T = rng.random(200) * p.T
    lo, hi = p.domain.bounding_box()
    for bc in p.boundary_conditions:
        for axis in range(p.d_x):
            for side in (lo[axis], hi[axis]):
                X = lo + rng.random((200, p.d_x)) * (hi - lo)
                X[:, axis] = side
                assert np.max(np.abs(boundary_residual(p, bc, X, T))) <= 1e-10


def test_heat_residual_tight(rng):
    p = make_heat_1d()
    X, T = _points(p, rng, 100)
    assert np.max(np.abs(residuals(p, X, T)["pde"])) <= 1e-12


def test_nonsmooth_initial_data():
    h = lambda x: nonsmooth_initial(np.array([x]))[0, 0]  # noqa: E731
    assert h(2.0) == pytest.approx(0.0, abs=1e-15)
    assert h(4.0) == pytest.approx(0.0, abs=1e-14)
    assert h(4.0 - 1e-12) == pytest.approx(0.0, abs=1e-10)
    d = 1e-6
    left = (h(4.0) - h(4.0 - d)) / d
    right = (h(4.0 + d) - h(4.0)) / d
    assert left == pytest.approx(np.pi, rel=1e-4)
    assert right == pytest.approx(2 * np.pi, rel=1e-4)
    p = get_problem("heat_1d_nonsmooth")
    assert p.exact is None and p.domain.hi == (8.0,)
    assert p.boundary_conditions[0].data(np.zeros((3, 1)), np.ones(3)).tolist() == [[0.0]] * 3


def test_wave_boundary_and_velocity(rng):
    p = make_wave_1d()
    t = rng.random(20) * 10
    for x in (0.0, 6 * np.pi):
        np.testing.assert_allclose(p.exact_values(np.full((20, 1), x), t), 0.0, atol=1e-14)
    X = rng.random((30, 1)) * 6 * np.pi
    g2 = p.initial_conditions[1].data(X)
    dt = p.exact_values(X, np.zeros(30), DerivativeIndex((0,), 1))
    np.testing.assert_allclose(g2.reshape(-1), dt.reshape(-1), rtol=1e-15)
    assert len(p.initial_conditions) == 2


def test_schrodinger_split_solution(rng):
    p = make_schrodinger_1d()
    omega = 2 * np.pi / 5
    X = rng.random((50, 1)) * 5
    u0 = p.exact_values(X, np.zeros(50))
    np.testing.assert_allclose(u0[:, 0], 2 * np.cos(omega * X[:, 0]) + np.sin(omega * X[:, 0]), rtol=1e-14)
    np.testing.assert_allclose(u0[:, 1], 0.0, atol=1e-15)
    mod0 = (u0**2).sum(axis=1)
    for t in (1.0, 3.7, 9.9):
        ut = p.exact_values(X, np.full(50, t))
        np.testing.assert_allclose((ut**2).sum(axis=1), mod0, rtol=1e-12, atol=1e-13)
    assert p.d_u == 2 and p.periodic and p.complex_form


def test_schrodinger_matches_complex_formula(rng):
    p = make_schrodinger_1d()
    omega = 2 * np.pi / 5
    X = rng.random((40, 1)) * 5
    T = rng.random(40) * 10
    psi = np.exp(-1j * omega**2 * T / 2) * (2 * np.cos(omega * X[:, 0]) + np.sin(omega * X[:, 0]))
    u = p.exact_values(X, T)
    np.testing.assert_allclose(u[:, 0] + 1j * u[:, 1], psi, rtol=1e-13, atol=1e-13)


def test_membrane_simple(rng):
    p = make_membrane_2d(True)
    t = rng.random(25) * 10
    s = rng.random(25)
    for X in (np.column_stack([s * 5, np.zeros(25)]), np.column_stack([s * 5, np.full(25, 4.0)]),
              np.column_stack([np.zeros(25), s * 4]), np.column_stack([np.full(25, 5.0), s * 4])):
        np.testing.assert_allclose(p.exact_values(X, t), 0.0, atol=1e-14)


def test_membrane_complex_is_forced():
    p = make_membrane_2d(False)
    assert p.exact is None
    X = np.array([[1.0, 3.0], [4.5, 0.5]])
    np.testing.assert_array_equal(p.f(X, np.zeros(2)), np.ones((2, 1)))
    # zero candidate: the residual is L(0) - f = -1
    jets = {idx: np.zeros((2, 1)) for idx in p.L.indices}
    np.testing.assert_array_equal(p.L.apply(jets, X, np.zeros(2)) - p.f(X, np.zeros(2)), -np.ones((2, 1)))
    assert p.domain.bounding_box()[1].tolist() == [5.0, 4.0]


def test_operator_linearity(rng):
    p = get_problem("schrodinger_1d")
    X, T = _points(p, rng, 30)
    v1 = {idx: rng.normal(size=(30, 2)) for idx in p.L.indices}
    v2 = {idx: rng.normal(size=(30, 2)) for idx in p.L.indices}
    c1, c2 = 1.7, -0.4
    comb = {idx: c1 * v1[idx] + c2 * v2[idx] for idx in p.L.indices}
    np.testing.assert_allclose(p.L.apply(comb, X, T), c1 * p.L.apply(v1, X, T) + c2 * p.L.apply(v2, X, T),
                               rtol=1e-13, atol=1e-13)


def test_catalog_and_unknown():
    assert set(EXACT) <= set(CATALOG)
    with pytest.raises(KeyError):
        get_problem("navier_stokes")
