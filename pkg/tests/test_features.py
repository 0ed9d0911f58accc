import dataclasses

import numpy as np
import pytest

from strfm.features import (DerivativeIndex, FeatureBank, FeatureKind, basis_jet, basis_values, draw_bank,
                            feature_jet, feature_values)
from strfm.geometry import Box, decompose
from strfm.partition import pou_arrays

D0 = DerivativeIndex((0,), 0)
DX = DerivativeIndex((1,), 0)
DXX = DerivativeIndex((2,), 0)
DT = DerivativeIndex((0,), 1)
DTT = DerivativeIndex((0,), 2)
DXT = DerivativeIndex((1,), 1)
ALL1 = [D0, DX, DXX, DT, DTT, DXT]


def _decomp(n_x=2, n_t=3):
    return decompose(Box((0.0,), (12.0,)), 10.0, n_x, n_t)


def test_same_seed_same_bank():
    a = draw_bank(7, "STC", _decomp(), 20)
    b = draw_bank(7, "STC", _decomp(), 20)
    for name in ("k_x", "k_t", "b", "b_t"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = draw_bank(8, "STC", _decomp(), 20)
    assert not np.array_equal(a.k_x, c.k_x)


def test_shared_bank_identical_across_time():
    bank = draw_bank(1, "SoV", _decomp(n_t=3), 10, share_across_time=True)
    for p, q in zip(bank.params(1, 0), bank.params(1, 2)):
        assert np.array_equal(p, q)


def test_substreams_stable_under_time_refinement():
    a = draw_bank(5, "STC", _decomp(n_t=2), 6)
    b = draw_bank(5, "STC", _decomp(n_t=4), 6)
    assert np.array_equal(a.k_x[:, :2], b.k_x[:, :2])


def test_draw_statistics():
    d = decompose(Box((0.0,), (1.0,)), 1.0, 10, 10)
    bank = draw_bank(0, "SoV", d, 250, R_m=1.0)
    vals = np.concatenate([bank.k_x.ravel(), bank.k_t.ravel(), bank.b.ravel(), bank.b_t.ravel()])
    assert vals.size >= 100_000
    assert abs(vals.mean()) <= 0.02
    assert vals.min() >= -1.0 and vals.max() <= 1.0
    # second moment of U(-1, 1) is 1/3
    assert np.mean(vals**2) == pytest.approx(1 / 3, abs=0.01)


def test_draw_rejects_bad_arguments():
    with pytest.raises(ValueError):
        draw_bank(0, "STC", _decomp(), 0)
    with pytest.raises(ValueError):
        draw_bank(0, "STC", _decomp(), 4, R_m=0.0)
    with pytest.raises(ValueError):
        FeatureKind.coerce("MLP")


def test_zero_parameters_give_zero_feature():
    bank = draw_bank(0, "STC", _decomp(1, 1), 3)
    bank = dataclasses.replace(bank, k_x=np.zeros_like(bank.k_x), k_t=np.zeros_like(bank.k_t),
                               b=np.zeros_like(bank.b))
    jet = feature_jet(bank, (0, 0), 1, 3.3, 4.4, ALL1)
    assert all(v == 0.0 for v in jet.values())


def test_sov_factorization():
    bank = draw_bank(2, "SoV", _decomp(), 5)
    ix, it, j = 1, 2, 3
    x, t = 8.2, 7.1
    d = bank.decomp
    k_x, k_t, b, b_t = bank.params(ix, it)
    zx = d.map_space(ix, np.array([[x]]))[0, 0]
    zt = d.map_time(it, t)
    expect = np.tanh(k_x[j, 0] * zx + b[j]) * np.tanh(k_t[j] * zt + b_t[j])
    assert feature_jet(bank, (ix, it), j, x, t, [D0])[D0] == pytest.approx(expect, rel=1e-14)


def _fd_check(bank, pou=None, rng=None, n=200, h=1e-5):
    d = bank.decomp
    ix, it = 1, 1
    a, b = d.space_bounds(ix)
    t0, t1 = d.time_bounds(it)
    X = a[0] + (0.05 + 0.9 * rng.random(n)) * (b[0] - a[0])
    T = t0 + (0.05 + 0.9 * rng.random(n)) * (t1 - t0)

    def ev(Xs, Ts, idx):
        if pou is None:
            return feature_values(bank, ix, it, Xs, Ts, idx)
        return basis_values(bank, pou, ix, it, Xs, Ts, idx)

    got = ev(X, T, [DX, DXX, DT, DTT, DXT])
    f = lambda dx, dt: ev(X + dx, T + dt, [D0])[D0]  # noqa: E731
    fx = lambda dx, dt: ev(X + dx, T + dt, [DX])[DX]  # noqa: E731
    ft = lambda dx, dt: ev(X + dx, T + dt, [DT])[DT]  # noqa: E731
    fd = {
        DX: (f(h, 0) - f(-h, 0)) / (2 * h),
        DT: (f(0, h) - f(0, -h)) / (2 * h),
        DXX: (fx(h, 0) - fx(-h, 0)) / (2 * h),
        DTT: (ft(0, h) - ft(0, -h)) / (2 * h),
        DXT: (fx(0, h) - fx(0, -h)) / (2 * h),
    }
    for idx, ref in fd.items():
        scale = np.maximum(np.abs(got[idx]), np.max(np.abs(got[idx])) * 1e-3 + 1e-12)
        err = np.max(np.abs(got[idx] - ref) / scale)
        assert err < 1e-6, (idx, err)


@pytest.mark.parametrize("kind", ["STC", "SoV"])
def test_feature_derivatives_fd(kind, rng):
    _fd_check(draw_bank(11, kind, _decomp(), 12), rng=rng)


def test_feature_derivatives_fd_large_weights():
    _fd_check(draw_bank(4, "STC", _decomp(), 6, R_m=3.0), rng=np.random.default_rng(1))


def test_basis_equals_feature_indicator_plateau():
    bank = draw_bank(3, "STC", _decomp(), 4)
    needed = [D0, DX, DXX, DT]
    for j in range(4):
        fj = feature_jet(bank, (1, 1), j, 8.0, 5.0, needed)
        bj = basis_jet(bank, "A", (1, 1), j, 8.0, 5.0, needed)
        assert fj == bj
        # smooth PoU: |z| < 3/4 in space and time is the flat plateau
        fp = feature_jet(bank, (1, 1), j, 9.0, 5.0, needed)
        bp = basis_jet(bank, "B", (1, 1), j, 9.0, 5.0, needed)
        for idx in needed:
            assert bp[idx] == pytest.approx(fp[idx], rel=1e-15, abs=1e-300)


def test_basis_leibniz_in_overlap_band():
    bank = draw_bank(3, "STC", _decomp(), 4)
    d = bank.decomp
    ix, it = 1, 1
    x = 6.0 + 0.1 * 6.0 / 2 * 2  # z = -0.8: inside the blend band
    t = d.time_center(it)
    z = d.map_space(ix, np.array([[x]]))[0, 0]
    assert -1.25 < z < -0.75
    phi = feature_values(bank, ix, it, [x], [t], [D0, DX])
    psi, dpsi, _ = pou_arrays("B", np.array([z]))
    expect = dpsi[0] * d.space_scale(ix)[0] * phi[D0][0] + psi[0] * phi[DX][0]
    got = basis_values(bank, "B", ix, it, [x], [t], [DX])[DX][0]
    np.testing.assert_allclose(got, expect, rtol=1e-13)
    h = 1e-5
    fd = (basis_values(bank, "B", ix, it, [x + h], [t], [D0])[D0][0]
          - basis_values(bank, "B", ix, it, [x - h], [t], [D0])[D0][0]) / (2 * h)
    np.testing.assert_allclose(got, fd, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("kind", ["STC", "SoV"])
def test_chain_rule_scaling(kind):
    wide = decompose(Box((0.0,), (8.0,)), 4.0, 2, 1)
    narrow = decompose(Box((0.0,), (4.0,)), 4.0, 2, 1)
    bank = draw_bank(9, kind, wide, 7)
    bank_n = dataclasses.replace(bank, decomp=narrow)
    z = np.array([-0.6, 0.1, 0.7])
    X_w = wide.unmap_space(1, z[:, None])
    X_n = narrow.unmap_space(1, z[:, None])
    T = np.full(3, 1.3)
    fw = feature_values(bank, 1, 0, X_w, T, [D0, DX, DXX])
    fn = feature_values(bank_n, 1, 0, X_n, T, [D0, DX, DXX])
    np.testing.assert_array_equal(fn[D0], fw[D0])
    np.testing.assert_allclose(fn[DX], 2 * fw[DX], rtol=1e-14)
    np.testing.assert_allclose(fn[DXX], 4 * fw[DXX], rtol=1e-14)


@pytest.mark.parametrize("kind", ["STC", "SoV"])
def test_features_bounded(kind, rng):
    bank = draw_bank(0, kind, _decomp(), 50, R_m=10.0)
    X = rng.uniform(0, 12, 500)
    T = rng.uniform(0, 10, 500)
    for it in range(3):
        v = feature_values(bank, 1, it, X, T, ALL1)
        assert np.abs(v[D0]).max() <= 1.0
        assert all(np.isfinite(a).all() for a in v.values())


def test_bank_text_roundtrip(tmp_path):
    bank = draw_bank(4, "SoV", _decomp(), 5)
    bank.dump(tmp_path / "bank.json")
    back = FeatureBank.load(tmp_path / "bank.json")
    for name in ("k_x", "k_t", "b", "b_t"):
        assert np.array_equal(getattr(back, name), getattr(bank, name))
    assert back.kind is bank.kind and back.decomp.n_t == 3


def test_derivative_index_limits():
    with pytest.raises(ValueError):
        DerivativeIndex((3,), 0)
    with pytest.raises(ValueError):
        DerivativeIndex((0,), 3)
    assert DerivativeIndex.of(2, 1, 2, 1) == DerivativeIndex((0, 2), 1)
