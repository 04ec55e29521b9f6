import numpy as np
import pytest

import kzsketch


def grid_points(n=200, d=3, delta=64, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(1, delta + 1, size=(n, d), dtype=np.int64)


def test_cost_matches_numpy():
    pts = grid_points(50).astype(float)
    centers = pts[:2]
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
    assert kzsketch.cost(pts, centers, "2") == pytest.approx(d2.min(1).sum(), rel=1e-12)
    assert kzsketch.cost(pts, centers, 1) == pytest.approx(np.sqrt(d2).min(1).sum(), rel=1e-12)


def test_compress_roundtrip():
    pts = grid_points()
    blob = kzsketch.compress(pts, delta=64, k=3, z="2", eps=0.2, method="identity", seed=7)
    assert isinstance(blob, bytes)
    assert blob == kzsketch.compress(pts, delta=64, k=3, z="2", eps=0.2, method="identity", seed=7)

    dec = kzsketch.decode(blob)
    assert dec["header"]["k"] == 3
    assert dec["header"]["n"] == 200
    assert dec["weights"].sum() == pytest.approx(200, rel=0.8)

    centers = pts[:3].astype(float)
    exact = kzsketch.cost(pts.astype(float), centers)
    assert kzsketch.estimate_cost(blob, centers) == pytest.approx(exact, rel=0.2)

    ledger = kzsketch.bit_size(blob)
    assert ledger["total_bits"] <= 8 * len(blob)
    assert ledger["total_bits"] > 8 * len(blob) - 8


def test_sensitivity_coreset_weights():
    pts = grid_points(2000, d=2, delta=256, seed=3)
    idx, w = kzsketch.build_coreset(pts, delta=256, k=2, eps=0.5, method="sensitivity", seed=1)
    assert len(idx) == len(w) < 2000
    assert sum(w) == pytest.approx(2000, rel=0.5)


def test_haar_basis_and_angles():
    p = kzsketch.sample_haar_basis(40, 5, 1)
    q = kzsketch.sample_haar_basis(40, 5, 2)
    assert np.allclose(p.T @ p, np.eye(5), atol=1e-10)
    sigmas, thetas = kzsketch.principal_angles(p, q)
    assert np.allclose(sigmas, np.linalg.svd(p.T @ q, compute_uv=False), atol=1e-10)
    assert all(0 <= t <= np.pi / 2 for t in thetas)


def test_partial_coloring_identity():
    res = kzsketch.find_partial_coloring(np.eye(4) * 1e-3, max_restarts=64, seed=0)
    assert len(res["zeta"]) == 4
    assert set(res["zeta"]) <= {-1, 0, 1}


def test_upper_bound_positive():
    assert kzsketch.theoretical_upper_bound(1000, 4, 8, 1024, 0.1, "2", 1000) > 0


def test_run_command():
    code, report = kzsketch.run("angles", seed=1, d=40, n=4, trials=20)
    assert code == 0
    assert report["pass"] is True
    assert report["results"]["trials"] == 20


def test_errors_raise():
    with pytest.raises(kzsketch.KzError):
        kzsketch.compress(grid_points(10), delta=64, k=2, eps=2.0)
    with pytest.raises(kzsketch.KzError):
        kzsketch.decode(b"\x00\x01")
