import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coronawsn.denoise import (
    DenoiseParams,
    build_dictionary,
    correlation,
    denoise_color,
    denoise_gray,
    denoise_pipeline,
    extract_patches,
    group_all,
    group_similar,
    patch_matrix,
    patch_origins,
    reconstruct,
)
from coronawsn.imageio import read_image
from coronawsn.metrics import psnr


def test_patch_counts():
    img = np.zeros((16, 16))
    assert len(extract_patches(img, 8, 8)) == 4
    assert len(extract_patches(img, 8, 4)) == 9


@pytest.mark.parametrize("shape,p,s", [((16, 16), 8, 4), ((21, 17), 8, 5), ((9, 30), 4, 3), ((8, 8), 8, 8)])
def test_patches_cover_every_pixel(shape, p, s):
    mask = np.zeros(shape, dtype=bool)
    for r, c in patch_origins(shape, p, s):
        assert 0 <= r <= shape[0] - p and 0 <= c <= shape[1] - p
        mask[r : r + p, c : c + p] = True
    assert mask.all()


def test_patch_vectors_are_mean_removed():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (16, 16)).astype(float)
    for patch in extract_patches(img, 8, 4):
        r, c = patch.origin
        block = img[r : r + 8, c : c + 8].ravel()
        assert patch.mean == pytest.approx(block.mean())
        assert np.allclose(patch.vector + patch.mean, block)


def test_bad_patch_geometry():
    with pytest.raises(ValueError):
        patch_origins((4, 4), 8, 4)
    with pytest.raises(ValueError):
        patch_origins((16, 16), 8, 9)


def test_correlation_examples():
    a = np.array([1.0, 3.0, 2.0, 5.0])
    assert correlation(a, a) == pytest.approx(1.0)
    assert correlation(a, -a) == pytest.approx(-1.0)
    assert correlation([1, 2, 3, 4], [2, 4, 6, 8]) == pytest.approx(1.0)
    assert correlation([1, 1, 1], [1, 2, 3]) == 0.0
    with pytest.raises(ValueError):
        correlation([1], [1])


def test_group_duplicates_and_negatives():
    rng = np.random.default_rng(1)
    base = rng.standard_normal(16)
    pool = [rng.standard_normal(16) for _ in range(6)]
    pool[2] = base + 7.0  # shifted duplicate
    pool[4] = -base
    pool.insert(0, base)
    g = group_similar(pool, 0, G=3, r_min=0.9)
    assert g.members[0] == 0 and sorted(g.members) == [0, 3, 5]
    assert np.allclose(g.weights, 1 / 3)


def test_group_top_g_oracle():
    rng = np.random.default_rng(2)
    pool = rng.standard_normal((20, 16))
    g = group_similar(list(pool), 4, G=5, r_min=0.0)
    scores = sorted(((abs(correlation(pool[4], pool[j])), -j) for j in range(20) if j != 4), reverse=True)
    assert g.members == [4] + [-j for _, j in scores[:4]]
    w = np.array([1.0] + [s for s, _ in scores[:4]])
    assert np.allclose(g.weights, w / w.sum())


def test_group_all_rows_match_group_similar():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((30, 16))
    X[7] = 2 * X[3] + 1
    W = group_all(X, 4, 0.3, chunk=7)
    assert np.allclose(W.sum(axis=1), 1.0)
    for i in range(30):
        g = group_similar(list(X), i, 4, 0.3)
        row = W.getrow(i).toarray().ravel()
        expected = np.zeros(30)
        expected[g.members] = g.weights
        assert np.allclose(row, expected)


def test_reconstruct_identity_when_noiseless():
    rng = np.random.default_rng(4)
    img = rng.integers(0, 256, (24, 24)).astype(float)
    assert np.allclose(denoise_gray(img, 0.0, DenoiseParams(stride=4)), img, atol=1e-9)


def test_reconstruct_single_patch():
    d = build_dictionary(8, 0.95)
    theta = np.zeros((1, 64))
    theta[0, 1] = 16.0
    out = reconstruct(theta, np.array([100.0]), np.array([[0, 0]]), d, (8, 8))
    assert np.allclose(out.ravel(), d.matrix @ theta[0] + 100.0)


def test_reconstruct_overlap_average():
    d = build_dictionary(4, 0.95)
    theta = np.zeros((2, 16))
    origins = np.array([[0, 0], [0, 2]])
    out = reconstruct(theta, np.array([10.0, 30.0]), origins, d, (4, 6))
    assert np.all(out[:, :2] == 10.0)
    assert np.all(out[:, 2:4] == 20.0)
    assert np.all(out[:, 4:] == 30.0)


def test_reconstruct_requires_coverage():
    d = build_dictionary(4, 0.95)
    with pytest.raises(ValueError):
        reconstruct(np.zeros((1, 16)), np.zeros(1), np.array([[0, 0]]), d, (4, 8))


def test_color_replicated_gray_matches_gray():
    rng = np.random.default_rng(5)
    clean = np.kron(rng.integers(40, 200, (6, 6)), np.ones((8, 8))).astype(float)
    noisy = np.clip(clean + rng.normal(0, 15, clean.shape), 0, 255)
    params = DenoiseParams(stride=4)
    gray = denoise_gray(noisy, 15.0, params)
    color = denoise_color(np.stack([noisy] * 3, axis=-1), 15.0, params)
    for ch in range(3):
        assert np.allclose(color[..., ch], gray, atol=1e-9)


def test_color_zero_noise_identity():
    rng = np.random.default_rng(6)
    img = rng.integers(0, 256, (16, 16, 3)).astype(float)
    assert np.allclose(denoise_color(img, 0.0), img, atol=1e-9)


def test_color_improves_every_channel(data_dir):
    clean = read_image(data_dir / "astronaut256.ppm")[64:192, 64:192]
    rng = np.random.default_rng(0)
    for sigma in (30, 40, 50):
        noisy = np.clip(np.rint(clean + rng.normal(0, sigma, clean.shape)), 0, 255)
        _, _, final = denoise_pipeline(noisy, sigma)
        for ch in range(3):
            assert psnr(clean[..., ch], final[..., ch]) > psnr(clean[..., ch], noisy[..., ch])


def test_pipeline_shapes_and_range():
    rng = np.random.default_rng(7)
    img = rng.integers(0, 256, (32, 40)).astype(float)
    parts = denoise_pipeline(img, 20.0)
    for part in parts:
        assert part.shape == img.shape
        assert part.min() >= 0 and part.max() <= 255
    with pytest.raises(ValueError):
        denoise_gray(img, -1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(8, 40), st.integers(8, 40), st.integers(2, 8))
def test_origins_cover_property(h, w, s):
    p = 8
    s = min(s, p)
    mask = np.zeros((h, w), dtype=bool)
    origins, X = patch_matrix(np.zeros((h, w)), p, s)
    for r, c in origins:
        mask[r : r + p, c : c + p] = True
    assert mask.all()
    assert X.shape == (len(origins), p * p)
    assert len({tuple(o) for o in origins}) == len(origins)
