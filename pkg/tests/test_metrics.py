import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentdp.metrics import (
    SSIM_C1,
    SSIM_C2,
    SSIM_SIGMA,
    SSIM_WINDOW,
    MetricReport,
    aggregate_csv_row,
    compare,
    latent_distance,
    psnr,
    ssim,
)


def psnr_oracle(a, b):
    """Second, independent implementation straight from the definition."""
    diffs = [(float(x) - float(y)) ** 2 for x, y in zip(a.ravel(), b.ravel())]
    mse = math.fsum(diffs) / len(diffs)
    return math.inf if mse == 0 else 10.0 * math.log10(1.0 / mse)


def ssim_oracle(a, b):
    """Per-window loop with its own Gaussian weights."""
    half = SSIM_WINDOW // 2
    w = [
        [
            math.exp(-((i - half) ** 2 + (j - half) ** 2) / (2 * SSIM_SIGMA**2))
            for j in range(SSIM_WINDOW)
        ]
        for i in range(SSIM_WINDOW)
    ]
    total_w = math.fsum(math.fsum(row) for row in w)
    w = [[v / total_w for v in row] for row in w]
    h, wid = a.shape
    values = []
    for top in range(h - SSIM_WINDOW + 1):
        for left in range(wid - SSIM_WINDOW + 1):
            mu_a = mu_b = e_aa = e_bb = e_ab = 0.0
            for i in range(SSIM_WINDOW):
                for j in range(SSIM_WINDOW):
                    x = float(a[top + i, left + j])
                    y = float(b[top + i, left + j])
                    wij = w[i][j]
                    mu_a += wij * x
                    mu_b += wij * y
                    e_aa += wij * x * x
                    e_bb += wij * y * y
                    e_ab += wij * x * y
            var_a = e_aa - mu_a**2
            var_b = e_bb - mu_b**2
            cov = e_ab - mu_a * mu_b
            num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
            den = (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
            values.append(num / den)
    return math.fsum(values) / len(values)


def test_psnr_identical_is_infinite():
    img = np.full((12, 12), 0.25)
    assert psnr(img, img) == math.inf


def test_psnr_uniform_difference():
    a = np.full((16, 16), 0.3)
    b = np.full((16, 16), 0.4)
    # MSE = 0.01, PSNR = 10 log10(1 / 0.01) = 20 dB
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-12)


def test_psnr_strictly_decreasing_in_mse():
    a = np.full((12, 12), 0.2)
    values = [psnr(a, np.clip(a + shift, 0, 1)) for shift in (0.05, 0.1, 0.2, 0.4)]
    assert all(x > y for x, y in zip(values, values[1:]))


def test_psnr_matches_independent_oracle():
    rng = np.random.default_rng(10)
    a = rng.random((20, 15))
    b = rng.random((20, 15))
    assert psnr(a, b) == pytest.approx(psnr_oracle(a, b), abs=1e-10)


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_ssim_identity():
    rng = np.random.default_rng(11)
    a = rng.random((14, 14))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_symmetry():
    rng = np.random.default_rng(12)
    a = rng.random((13, 17))
    b = rng.random((13, 17))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_constant_shift_matches_oracle():
    a = np.full((12, 12), 0.2)
    b = np.clip(a + 0.5, 0.0, 1.0)
    assert ssim(a, b) == pytest.approx(ssim_oracle(a, b), abs=1e-12)
    # closed form for constant images: (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1)
    expected = (2 * 0.2 * 0.7 + SSIM_C1) / (0.2**2 + 0.7**2 + SSIM_C1)
    assert ssim(a, b) == pytest.approx(expected, abs=1e-12)


def test_ssim_random_images_match_oracle():
    rng = np.random.default_rng(13)
    a = rng.random((12, 13))
    b = np.clip(a + rng.normal(scale=0.1, size=a.shape), 0.0, 1.0)
    assert ssim(a, b) == pytest.approx(ssim_oracle(a, b), abs=1e-10)


def test_ssim_matches_skimage_reference():
    from skimage.metrics import structural_similarity

    rng = np.random.default_rng(16)
    a = rng.random((24, 31))
    b = np.clip(a + rng.normal(scale=0.08, size=a.shape), 0.0, 1.0)
    reference = structural_similarity(
        a,
        b,
        win_size=SSIM_WINDOW,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        data_range=1.0,
    )
    assert ssim(a, b) == pytest.approx(reference, abs=1e-12)


def test_ssim_bounded_and_window_minimum():
    rng = np.random.default_rng(14)
    a = rng.random((11, 11))
    b = rng.random((11, 11))
    assert -1.0 <= ssim(a, b) <= 1.0
    with pytest.raises(ValueError, match="at least"):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))


def test_ssim_decreases_with_noise(faces):
    rng = np.random.default_rng(15)
    a = faces[0]
    mild = np.clip(a + rng.normal(scale=0.02, size=a.shape), 0, 1)
    harsh = np.clip(a + rng.normal(scale=0.3, size=a.shape), 0, 1)
    assert ssim(a, harsh) < ssim(a, mild) < 1.0


def test_latent_distance_basics():
    assert latent_distance([1.0, 2.0], [1.0, 2.0]) == (0.0, 0.0)
    assert latent_distance([3.0, 0.0], [0.0, 4.0]) == (7.0, 4.0)
    with pytest.raises(ValueError):
        latent_distance([1.0], [1.0, 2.0])


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=3, max_size=3),
    st.lists(st.floats(-100, 100), min_size=3, max_size=3),
    st.lists(st.floats(-100, 100), min_size=3, max_size=3),
)
def test_latent_distance_triangle_inequality(x, y, z):
    for idx in (0, 1):
        dxz = latent_distance(x, z)[idx]
        dxy = latent_distance(x, y)[idx]
        dyz = latent_distance(y, z)[idx]
        assert dxz <= dxy + dyz + 1e-9


def test_report_serialization():
    r = MetricReport(psnr=math.inf, ssim=1.0, latent_l1=0.0, latent_linf=0.0)
    doc = r.to_doc()
    assert doc["psnr"] == "inf"
    r2 = MetricReport(psnr=20.0, ssim=0.5)
    assert r2.to_doc()["latent_l1"] is None


def test_aggregate_csv_row():
    reports = [
        MetricReport(psnr=10.0, ssim=0.5),
        MetricReport(psnr=30.0, ssim=0.7),
        MetricReport(psnr=math.inf, ssim=1.0),
    ]
    row = aggregate_csv_row(2.0, reports)
    eps, mean_ssim, mean_psnr = row.split(",")
    assert float(eps) == 2.0
    assert float(mean_ssim) == pytest.approx((0.5 + 0.7 + 1.0) / 3)
    assert float(mean_psnr) == pytest.approx(20.0)  # infinite pairs excluded


def test_compare_bundles_latent_distances(codec_model, faces):
    from latentdp.codec import encode

    z = encode(codec_model, faces[0])
    z2 = z + 0.5
    report = compare(faces[0], faces[1], z=z, z_private=z2)
    assert report.latent_l1 == pytest.approx(0.5 * z.size)
    assert report.latent_linf == pytest.approx(0.5)
