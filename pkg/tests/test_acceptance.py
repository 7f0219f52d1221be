"""Acceptance suite: one test per release criterion.

Each test prints a PASS/FAIL line (run with -s to see them live) and
asserts the criterion at its stated tolerance. Criteria 7 and 8 drive
the full image pipeline and dominate the runtime.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import stats as scipy_stats

import latentdp as l
from latentdp.cli import main as cli_main
from latentdp.cli import run_sweep
from latentdp.latent import write_latent_csv
from latentdp.mechanism import make_allocation

GRID = [16.0 * 2.0**k for k in range(-2, 7)]  # 4 .. 1024 over 16 components
SWEEP_SEED = 2026


def report(number: int, passed: bool, detail: str):
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
    assert passed, f"criterion {number}: {detail}"


def random_box(rng, m):
    lower = rng.normal(size=m)
    width = rng.uniform(0.1, 5.0, size=m)
    return l.ClipBounds(lower=lower, upper=lower + width, p_low=0.0, p_high=1.0)


def random_allocation(rng, eps, m):
    w = rng.uniform(0.2, 2.0, size=m)
    return make_allocation(eps, w / math.fsum(w))


def test_criterion_1_sampler_correctness():
    start = time.perf_counter()
    xs = l.laplace_sample(l.make_rng(20260810), 0.0, 1.0, size=10**6)
    rep = l.sampler_distribution_check(l.make_rng(20260810), 1.0, 10**6)
    elapsed = time.perf_counter() - start
    ok = (
        abs(xs.mean()) < 0.01
        and abs(xs.var() - 2.0) < 0.05
        and rep.ks_statistic < 0.002
        and elapsed < 5.0
    )
    report(
        1,
        ok,
        f"1e6 samples: |mean|={abs(xs.mean()):.2e} (<0.01), "
        f"|var-2|={abs(xs.var() - 2):.2e} (<0.05), KS={rep.ks_statistic:.2e} "
        f"(<0.002), {elapsed:.2f}s (<5s)",
    )


def test_criterion_2_analytic_epsilon_exactness():
    rng = np.random.default_rng(2)
    worst_analytic = 0.0
    worst_total = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 17))
        eps = float(rng.uniform(0.1, 10.0))
        bounds = random_box(rng, m)
        alloc = random_allocation(rng, eps, m)
        plan = l.make_noise_plan(l.sensitivity_from_bounds(bounds), alloc)
        worst_analytic = max(worst_analytic, abs(l.analytic_epsilon(bounds, plan) - eps))
        worst_total = max(worst_total, abs(plan.total_epsilon - eps))
    ok = worst_analytic <= 1e-12 and worst_total <= 1e-12
    report(
        2,
        ok,
        f"100 random configs: max |analytic - eps|={worst_analytic:.2e} (<=1e-12), "
        f"max |sum eps_j - eps|={worst_total:.2e} (<=1e-12)",
    )


def test_criterion_3_pointwise_ldp_bound():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_excess = -math.inf
    for _ in range(20):
        m = int(rng.integers(1, 9))
        eps = float(rng.uniform(0.1, 20.0))
        bounds = random_box(rng, m)
        alloc = random_allocation(rng, eps, m)
        plan = l.make_noise_plan(l.sensitivity_from_bounds(bounds), alloc)
        span = bounds.upper - bounds.lower
        u = bounds.lower + rng.random((500, m)) * span
        u2 = bounds.lower + rng.random((500, m)) * span
        y = bounds.lower + rng.random((500, m)) * span
        # opposite corners with y at a corner achieve the bound exactly
        u[0], u2[0], y[0] = bounds.upper, bounds.lower, bounds.upper
        # summed log ratio of the noise densities at y for inputs u vs u2
        log_ratio = np.sum(
            (np.abs(y - u2) - np.abs(y - u)) / plan.scales, axis=1
        )
        worst_excess = max(worst_excess, float(np.max(log_ratio) - eps))
    elapsed = time.perf_counter() - start
    ok = worst_excess <= 1e-9 and elapsed < 10.0
    report(
        3,
        ok,
        f"1e4 triples: max(log-ratio - eps)={worst_excess:.2e} (<=1e-9), "
        f"{elapsed:.2f}s (<10s)",
    )


def test_criterion_4_empirical_audit(tmp_path):
    start = time.perf_counter()
    bounds = l.ClipBounds(
        lower=np.array([0.0]), upper=np.array([4.0]), p_low=0.0, p_high=1.0
    )
    plan = l.make_noise_plan(l.sensitivity_from_bounds(bounds), l.uniform_allocation(1.0, 1))
    honest = l.monte_carlo_epsilon(
        lambda v, rng, n: l.privatize_batch(v, bounds, plan, rng, n),
        bounds.lower,
        bounds.upper,
        trials=10**6,
        bins=20,
        rng=l.make_rng(41),
        value_range=(0.0, 4.0),
    )
    honest_ok = honest.epsilon_hat <= 1.0 + honest.confidence_margin

    bounds4 = l.ClipBounds(
        lower=np.zeros(4), upper=np.full(4, 4.0), p_low=0.0, p_high=1.0
    )
    literal = l.paper_literal_noise_plan(
        l.sensitivity_from_bounds(bounds4), l.uniform_allocation(1.0, 4)
    )
    analytic_literal = l.analytic_epsilon(bounds4, literal)
    caught = l.monte_carlo_epsilon(
        lambda v, rng, n: l.privatize_batch(v, bounds4, literal, rng, n),
        bounds4.lower,
        bounds4.upper,
        trials=10**6,
        bins=20,
        rng=l.make_rng(42),
        value_range=(0.0, 4.0),
    )
    literal_ok = (
        caught.epsilon_hat - caught.confidence_margin > 1.0
        and analytic_literal == pytest.approx(16.0, rel=1e-12)
    )

    # same verdicts through the CLI surface
    z = np.vstack([np.zeros(4), np.full(4, 4.0)])
    lat, bjson = tmp_path / "z.lat", tmp_path / "b.json"
    l.write_latent_file(lat, z)
    assert cli_main(["fit-bounds", "--latents", str(lat), "--out", str(bjson)]) == 0
    common = ["audit", "--bounds", str(bjson), "--epsilon", "1.0", "--trials", "1000000",
              "--bins", "20", "--seed", "43"]
    code_pass = cli_main(common + ["--out", str(tmp_path / "ok.json")])
    code_fail = cli_main(common + ["--paper-literal", "--out", str(tmp_path / "bad.json")])
    verdicts = (
        json.loads((tmp_path / "ok.json").read_text())["verdict"],
        json.loads((tmp_path / "bad.json").read_text())["verdict"],
    )
    cli_ok = code_pass == 0 and code_fail == 3 and verdicts == ("pass", "violation")

    elapsed = time.perf_counter() - start
    ok = honest_ok and literal_ok and cli_ok and elapsed < 60.0
    report(
        4,
        ok,
        f"honest eps_hat={honest.epsilon_hat:.4f} <= 1+{honest.confidence_margin:.4f}; "
        f"literal eps_hat={caught.epsilon_hat:.4f} flagged (analytic {analytic_literal:.0f}); "
        f"CLI verdicts {verdicts}; {elapsed:.1f}s (<60s)",
    )


def test_criterion_5_sensitivity_oracle():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 51))
        m = int(rng.integers(1, 9))
        z = rng.normal(scale=rng.uniform(0.1, 10.0), size=(n, m))
        fast = l.compute_raw_sensitivity(z)
        brute = np.zeros(m)
        for i in range(n):
            for k in range(n):
                brute = np.maximum(brute, np.abs(z[i] - z[k]))
        if not np.array_equal(fast, brute):
            report(5, False, "mismatch against pairwise oracle")
    report(5, True, "100 random datasets match the O(n^2) pairwise oracle exactly")


def test_criterion_6_clipping_safety():
    rng = np.random.default_rng(6)
    bounds = random_box(rng, 5)
    plan = l.make_noise_plan(
        l.sensitivity_from_bounds(bounds), l.uniform_allocation(2.0, 5)
    )
    total = 0
    for case in range(1000):
        scale = 10.0 ** rng.integers(-2, 7)  # includes inputs far outside the box
        v = rng.normal(scale=scale, size=5)
        outs = l.privatize_batch(v, bounds, plan, l.derive_rng(600, case), 100)
        assert outs.shape == (100, 5)
        if np.any(outs < bounds.lower) or np.any(outs > bounds.upper):
            report(6, False, f"output escaped bounds for input scale {scale}")
        once = l.clip(v, bounds)
        if not np.array_equal(l.clip(once, bounds), once):
            report(6, False, "clip not idempotent")
        total += outs.shape[0]
    report(6, True, f"{total} privatized outputs inside bounds; clip idempotent")


@pytest.fixture(scope="module")
def sweep_rows(faces, codec_model, face_latents):
    bounds = l.compute_clip_bounds(face_latents, 0.10, 0.90)
    sens = l.sensitivity_from_bounds(bounds)
    start = time.perf_counter()
    rows = run_sweep(
        faces,
        codec_model,
        bounds,
        sens,
        GRID,
        repetitions=50,
        seed=SWEEP_SEED,
        allocation_for=lambda e: l.uniform_allocation(e, 16),
    )
    return rows, time.perf_counter() - start


def test_criterion_7_trend_reproduction(sweep_rows):
    rows, elapsed = sweep_rows
    ssims = [r["mean_ssim"] for r in rows]
    psnrs = [r["mean_psnr"] for r in rows]
    ssim_monotone = all(a <= b for a, b in zip(ssims, ssims[1:]))
    psnr_monotone = all(a <= b for a, b in zip(psnrs, psnrs[1:]))
    rho_ssim = float(scipy_stats.spearmanr(GRID, ssims).statistic)
    rho_psnr = float(scipy_stats.spearmanr(GRID, psnrs).statistic)
    ok = (
        ssim_monotone
        and psnr_monotone
        and rho_ssim > 0.95
        and rho_psnr > 0.95
        and elapsed < 300.0
    )
    report(
        7,
        ok,
        f"200 faces x 9 budgets x 50 reps: SSIM {ssims[0]:.3f}->{ssims[-1]:.3f} "
        f"monotone={ssim_monotone}, PSNR {psnrs[0]:.1f}->{psnrs[-1]:.1f} "
        f"monotone={psnr_monotone}, spearman=({rho_ssim:.3f}, {rho_psnr:.3f}) "
        f"(>0.95), {elapsed:.0f}s (<300s)",
    )


def test_criterion_8_clipping_robustness(faces, codec_model, face_latents):
    smallest = GRID[0]
    means = {}
    for p_low, p_high in ((0.0, 1.0), (0.25, 0.75)):
        bounds = l.compute_clip_bounds(face_latents, p_low, p_high)
        rows = run_sweep(
            faces,
            codec_model,
            bounds,
            l.sensitivity_from_bounds(bounds),
            [smallest],
            repetitions=20,
            seed=SWEEP_SEED,
            allocation_for=lambda e: l.uniform_allocation(e, 16),
        )
        means[(p_low, p_high)] = rows[0]["mean_ssim"]
    tight = means[(0.25, 0.75)]
    loose = means[(0.0, 1.0)]
    report(
        8,
        tight > loose,
        f"eps={smallest}: SSIM {tight:.4f} with 25/75 clipping > {loose:.4f} with 0/100",
    )


def test_criterion_9_codec_properties(faces, codec_model):
    gram = codec_model.basis @ codec_model.basis.T
    ortho_err = float(np.abs(gram - np.eye(codec_model.latent_dim)).max())
    rng = np.random.default_rng(9)
    ident_err = 0.0
    for _ in range(50):
        z = rng.normal(scale=4.0, size=codec_model.latent_dim)
        back = l.encode(codec_model, l.decode(codec_model, z, clamp=False))
        ident_err = max(ident_err, float(np.abs(back - z).max()))
    subset = faces[:30]
    full = l.fit_codec(subset, d=29)
    recon_err = 0.0
    for im in subset:
        recon = l.decode(full, l.encode(full, im), clamp=False)
        recon_err = max(recon_err, float(np.abs(recon - im).max()))
    ok = ortho_err < 1e-8 and ident_err < 1e-8 and recon_err < 1e-6
    report(
        9,
        ok,
        f"orthonormality={ortho_err:.2e} (<1e-8), encode(decode)={ident_err:.2e} "
        f"(<1e-8), full-rank reconstruction={recon_err:.2e} (<1e-6)",
    )


def test_criterion_10_semantics_identities():
    rng = np.random.default_rng(10)
    n = rng.normal(size=12)
    boundary = l.SemanticBoundary(normal=n / np.linalg.norm(n))
    worst = 0.0
    for _ in range(10**4):
        z = rng.normal(scale=5.0, size=12)
        alpha = float(rng.normal(scale=3.0))
        moved = l.edit(z, boundary, alpha)
        worst = max(worst, abs(l.distance(boundary, moved) - l.distance(boundary, z) - alpha))
    shift_ok = worst <= 1e-10

    worst_angle = 0.0
    for trial in range(20):
        trng = np.random.default_rng(1000 + trial)
        lo = trng.normal(size=(200, 3))
        hi = trng.normal(size=(200, 3))
        lo[:, 2] -= 2.0
        hi[:, 2] += 2.0
        fitted = l.fit_boundary(np.vstack([lo, hi]), [0] * 200 + [1] * 200)
        angle = float(np.arccos(np.clip(abs(fitted.normal[2]), -1.0, 1.0)))
        worst_angle = max(worst_angle, angle)
    angle_ok = worst_angle < 0.1
    report(
        10,
        shift_ok and angle_ok,
        f"1e4 edits: max |delta-d - alpha|={worst:.2e} (<=1e-10); planted direction "
        f"max angle={worst_angle:.3f} rad (<0.1) over 20 trials",
    )


def test_criterion_11_cli_determinism(tmp_path):
    def build(root):
        root.mkdir(parents=True, exist_ok=True)
        faces = root / "faces"
        model = root / "model.lat"
        lat = root / "z.lat"
        bjson = root / "bounds.json"
        cmds = [
            ["make-synthetic", "--count", "12", "--seed", "7", "--out", str(faces)],
            ["fit-codec", "--images", str(faces), "--latent-dim", "4", "--out", str(model)],
            ["encode", "--codec", str(model), "--images", str(faces), "--out", str(lat)],
            ["decode", "--codec", str(model), "--latents", str(lat),
             "--out", str(root / "decoded")],
            ["fit-bounds", "--latents", str(lat), "--p-low", "0.1", "--p-high", "0.9",
             "--out", str(bjson)],
            ["privatize", "--input", str(lat), "--bounds", str(bjson), "--epsilon", "8",
             "--seed", "5", "--out", str(root / "priv.lat")],
            ["privatize", "--input", str(faces), "--bounds", str(bjson), "--codec",
             str(model), "--epsilon", "8", "--seed", "5", "--out", str(root / "priv_imgs")],
            ["metrics", "--originals", str(faces), "--privatized", str(root / "priv_imgs"),
             "--codec", str(model), "--epsilon", "8",
             "--out-json", str(root / "metrics.json"), "--out-csv", str(root / "metrics.csv")],
            ["sweep", "--images", str(faces), "--codec", str(model), "--bounds", str(bjson),
             "--epsilon-grid", "4,16", "--repetitions", "2", "--seed", "5",
             "--out", str(root / "sweep.csv")],
            ["audit", "--bounds", str(bjson), "--epsilon", "1.0", "--trials", "20000",
             "--bins", "10", "--seed", "5", "--out", str(root / "audit.json")],
            ["fit-boundary", "--latents", str(lat), "--labels", str(root / "labels.csv"),
             "--out", str(root / "boundary.json")],
            ["edit", "--boundary", str(root / "boundary.json"), "--latents", str(lat),
             "--alpha", "1.5", "--out", str(root / "edited.lat")],
        ]
        for i, cmd in enumerate(cmds):
            if cmd[0] == "fit-boundary":
                z = l.read_latent_file(lat)
                labels = (z[:, 0] > np.median(z[:, 0])).astype(float).reshape(-1, 1)
                write_latent_csv(root / "labels.csv", labels)
            code = cli_main(cmd)
            assert code == 0, f"command {cmd[0]} exited {code}"
        return {
            str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }

    first = build(tmp_path / "run1")
    second = build(tmp_path / "run2")
    same_names = sorted(first) == sorted(second)
    diffs = [name for name in first if first[name] != second.get(name)]
    report(
        11,
        same_names and not diffs,
        f"{len(first)} files from 11 subcommands byte-identical across two runs"
        + (f"; differing: {diffs}" if diffs else ""),
    )
