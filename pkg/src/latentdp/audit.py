"""Privacy verification: analytic budget evaluation and empirical audit.

The analytic route evaluates the worst-case log-density ratio a noise
plan allows over the clipped box; for a correctly calibrated plan it
equals the configured budget exactly. The empirical route treats the
mechanism as a black box: it runs many trials on an adversarial input
pair, histograms one output coordinate, and estimates the largest
log-ratio of bin frequencies, with a confidence margin from Wilson
score intervals. An honest mechanism stays below budget plus margin; an
under-noised one is flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import ClipBounds
from .latent import as_vector
from .mechanism import NoisePlan, laplace_cdf, laplace_sample

MIN_TRIALS = 10_000
MIN_BIN_COUNT = 5
WILSON_Z = 4.0  # two-sided ~6e-5 per bin, ample for seed-pinned audits


@dataclass(frozen=True)
class EpsilonEstimate:
    """Empirical privacy-loss estimate from a histogram audit."""

    epsilon_hat: float
    trials: int
    bins: int
    confidence_margin: float

    def __post_init__(self):
        if self.epsilon_hat < 0 or self.confidence_margin < 0:
            raise ValueError("estimate and margin must be nonnegative")
        if self.trials < 1 or self.bins < 1:
            raise ValueError("trials and bins must be positive")


@dataclass(frozen=True)
class SamplerReport:
    """Distribution checks of the Laplace sampler against analytic truth."""

    ks_statistic: float
    mean_error: float
    var_error: float


def analytic_epsilon(bounds: ClipBounds, plan: NoisePlan) -> float:
    """Worst-case total log-density ratio of the plan over the box.

    Component j contributes width_j / scale_j, the log ratio achieved by
    inputs at opposite box corners; components with zero width
    contribute nothing (all inputs clip to one point). A zero scale on a
    component of positive width means unbounded distinguishability, so
    the result is infinity rather than a silently dropped term.
    """
    if plan.dim != bounds.dim:
        raise ValueError(f"plan dimension {plan.dim} != bounds dimension {bounds.dim}")
    widths = bounds.width()
    noiseless = (plan.scales == 0) & (widths > 0)
    if noiseless.any():
        return math.inf
    active = plan.scales > 0
    return math.fsum(widths[active] / plan.scales[active])


def two_hypothesis_success_bound(epsilon: float) -> float:
    """Best success rate for guessing between two known inputs: e^eps / (1 + e^eps)."""
    if not (np.isfinite(epsilon) and epsilon >= 0):
        raise ValueError(f"epsilon must be nonnegative and finite, got {epsilon}")
    return 1.0 / (1.0 + math.exp(-epsilon))


def monte_carlo_epsilon(
    mech,
    v,
    v_prime,
    trials: int,
    bins: int,
    rng: np.random.Generator,
    coord: int = 0,
    value_range: tuple[float, float] | None = None,
) -> EpsilonEstimate:
    """Empirical privacy loss of a black-box mechanism on one input pair.

    ``mech(input, rng, n)`` must return an (n, m) array of n independent
    outputs. One output coordinate is histogrammed over ``value_range``
    (the combined observed range when not given) with uniform bins;
    the estimate is the largest |ln(count_1 / count_2)| over bins where
    both counts reach MIN_BIN_COUNT, so empty bins cannot produce
    spurious infinities. The margin bounds the estimation error of that
    bin's ratio via Wilson score intervals at z = 4.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if not (2 <= bins <= trials // 100):
        raise ValueError(f"bins must be in [2, trials/100], got {bins}")
    a = as_vector(v)
    b = as_vector(v_prime, dim=a.size)
    if not (0 <= coord < a.size):
        raise ValueError(f"audited coordinate {coord} out of range for dimension {a.size}")
    if value_range is not None:
        lo, hi = float(value_range[0]), float(value_range[1])
        if not (lo <= hi):
            raise ValueError(f"invalid value range ({lo}, {hi})")
        for name, vec in (("v", a), ("v_prime", b)):
            if vec[coord] < lo or vec[coord] > hi:
                raise ValueError(f"{name}[{coord}] outside audited range ({lo}, {hi})")

    out1 = np.asarray(mech(a, rng, trials), dtype=np.float64)[:, coord]
    out2 = np.asarray(mech(b, rng, trials), dtype=np.float64)[:, coord]
    if value_range is None:
        lo = float(min(out1.min(), out2.min()))
        hi = float(max(out1.max(), out2.max()))

    if lo == hi:
        # all output mass at one point: indistinguishable on this coordinate
        margin = _log_ratio_margin(trials, trials, trials)[1]
        return EpsilonEstimate(
            epsilon_hat=0.0, trials=trials, bins=bins, confidence_margin=margin
        )

    edges = np.linspace(lo, hi, bins + 1)
    c1, _ = np.histogram(out1, bins=edges)
    c2, _ = np.histogram(out2, bins=edges)
    eligible = (c1 >= MIN_BIN_COUNT) & (c2 >= MIN_BIN_COUNT)
    if not eligible.any():
        raise ValueError(
            f"bin starvation: no bin reached {MIN_BIN_COUNT} counts on both inputs"
        )
    ratios = np.abs(np.log(c1[eligible].astype(float) / c2[eligible].astype(float)))
    best = int(np.argmax(ratios))
    hi_count = int(max(c1[eligible][best], c2[eligible][best]))
    lo_count = int(min(c1[eligible][best], c2[eligible][best]))
    point, margin = _log_ratio_margin(hi_count, lo_count, trials)
    return EpsilonEstimate(
        epsilon_hat=point, trials=trials, bins=bins, confidence_margin=margin
    )


def sampler_distribution_check(
    rng: np.random.Generator, lam: float, n: int
) -> SamplerReport:
    """Compare n sampler draws at scale lam against the analytic law.

    Reports the Kolmogorov-Smirnov statistic versus the exact CDF, the
    absolute error of the sample mean (target 0), and of the sample
    variance (target 2 lam^2).
    """
    if n < 100_000:
        raise ValueError(f"need at least 1e5 samples, got {n}")
    xs = np.sort(laplace_sample(rng, 0.0, lam, size=n))
    cdf = laplace_cdf(xs, 0.0, lam)
    grid = np.arange(1, n + 1) / n
    ks = float(np.max(np.maximum(np.abs(cdf - grid), np.abs(cdf - (grid - 1.0 / n)))))
    mean_error = float(abs(xs.mean()))
    var_error = float(abs(xs.var() - 2.0 * lam * lam))
    return SamplerReport(ks_statistic=ks, mean_error=mean_error, var_error=var_error)


def _wilson_interval(count: int, n: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Score interval for a binomial proportion; strictly positive lower end
    whenever count > 0."""
    phat = count / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return max(center - half, 1e-300), min(center + half, 1.0)


def _log_ratio_margin(hi_count: int, lo_count: int, trials: int) -> tuple[float, float]:
    """Point estimate and error bound for ln(p_hi / p_lo) from bin counts."""
    point = math.log(hi_count / lo_count)
    lo1, hi1 = _wilson_interval(hi_count, trials)
    lo2, hi2 = _wilson_interval(lo_count, trials)
    upper = math.log(hi1 / lo2)
    lower = math.log(lo1 / hi2)
    return point, max(upper - point, point - lower)
