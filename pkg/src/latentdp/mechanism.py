"""Budget-weighted Laplace mechanism over clipped latent vectors.

The total privacy budget epsilon is split across the m latent
components by positive weights w_j with sum(w_j) = 1, so component j is
protected at level eps_j = epsilon * w_j. With per-component
sensitivity s_j (the clipped box width), component j receives Laplace
noise of scale

    lambda_j = s_j / (epsilon * w_j),

which makes each component eps_j-private; adding the per-component
budgets (they all observe the same input, so losses compose
sequentially, not in parallel) gives sum_j eps_j = epsilon for the
whole vector. Clipping the input before noise pins the sensitivity;
clipping again after noise is postprocessing and costs nothing.

A historical variant with scale s_j * w_j / epsilon is also provided;
its scale is w_j^2 times the corrected one, so component j actually
costs epsilon / w_j and the total overshoots the configured budget. The
audit module exists to demonstrate that. Nothing in the privatize path
uses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import ClipBounds, clip
from .latent import as_matrix, as_vector

# Weight vectors are accepted when their sum is within this distance of
# one, then renormalized; anything further off is a caller error.
WEIGHT_SUM_TOLERANCE = 1e-9

# Post-renormalization invariants hold to this relative precision.
SUM_INVARIANT_RTOL = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator; identical seed gives an identical stream."""
    return np.random.default_rng(int(seed))


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for a derived stream (row index, repetition).

    The (seed, *stream) tuple is hashed deterministically, so stream
    (seed, 3) is reproducible and independent of (seed, 4).
    """
    entropy = (int(seed),) + tuple(int(s) for s in stream)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def open_unit(rng: np.random.Generator, size=None):
    """Uniform draws from the open interval (0, 1).

    numpy's uniform includes 0; zeros are redrawn so downstream
    logarithms never see an endpoint.
    """
    u = rng.random(size)
    if size is None:
        while u == 0.0:
            u = rng.random()
        return u
    zeros = u == 0.0
    while zeros.any():
        u[zeros] = rng.random(int(zeros.sum()))
        zeros = u == 0.0
    return u


@dataclass(frozen=True)
class BudgetAllocation:
    """Total budget epsilon and per-component weights summing to one."""

    epsilon: float
    weights: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")
        w = as_vector(self.weights)
        if np.any(w <= 0):
            raise ValueError("all weights must be positive")
        total = math.fsum(w)
        if abs(total - 1.0) > SUM_INVARIANT_RTOL:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.size

    def per_component_epsilon(self) -> np.ndarray:
        return self.epsilon * self.weights


def make_allocation(epsilon: float, weights) -> BudgetAllocation:
    """Build an allocation, renormalizing weights that sum nearly to one.

    Weight vectors off by more than WEIGHT_SUM_TOLERANCE are rejected
    rather than silently rescaled.
    """
    w = as_vector(weights)
    if np.any(w <= 0):
        raise ValueError("all weights must be positive")
    total = math.fsum(w)
    if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
        raise ValueError(
            f"weight sum {total!r} differs from 1 by more than {WEIGHT_SUM_TOLERANCE}"
        )
    return BudgetAllocation(epsilon=epsilon, weights=w / total)


def uniform_allocation(epsilon: float, m: int) -> BudgetAllocation:
    """Split the budget evenly across m components."""
    if m < 1:
        raise ValueError(f"dimension must be positive, got {m}")
    return BudgetAllocation(epsilon=epsilon, weights=np.full(m, 1.0 / m))


@dataclass(frozen=True)
class NoisePlan:
    """Laplace scale and charged budget for each component.

    scales[j] is the noise scale lambda_j (zero for zero-sensitivity
    components, which clip to a single point and need no noise);
    per_component_epsilon[j] is the budget charged to component j, and
    the totals always add up to the configured epsilon, zero-width
    components included, so accounting never understates the spend.
    """

    scales: np.ndarray
    per_component_epsilon: np.ndarray

    def __post_init__(self):
        scales = np.asarray(self.scales, dtype=np.float64)
        eps = as_vector(self.per_component_epsilon, dim=scales.size)
        if scales.ndim != 1 or scales.size == 0:
            raise ValueError("scales must be a nonempty 1-D array")
        if not np.all(np.isfinite(scales)) or np.any(scales < 0):
            raise ValueError("scales must be finite and nonnegative")
        if np.any(eps <= 0):
            raise ValueError("per-component budgets must be positive")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "per_component_epsilon", eps)

    @property
    def dim(self) -> int:
        return self.scales.size

    @property
    def total_epsilon(self) -> float:
        return math.fsum(self.per_component_epsilon)


def make_noise_plan(sensitivity, allocation: BudgetAllocation) -> NoisePlan:
    """Scales lambda_j = s_j / (epsilon * w_j); total budget = epsilon."""
    s = as_vector(sensitivity, dim=allocation.dim)
    if np.any(s < 0):
        raise ValueError("sensitivity must be nonnegative")
    eps_j = allocation.per_component_epsilon()
    scales = np.where(s > 0, s / eps_j, 0.0)
    plan = NoisePlan(scales=scales, per_component_epsilon=eps_j)
    _check_total(plan, allocation.epsilon)
    return plan


def paper_literal_noise_plan(sensitivity, allocation: BudgetAllocation) -> NoisePlan:
    """Under-noised variant with scale s_j * w_j / epsilon, for auditing only.

    The budget it claims per component is still epsilon * w_j; the
    audit module's analytic evaluation reveals the actual cost
    (epsilon / w_j per component). Never used by privatize callers.
    """
    s = as_vector(sensitivity, dim=allocation.dim)
    if np.any(s < 0):
        raise ValueError("sensitivity must be nonnegative")
    scales = np.where(s > 0, s * allocation.weights / allocation.epsilon, 0.0)
    plan = NoisePlan(scales=scales, per_component_epsilon=allocation.per_component_epsilon())
    _check_total(plan, allocation.epsilon)
    return plan


def _check_total(plan: NoisePlan, epsilon: float) -> None:
    tol = SUM_INVARIANT_RTOL * max(1.0, abs(epsilon))
    if abs(plan.total_epsilon - epsilon) > tol:
        raise ValueError(
            f"per-component budgets sum to {plan.total_epsilon!r}, expected {epsilon!r}"
        )


def allocation_to_doc(allocation: BudgetAllocation) -> dict:
    """JSON-ready form of an allocation, for storing next to bounds."""
    return {"epsilon": allocation.epsilon, "weights": allocation.weights}


def allocation_from_doc(doc: dict) -> BudgetAllocation:
    if set(doc) != {"epsilon", "weights"}:
        raise ValueError(f"bad allocation document keys {sorted(doc)}")
    return BudgetAllocation(
        epsilon=float(doc["epsilon"]),
        weights=np.asarray(doc["weights"], dtype=np.float64),
    )


def plan_to_doc(plan: NoisePlan) -> dict:
    """JSON-ready form of a noise plan, for storing next to bounds."""
    return {
        "scales": plan.scales,
        "per_component_epsilon": plan.per_component_epsilon,
    }


def plan_from_doc(doc: dict) -> NoisePlan:
    if set(doc) != {"scales", "per_component_epsilon"}:
        raise ValueError(f"bad noise plan document keys {sorted(doc)}")
    return NoisePlan(
        scales=np.asarray(doc["scales"], dtype=np.float64),
        per_component_epsilon=np.asarray(doc["per_component_epsilon"], dtype=np.float64),
    )


def laplace_sample(rng: np.random.Generator, mu: float, lam: float, size=None):
    """Draw from Lap(mu, lam) by inverting the CDF.

    u is uniform on (-1/2, 1/2) and x = mu - lam * sign(u) * ln(1 - 2|u|).
    The open-interval uniform keeps the logarithm finite, so the sampler
    matches the analytic CDF exactly and is testable against it.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"scale must be positive and finite, got {lam}")
    u = open_unit(rng, size) - 0.5
    return mu - lam * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def laplace_log_density(x, mu, lam):
    """log of the Lap(mu, lam) density: -ln(2 lam) - |x - mu| / lam."""
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise ValueError("scale must be positive and finite")
    return -np.log(2.0 * lam) - np.abs(np.asarray(x, dtype=np.float64) - mu) / lam


def laplace_cdf(x, mu: float, lam: float):
    """Lap(mu, lam) cumulative distribution function."""
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"scale must be positive and finite, got {lam}")
    t = (np.asarray(x, dtype=np.float64) - mu) / lam
    return np.where(t < 0, 0.5 * np.exp(t), 1.0 - 0.5 * np.exp(-t))


def _laplace_noise(rng: np.random.Generator, scales: np.ndarray, size=None) -> np.ndarray:
    """Independent Lap(0, scales_j) draws; zero scale gives exact zero.

    A uniform is consumed for every component regardless of scale, so
    the stream layout does not depend on which components are
    degenerate.
    """
    shape = scales.shape if size is None else (size, scales.size)
    u = open_unit(rng, shape) - 0.5
    return -scales * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def privatize(
    v,
    bounds: ClipBounds,
    plan: NoisePlan,
    rng: np.random.Generator,
    post_clip: bool = True,
) -> np.ndarray:
    """Clip, add per-component Laplace noise, clip again.

    The pre-noise clip pins the sensitivity the plan was built for; the
    post-noise clip is postprocessing (free of budget) and keeps every
    output inside the admissible box. Disable it only to audit the raw
    noise distribution.
    """
    if plan.dim != bounds.dim:
        raise ValueError(f"plan dimension {plan.dim} != bounds dimension {bounds.dim}")
    x = clip(v, bounds)
    noisy = x + _laplace_noise(rng, plan.scales)
    return clip(noisy, bounds) if post_clip else noisy


def privatize_batch(
    v,
    bounds: ClipBounds,
    plan: NoisePlan,
    rng: np.random.Generator,
    n: int,
    post_clip: bool = True,
) -> np.ndarray:
    """n independent privatizations of one vector, as an (n, dim) array."""
    if n < 1:
        raise ValueError(f"batch size must be positive, got {n}")
    if plan.dim != bounds.dim:
        raise ValueError(f"plan dimension {plan.dim} != bounds dimension {bounds.dim}")
    x = clip(v, bounds)
    noisy = x + _laplace_noise(rng, plan.scales, size=n)
    return np.clip(noisy, bounds.lower, bounds.upper) if post_clip else noisy


def privatize_matrix(
    data,
    bounds: ClipBounds,
    plan: NoisePlan,
    seed: int,
    post_clip: bool = True,
    stream_prefix: tuple[int, ...] = (),
) -> np.ndarray:
    """Privatize every row of a dataset.

    Row i draws its noise from the derived stream (seed, *stream_prefix,
    i), so rows are independent, reproducible, and may be processed in
    parallel without sharing generator state.
    """
    z = as_matrix(data, dim=bounds.dim)
    out = np.empty_like(z)
    for i, row in enumerate(z):
        rng = derive_rng(seed, *stream_prefix, i)
        out[i] = privatize(row, bounds, plan, rng, post_clip=post_clip)
    return out


class BudgetLedger:
    """Running total of privacy budget spent on one input.

    Independent mechanism invocations on the same data compose
    sequentially: their budgets add. Charge the ledger once per
    invocation and read ``spent`` for the total.
    """

    def __init__(self):
        self._charges: list[float] = []

    def charge(self, plan_or_epsilon) -> float:
        eps = (
            plan_or_epsilon.total_epsilon
            if isinstance(plan_or_epsilon, NoisePlan)
            else float(plan_or_epsilon)
        )
        if not (np.isfinite(eps) and eps > 0):
            raise ValueError(f"charged budget must be positive, got {eps}")
        self._charges.append(eps)
        return self.spent

    @property
    def spent(self) -> float:
        return math.fsum(self._charges)

    @property
    def charges(self) -> tuple[float, ...]:
        return tuple(self._charges)
