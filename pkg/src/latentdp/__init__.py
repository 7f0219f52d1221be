"""Local differential privacy for latent-space image representations.

Pipeline: encode images into a latent space with a PCA codec, clip each
latent component into quantile-derived bounds, add budget-weighted
Laplace noise calibrated to the clipped widths, decode, and audit the
resulting guarantee both analytically and empirically.
"""

from .audit import (
    EpsilonEstimate,
    SamplerReport,
    analytic_epsilon,
    monte_carlo_epsilon,
    sampler_distribution_check,
    two_hypothesis_success_bound,
)
from .bounds import (
    ClipBounds,
    clip,
    clip_matrix,
    compute_clip_bounds,
    compute_raw_sensitivity,
    load_bounds,
    peak_sensitivity,
    save_bounds,
    sensitivity_from_bounds,
)
from .codec import (
    CodecModel,
    as_image,
    decode,
    encode,
    fit_codec,
    load_codec,
    make_synthetic_faces,
    save_codec,
)
from .latent import (
    FileFormatError,
    as_matrix,
    as_vector,
    read_latent_csv,
    read_latent_file,
    write_latent_csv,
    write_latent_file,
)
from .mechanism import (
    BudgetAllocation,
    BudgetLedger,
    NoisePlan,
    allocation_from_doc,
    allocation_to_doc,
    derive_rng,
    laplace_cdf,
    laplace_log_density,
    laplace_sample,
    make_allocation,
    make_noise_plan,
    make_rng,
    paper_literal_noise_plan,
    plan_from_doc,
    plan_to_doc,
    privatize,
    privatize_batch,
    privatize_matrix,
    uniform_allocation,
)
from .metrics import MetricReport, latent_distance, psnr, ssim
from .pgm import read_pgm, write_pgm
from .semantics import SemanticBoundary, distance, edit, fit_boundary

__version__ = "0.1.0"
