"""Command line surface for the latent-space privatization pipeline.

Subcommands cover the full workflow: generate a reference dataset, fit
a codec, fit clipping bounds, privatize latents or images, measure
fidelity, sweep the budget grid, audit the guarantee, and edit along
semantic directions. Every subcommand is deterministic given its inputs
and seed.

Exit codes: 0 success, 1 data or runtime error, 2 usage or config
error, 3 audit verdict "violation".
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import audit as audit_mod
from . import bounds as bounds_mod
from . import codec as codec_mod
from . import mechanism as mech_mod
from . import metrics as metrics_mod
from . import pgm
from .latent import (
    MAGIC,
    FileFormatError,
    dump_json,
    format_float,
    load_json,
    read_latent_csv,
    read_latent_file,
    write_latent_file,
)
from .semantics import edit, fit_boundary, load_boundary, save_boundary

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_VIOLATION = 3

_REQUIRED = object()

DEFAULTS = {
    "epsilon": _REQUIRED,
    "weights": "uniform",
    "p_low": 0.0,
    "p_high": 1.0,
    "seed": 0,
    "width": 32,
    "height": 32,
    "latent_dim": 16,
    "trials": 100_000,
    "bins": 20,
}

_CONFIG_TYPES = {
    "epsilon": (int, float),
    "weights": (str, list),
    "p_low": (int, float),
    "p_high": (int, float),
    "seed": int,
    "width": int,
    "height": int,
    "latent_dim": int,
    "trials": int,
    "bins": int,
}


class ConfigError(Exception):
    """Bad usage or configuration; maps to exit code 2."""


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        settings = _Settings(args)
        return args.handler(args, settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


class _Settings:
    """Defaults overridden by config file, overridden by command line."""

    def __init__(self, args):
        self.config = {}
        path = getattr(args, "config", None)
        if path is not None:
            try:
                doc = load_json(path)
            except FileFormatError as exc:
                raise ConfigError(str(exc)) from None
            if not isinstance(doc, dict):
                raise ConfigError(f"{path}: config must be a JSON object")
            unknown = sorted(set(doc) - set(_CONFIG_TYPES))
            if unknown:
                raise ConfigError(f"{path}: unknown config keys {unknown}")
            for key, value in doc.items():
                expected = _CONFIG_TYPES[key]
                if isinstance(value, bool) or not isinstance(value, expected):
                    raise ConfigError(f"{path}: config key {key!r} has wrong type")
            self.config = doc
        self.args = args

    def get(self, key):
        cli = getattr(self.args, key, None)
        if cli is not None:
            return cli
        if key in self.config:
            return self.config[key]
        value = DEFAULTS[key]
        if value is _REQUIRED:
            raise ConfigError(f"missing required setting --{key.replace('_', '-')}")
        return value

    def epsilon(self) -> float:
        eps = float(self.get("epsilon"))
        if not (math.isfinite(eps) and eps > 0):
            raise ConfigError(f"epsilon must be positive and finite, got {eps}")
        return eps

    def quantiles(self) -> tuple[float, float]:
        p_low = float(self.get("p_low"))
        p_high = float(self.get("p_high"))
        if not (0.0 <= p_low <= p_high <= 1.0):
            raise ConfigError(
                f"quantile levels must satisfy 0 <= p_low <= p_high <= 1, "
                f"got ({p_low}, {p_high})"
            )
        return p_low, p_high

    def seed(self) -> int:
        seed = int(self.get("seed"))
        if not (0 <= seed < 2**64):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
        return seed

    def weight_vector(self, m: int) -> np.ndarray | None:
        """Explicit weights as an array, or None for the uniform split."""
        raw = self.get("weights")
        if isinstance(raw, str):
            if raw == "uniform":
                return None
            try:
                raw = [float(tok) for tok in raw.split(",")]
            except ValueError:
                raise ConfigError(f"cannot parse weights {raw!r}") from None
        try:
            weights = np.asarray(raw, dtype=np.float64)
        except (TypeError, ValueError):
            raise ConfigError(f"cannot parse weights {raw!r}") from None
        if weights.size != m:
            raise ConfigError(f"got {weights.size} weights for {m} components")
        return weights

    def allocation(self, m: int) -> mech_mod.BudgetAllocation:
        weights = self.weight_vector(m)
        epsilon = self.epsilon()
        try:
            if weights is None:
                return mech_mod.uniform_allocation(epsilon, m)
            return mech_mod.make_allocation(epsilon, weights)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


# -- input handling -------------------------------------------------------


def _sniff(path) -> str:
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head.startswith(MAGIC):
        return "latent"
    if head.startswith(b"P5") or head.startswith(b"P2"):
        return "pgm"
    if str(path).endswith(".csv"):
        return "csv"
    raise FileFormatError(f"{path}: not a latent file, CSV, or PGM image")


def _read_latents(path) -> np.ndarray:
    kind = _sniff(path)
    if kind == "latent":
        return read_latent_file(path)
    if kind == "csv":
        return read_latent_csv(path)
    raise FileFormatError(f"{path}: expected latent data, found a PGM image")


def _expand_images(paths) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found = sorted(p.glob("*.pgm"))
            if not found:
                raise FileFormatError(f"{p}: directory contains no .pgm files")
            files.extend(found)
        else:
            files.append(p)
    return files


def _load_images(paths) -> list[np.ndarray]:
    return [pgm.read_pgm(p) for p in _expand_images(paths)]


def _bounds_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# -- subcommand handlers ---------------------------------------------------


def _cmd_make_synthetic(args, settings: _Settings) -> int:
    faces = codec_mod.make_synthetic_faces(
        count=args.count,
        width=int(settings.get("width")),
        height=int(settings.get("height")),
        seed=settings.seed(),
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, face in enumerate(faces):
        pgm.write_pgm(out_dir / f"face_{i:04d}.pgm", face)
    print(f"wrote {len(faces)} images to {out_dir}")
    return EXIT_OK


def _cmd_fit_codec(args, settings: _Settings) -> int:
    images = _load_images(args.images)
    model = codec_mod.fit_codec(images, d=int(settings.get("latent_dim")))
    codec_mod.save_codec(args.out, model)
    print(f"wrote codec ({model.latent_dim} components) to {args.out}")
    return EXIT_OK


def _cmd_encode(args, settings: _Settings) -> int:
    model = codec_mod.load_codec(args.codec)
    images = _load_images(args.images)
    z = np.stack([codec_mod.encode(model, im) for im in images])
    write_latent_file(args.out, z)
    print(f"wrote {z.shape[0]}x{z.shape[1]} latents to {args.out}")
    return EXIT_OK


def _cmd_decode(args, settings: _Settings) -> int:
    model = codec_mod.load_codec(args.codec)
    z = _read_latents(args.latents)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, row in enumerate(z):
        pgm.write_pgm(out_dir / f"img_{i:04d}.pgm", codec_mod.decode(model, row))
    print(f"wrote {z.shape[0]} images to {out_dir}")
    return EXIT_OK


def _cmd_fit_bounds(args, settings: _Settings) -> int:
    p_low, p_high = settings.quantiles()
    z = _read_latents(args.latents)
    bnds = bounds_mod.compute_clip_bounds(z, p_low, p_high)
    bounds_mod.save_bounds(args.out, bnds)
    print(f"wrote bounds for {bnds.dim} components to {args.out}")
    return EXIT_OK


def _cmd_privatize(args, settings: _Settings) -> int:
    bnds, sensitivity = bounds_mod.load_bounds(args.bounds)
    allocation = settings.allocation(bnds.dim)
    plan = mech_mod.make_noise_plan(sensitivity, allocation)
    seed = settings.seed()
    sidecar = {
        "epsilon": allocation.epsilon,
        "weights": allocation.weights,
        "bounds_sha256": _bounds_digest(args.bounds),
        "seed": seed,
    }

    paths = _expand_images(args.input)  # directories hold PGMs; files pass through
    kinds = {_sniff(p) for p in paths}
    if kinds <= {"latent", "csv"}:
        if len(paths) != 1:
            raise ConfigError("latent mode takes exactly one input file")
        z = _read_latents(paths[0])
        private = mech_mod.privatize_matrix(z, bnds, plan, seed)
        write_latent_file(args.out, private)
        dump_json(str(args.out) + ".json", sidecar)
        print(f"wrote {private.shape[0]} privatized latents to {args.out}")
        return EXIT_OK
    if kinds == {"pgm"}:
        if args.codec is None:
            raise ConfigError("privatizing images requires --codec")
        model = codec_mod.load_codec(args.codec)
        images = [pgm.read_pgm(p) for p in paths]
        z = np.stack([codec_mod.encode(model, im) for im in images])
        private = mech_mod.privatize_matrix(z, bnds, plan, seed)
        # from here on only the noise-added latents are touched
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, row in enumerate(private):
            pgm.write_pgm(out_dir / f"priv_{i:04d}.pgm", codec_mod.decode(model, row))
        dump_json(out_dir / "sidecar.json", sidecar)
        print(f"wrote {private.shape[0]} privatized images to {out_dir}")
        return EXIT_OK
    raise ConfigError("inputs mix latent data and images; privatize one kind per run")


def _cmd_metrics(args, settings: _Settings) -> int:
    originals = _load_images(args.originals)
    privatized = _load_images(args.privatized)
    if len(originals) != len(privatized):
        raise ValueError(
            f"{len(originals)} originals vs {len(privatized)} privatized images"
        )
    model = codec_mod.load_codec(args.codec) if args.codec else None
    reports = []
    for a, b in zip(originals, privatized):
        if model is not None:
            reports.append(
                metrics_mod.compare(
                    a, b, z=codec_mod.encode(model, a), z_private=codec_mod.encode(model, b)
                )
            )
        else:
            reports.append(metrics_mod.compare(a, b))
    epsilon = float(args.epsilon) if args.epsilon is not None else math.nan
    dump_json(args.out_json, {"pairs": [r.to_doc() for r in reports]})
    with open(args.out_csv, "w", newline="") as fh:
        fh.write("epsilon,mean_ssim,mean_psnr\n")
        fh.write(metrics_mod.aggregate_csv_row(epsilon, reports))
        fh.write("\n")
    print(f"wrote {len(reports)} pair reports to {args.out_json}")
    return EXIT_OK


def run_sweep(images, model, bnds, sensitivity, grid, repetitions, seed, allocation_for):
    """Privatize every image repeatedly at each budget; aggregate metrics.

    Noise streams are derived from (seed, repetition, image index) only,
    so every budget value, and every clipping setting audited on the
    same seed, sees identical underlying uniform draws; differences in
    the aggregates then come from the noise scale, not resampling.
    """
    if not grid:
        raise ValueError("epsilon grid must be nonempty")
    if repetitions < 1:
        raise ValueError(f"repetitions must be positive, got {repetitions}")
    latents = [codec_mod.encode(model, im) for im in images]
    rows = []
    for eps in grid:
        plan = mech_mod.make_noise_plan(sensitivity, allocation_for(eps))
        ssims, psnrs, l1s = [], [], []
        for rep in range(repetitions):
            for i, (image, z) in enumerate(zip(images, latents)):
                rng = mech_mod.derive_rng(seed, rep, i)
                z_priv = mech_mod.privatize(z, bnds, plan, rng)
                regen = codec_mod.decode(model, z_priv)
                ssims.append(metrics_mod.ssim(image, regen))
                psnrs.append(metrics_mod.psnr(image, regen))
                l1s.append(metrics_mod.latent_distance(z, z_priv)[0])
        finite = [p for p in psnrs if math.isfinite(p)]
        rows.append(
            {
                "epsilon": float(eps),
                "mean_ssim": float(np.mean(ssims)),
                "mean_psnr": float(np.mean(finite)) if finite else math.inf,
                "mean_latent_l1": float(np.mean(l1s)),
            }
        )
    return rows


def _cmd_sweep(args, settings: _Settings) -> int:
    try:
        grid = [float(tok) for tok in args.epsilon_grid.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse epsilon grid {args.epsilon_grid!r}") from None
    if any(not (math.isfinite(e) and e > 0) for e in grid):
        raise ConfigError("epsilon grid values must be positive and finite")
    if args.repetitions < 1:
        raise ConfigError(f"repetitions must be positive, got {args.repetitions}")
    model = codec_mod.load_codec(args.codec)
    images = _load_images(args.images)
    if args.bounds is not None:
        bnds, sensitivity = bounds_mod.load_bounds(args.bounds)
    else:
        p_low, p_high = settings.quantiles()
        z = np.stack([codec_mod.encode(model, im) for im in images])
        bnds = bounds_mod.compute_clip_bounds(z, p_low, p_high)
        sensitivity = bounds_mod.sensitivity_from_bounds(bnds)

    weights = settings.weight_vector(bnds.dim)

    def allocation_for(eps):
        if weights is None:
            return mech_mod.uniform_allocation(eps, bnds.dim)
        return mech_mod.make_allocation(eps, weights)

    rows = run_sweep(
        images,
        model,
        bnds,
        sensitivity,
        grid,
        args.repetitions,
        settings.seed(),
        allocation_for,
    )
    with open(args.out, "w", newline="") as fh:
        fh.write("epsilon,mean_ssim,mean_psnr,mean_latent_l1\n")
        for row in rows:
            psnr_text = (
                "inf" if math.isinf(row["mean_psnr"]) else format_float(row["mean_psnr"])
            )
            fh.write(
                f"{format_float(row['epsilon'])},{format_float(row['mean_ssim'])},"
                f"{psnr_text},{format_float(row['mean_latent_l1'])}\n"
            )
    print(f"wrote {len(rows)} sweep rows to {args.out}")
    return EXIT_OK


def _cmd_audit(args, settings: _Settings) -> int:
    bnds, sensitivity = bounds_mod.load_bounds(args.bounds)
    allocation = settings.allocation(bnds.dim)
    if args.paper_literal:
        plan = mech_mod.paper_literal_noise_plan(sensitivity, allocation)
        scale_mode = "paper_literal"
    else:
        plan = mech_mod.make_noise_plan(sensitivity, allocation)
        scale_mode = "corrected"
    trials = int(settings.get("trials"))
    bins = int(settings.get("bins"))

    def mech(v, rng, n):
        return mech_mod.privatize_batch(v, bnds, plan, rng, n)

    estimate = audit_mod.monte_carlo_epsilon(
        mech,
        bnds.lower,
        bnds.upper,
        trials=trials,
        bins=bins,
        rng=mech_mod.make_rng(settings.seed()),
        coord=0,
        value_range=(float(bnds.lower[0]), float(bnds.upper[0])),
    )
    analytic = audit_mod.analytic_epsilon(bnds, plan)
    configured = allocation.epsilon
    violated = (
        analytic > configured * (1.0 + 1e-9)
        or estimate.epsilon_hat - estimate.confidence_margin > configured
    )
    report = {
        "epsilon": configured,
        "scale_mode": scale_mode,
        "analytic_epsilon": "inf" if math.isinf(analytic) else analytic,
        "epsilon_hat": estimate.epsilon_hat,
        "margin": estimate.confidence_margin,
        "trials": estimate.trials,
        "bins": estimate.bins,
        "two_hypothesis_success_bound": audit_mod.two_hypothesis_success_bound(configured),
        "verdict": "violation" if violated else "pass",
    }
    dump_json(args.out, report)
    print(f"audit verdict: {report['verdict']} (report in {args.out})")
    return EXIT_VIOLATION if violated else EXIT_OK


def _cmd_fit_boundary(args, settings: _Settings) -> int:
    z = _read_latents(args.latents)
    raw = read_latent_csv(args.labels)
    if raw.shape[1] != 1:
        raise ValueError(f"labels file must have one column, got {raw.shape[1]}")
    labels = raw[:, 0]
    if not np.all(np.isin(labels, (0.0, 1.0))):
        raise ValueError("labels must be 0 or 1")
    if labels.size != z.shape[0]:
        raise ValueError(f"{labels.size} labels for {z.shape[0]} latents")
    boundary = fit_boundary(z, labels.astype(int))
    save_boundary(args.out, boundary)
    print(f"wrote boundary for {boundary.dim} components to {args.out}")
    return EXIT_OK


def _cmd_edit(args, settings: _Settings) -> int:
    boundary = load_boundary(args.boundary)
    z = _read_latents(args.latents)
    if z.shape[1] != boundary.dim:
        raise ValueError(
            f"latent dimension {z.shape[1]} != boundary dimension {boundary.dim}"
        )
    if not math.isfinite(args.alpha):
        raise ConfigError(f"alpha must be finite, got {args.alpha}")
    edited = np.stack([edit(row, boundary, args.alpha) for row in z])
    write_latent_file(args.out, edited)
    print(f"wrote {edited.shape[0]} edited latents to {args.out}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; CLI flags override it")
    common.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")

    parser = argparse.ArgumentParser(
        prog="latentdp",
        description="Privatize latent-space image representations under epsilon-LDP",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "make-synthetic", parents=[common], help="generate a synthetic face dataset"
    )
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--out", required=True, help="output directory for PGM files")
    p.set_defaults(handler=_cmd_make_synthetic)

    p = sub.add_parser("fit-codec", parents=[common], help="fit the PCA codec")
    p.add_argument("--images", nargs="+", required=True, help="PGM files or directories")
    p.add_argument("--latent-dim", dest="latent_dim", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_fit_codec)

    p = sub.add_parser("encode", parents=[common], help="images to latent vectors")
    p.add_argument("--codec", required=True)
    p.add_argument("--images", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="latent vectors to images")
    p.add_argument("--codec", required=True)
    p.add_argument("--latents", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_decode)

    p = sub.add_parser("fit-bounds", parents=[common], help="fit clipping bounds")
    p.add_argument("--latents", required=True)
    p.add_argument("--p-low", dest="p_low", type=float)
    p.add_argument("--p-high", dest="p_high", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_fit_bounds)

    p = sub.add_parser(
        "privatize", parents=[common], help="apply the Laplace mechanism"
    )
    p.add_argument("--input", nargs="+", required=True, help="latent file or PGM images")
    p.add_argument("--bounds", required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--weights")
    p.add_argument("--codec")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_privatize)

    p = sub.add_parser("metrics", parents=[common], help="fidelity of image pairs")
    p.add_argument("--originals", nargs="+", required=True)
    p.add_argument("--privatized", nargs="+", required=True)
    p.add_argument("--codec", help="include latent distances")
    p.add_argument("--epsilon", type=float, help="stamped into the aggregate CSV")
    p.add_argument("--out-json", dest="out_json", required=True)
    p.add_argument("--out-csv", dest="out_csv", required=True)
    p.set_defaults(handler=_cmd_metrics)

    p = sub.add_parser("sweep", parents=[common], help="budget grid vs fidelity")
    p.add_argument("--images", nargs="+", required=True)
    p.add_argument("--codec", required=True)
    p.add_argument("--bounds", help="bounds JSON; fitted from the images when absent")
    p.add_argument("--epsilon-grid", dest="epsilon_grid", required=True)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--p-low", dest="p_low", type=float)
    p.add_argument("--p-high", dest="p_high", type=float)
    p.add_argument("--weights")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("audit", parents=[common], help="verify the privacy guarantee")
    p.add_argument("--bounds", required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--weights")
    p.add_argument("--trials", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument(
        "--paper-literal",
        dest="paper_literal",
        action="store_true",
        help="audit the under-noised historical scale instead of the corrected one",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_audit)

    p = sub.add_parser("fit-boundary", parents=[common], help="fit a semantic direction")
    p.add_argument("--latents", required=True)
    p.add_argument("--labels", required=True, help="single-column CSV of 0/1")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_fit_boundary)

    p = sub.add_parser("edit", parents=[common], help="move latents along a boundary")
    p.add_argument("--boundary", required=True)
    p.add_argument("--latents", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_edit)

    return parser


if __name__ == "__main__":
    sys.exit(main())
