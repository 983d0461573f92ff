"""Batch front end: ``infoloss run --config cfg.json --out DIR``.

A config holds exactly one mode block (channel, pca, ib, estimate or
selftest).  Each run writes a CSV report plus ``manifest.json``; only the
manifest carries timestamps, so identical configs give identical reports.

Exit status: 0 success, 2 invalid config or unreadable path, 3 numerical
failure (singular covariance, non-convergence, failed self-test).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .channel_lab import (
    AdditiveChannel,
    CONVERGENCE_TOL,
    Quantizer,
    grid_loss_report,
    input_mutual_information,
    output_mutual_information,
    quantizer_relevant_loss,
    uniform_closed_forms,
)
from .estimators import SampleSet, SourceSpec, conditional_divergence_J, knn_entropy, thm1_hypothesis_check
from .exceptions import NumericalError, ValidationError
from .ib_cluster import ClusteringState, ObjectiveParams, agglomerative_enhance, enhancement_objectives
from .info_core import JointDistribution
from .pca_gauss import (
    LinearGaussianModel,
    best_coordinate_subset,
    eigen_bound,
    gaussian_relevant_loss,
    iid_gaussian_bound,
    is_spherical,
    pca_decompose,
)

MODES = ("channel", "pca", "ib", "estimate", "selftest")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
PCA_TOL = 1e-8
DEFAULT_RESOLUTION = 4096


def _schema() -> dict:
    return json.loads(resources.files("infoloss").joinpath("schemas/analysis_config.schema.json").read_text())


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    return doc


def validate_config(doc, mode_hint: str | None = None) -> str:
    """Check a config document and return its mode."""
    import jsonschema

    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"config invalid at {where}: {exc.message}") from None
    blocks = [m for m in MODES if m in doc]
    if len(blocks) != 1:
        raise ValidationError(f"config needs exactly one mode block, found {blocks or 'none'}")
    mode = blocks[0]
    for declared in (doc.get("mode"), mode_hint):
        if declared is not None and declared != mode:
            raise ValidationError(f"mode {declared!r} does not match the {mode!r} block")
    if mode == "estimate" and doc.get("seed") is None:
        raise ValidationError("estimate mode requires a seed")
    return mode


# ---------------------------------------------------------------------------
# Mode runners: each returns {file name: (header, rows)} and a summary dict
# ---------------------------------------------------------------------------


def run_channel(block: dict, seed, base: Path):
    family = block.get("noise", "uniform")
    kwargs = {k: tuple(block[k]) for k in ("signal_values", "priors") if k in block}
    ch = AdditiveChannel(family, block["param"], **kwargs)
    resolution = int(block.get("resolution", DEFAULT_RESOLUTION))
    q = Quantizer(tuple(block.get("thresholds", (0.0,))))
    rows = [
        ("input_mutual_information", input_mutual_information(ch), None, None, None, None),
        ("output_mutual_information", output_mutual_information(ch, q), None, None, None, None),
    ]
    grid = grid_loss_report(ch, "quantizer", resolution, "S", quantizer=q)
    rows.append(
        ("quantizer_relevant_loss", quantizer_relevant_loss(ch, q), grid.estimate, resolution, grid.converged,
         CONVERGENCE_TOL)
    )
    antipodal = "signal_values" not in block and "priors" not in block
    closed = uniform_closed_forms(ch.noise_param) if family == "uniform" and antipodal else None
    analytic = {}
    if closed is not None:
        analytic = {
            ("sign", "S"): closed.sign_loss,
            ("magnitude", "S"): closed.magnitude_relevant,
            ("magnitude", "X-given-S"): closed.magnitude_irrelevant,
            ("magnitude", "total"): closed.magnitude_total,
        }
    for tag in block.get("maps", ()):
        for rel in ("S", "N", "X-given-S", "X-given-N", "total"):
            est = grid_loss_report(ch, tag, resolution, rel)
            rows.append((f"{tag}:{rel}", analytic.get((tag, rel)), est.estimate, resolution, est.converged,
                         CONVERGENCE_TOL))
    header = ("quantity", "analytic_value", "grid_estimate", "resolution", "converged", "tolerance")
    return {"report.csv": (header, rows)}, {"units": "bits"}


def run_pca(block: dict, seed, base: Path):
    model = LinearGaussianModel(block["signal_cov"], block["noise_cov"])
    ms = block.get("M", list(range(1, model.dim)))
    ms = [ms] if isinstance(ms, int) else list(ms)
    if not ms:
        raise ValidationError("M list is empty")
    spherical = is_spherical(model.noise_cov) is not None
    rows = []
    for m in ms:
        loss = gaussian_relevant_loss(model, m)
        thm1 = iid_gaussian_bound(model, m) if spherical else None
        thm2 = eigen_bound(model, m) if model.signal_rank() <= m else None
        subset, subset_loss = best_coordinate_subset(model, m)
        rows.append((m, loss, thm1, thm2, ";".join(f"X{i + 1}" for i in subset), subset_loss, PCA_TOL))
    header = ("M", "loss_nats", "thm1_bound", "thm2_bound", "best_subset", "best_subset_loss", "tolerance")
    eig = pca_decompose(model.obs_cov, ms[0]).eigenvalues
    return {"report.csv": (header, rows)}, {"units": "nats", "eigenvalues": [float(v) for v in eig]}


def _load_joint(block: dict, base: Path) -> JointDistribution:
    if ("joint" in block) == ("joint_path" in block):
        raise ValidationError("ib block needs exactly one of 'joint' or 'joint_path'")
    if "joint" in block:
        return JointDistribution.from_dict(block["joint"])
    path = Path(block["joint_path"])
    path = path if path.is_absolute() else base / path
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read joint distribution {path}: {exc.strerror}") from None
    try:
        return JointDistribution.from_json(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"joint distribution file is not valid JSON: {exc}") from None


def run_ib(block: dict, seed, base: Path):
    joint = _load_joint(block, base)
    if joint.n_variables != 2:
        raise ValidationError("ib mode needs a joint distribution over (S, X)")
    budget = math.inf if block["budget"] == "inf" else float(block["budget"])
    state, trace = agglomerative_enhance(joint, budget)
    params = ObjectiveParams(
        beta=float(block.get("beta", 1.0)),
        gamma=float(block.get("gamma", 0.0)),
        alpha=float(block.get("alpha", 1.0)),
        budget=budget,
    )
    obj = enhancement_objectives(joint, state, params)
    clusters = [(x, int(state.labels(x))) for x in range(state.input_size)]
    steps = [(i + 1, s.pair[0], s.pair[1], s.increment, s.cumulative, budget) for i, s in enumerate(trace)]
    summary = {
        "units": "bits",
        "num_clusters": state.num_clusters,
        "relevant_loss": obj.relevant_loss,
        "irrelevant_loss": obj.irrelevant_loss,
        "ib": obj.ib,
        "ibsi": obj.ibsi,
        "delta_p": obj.delta_p,
    }
    return {
        "report.csv": (("x_symbol", "cluster_id"), clusters),
        "trace.csv": (("step", "cluster_i", "cluster_j", "increment", "cumulative", "budget"), steps),
    }, summary


def _source(doc: dict) -> SourceSpec:
    return SourceSpec(doc["family"], int(doc.get("latent_dim", 1)), dict(doc.get("params", {})), doc.get("mixing"))


def run_estimate(block: dict, seed, base: Path):
    n, k = int(block["n"]), int(block.get("k", 4))
    header = ("quantity", "value", "stderr", "n", "k", "seed")
    outputs = {}
    if "model" in block:
        mb = block["model"]
        model = LinearGaussianModel(mb["signal_cov"], mb["noise_cov"])
        noise = _source(block["noise"]) if "noise" in block else None
        res = thm1_hypothesis_check(model, _source(block["source"]), int(mb["M"]), n, seed, noise=noise, k=k)
        rows = [
            ("J_noise", res.J_noise, None, n, k, seed),
            ("J_output", res.J_output, None, n, k, seed),
            ("margin", res.margin, res.stderr, n, k, seed),
            ("satisfied", res.satisfied, None, n, k, seed),
            ("conclusive", res.conclusive, None, n, k, seed),
        ]
        outputs["report.csv"] = (header, rows)
        return outputs, {"units": "nats"}
    samples = _source(block["source"]).sample(n, seed)
    rows = [("knn_entropy", knn_entropy(samples, k), None, n, k, seed)]
    if "x_dims" in block:
        rows.append(("conditional_divergence_J", conditional_divergence_J(samples, int(block["x_dims"]), k),
                     None, n, k, seed))
    outputs["report.csv"] = (header, rows)
    if block.get("dump_samples"):
        outputs["samples.csv"] = SampleSet.to_csv, samples
    return outputs, {"units": "nats"}


def run_selftest(block: dict, seed, base: Path):
    from ._selftest import run_selftest as sweep

    results = sweep(seed=0 if seed is None else seed, instances=int(block.get("instances", 200)))
    rows = [(r.name, r.instances, r.max_violation, r.tolerance, r.passed) for r in results]
    failed = [r.name for r in results if not r.passed]
    header = ("check", "instances", "max_violation", "tolerance", "passed")
    return {"report.csv": (header, rows)}, {"failed": failed}


RUNNERS = {
    "channel": run_channel,
    "pca": run_pca,
    "ib": run_ib,
    "estimate": run_estimate,
    "selftest": run_selftest,
}


def _versions() -> dict:
    import scipy
    import sklearn

    return {
        "infoloss": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
    }


def run_config(doc: dict, out_dir=None, seed=None, mode_hint=None, base: Path | None = None) -> int:
    """Validate, dispatch and write reports.  Returns the exit status."""
    started = time.perf_counter()
    stamp = datetime.now(timezone.utc).isoformat()
    if seed is not None:
        doc = {**doc, "seed": seed}
    mode = validate_config(doc, mode_hint)
    out = out_dir or doc.get("output_path")
    if out is None:
        raise ValidationError("no output directory: pass --out or set output_path")
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out}: {exc.strerror}") from None
    outputs, summary = RUNNERS[mode](doc[mode], doc.get("seed"), base or Path.cwd())
    try:
        for name, (first, second) in outputs.items():
            if callable(first):
                first(second, out / name)
            else:
                write_csv(out / name, first, second)
        manifest = {
            "mode": mode,
            "config": doc,
            "seed": doc.get("seed"),
            "versions": _versions(),
            "started_at": stamp,
            "wall_time_s": time.perf_counter() - started,
            "outputs": sorted(outputs),
            "summary": summary,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot write reports to {out}: {exc.strerror}") from None
    if mode == "selftest" and summary["failed"]:
        raise NumericalError(f"self-test checks failed: {', '.join(summary['failed'])}")
    return EXIT_OK


GALLERY = {
    "channel_sign_a2": {"channel": {"noise": "uniform", "param": 2.0, "thresholds": [0.0], "maps": ["sign", "magnitude"]}},
    "channel_ternary_a2": {"channel": {"noise": "uniform", "param": 2.0, "thresholds": [-1.0, 1.0]}},
    "pca_three_sensors": {
        "pca": {"signal_cov": [[1, 1, 0], [1, 2, 1], [0, 1, 1]], "noise_cov": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "M": 2}
    },
    "pca_unequal_noise": {
        "pca": {"signal_cov": [[1, 0, 0], [0, 1, 0], [0, 0, 0]], "noise_cov": [[1, 0, 0], [0, 2, 0], [0, 0, 3]], "M": 2}
    },
    "ib_duplicate_symbols": {
        "ib": {
            "budget": 0.0,
            "joint": {
                "variables": [{"name": "S", "size": 2}, {"name": "X", "size": 4}],
                "mass": [0.1, 0.1, 0.05, 0.1, 0.3, 0.05, 0.25, 0.05],
            },
        }
    },
    "estimate_gaussian_entropy": {"seed": 1, "estimate": {"source": {"family": "gaussian"}, "n": 10000}},
}


def run_gallery(out_dir) -> int:
    """Write and run the golden-example configs, one subdirectory each."""
    out = Path(out_dir)
    for name, cfg in GALLERY.items():
        target = out / name
        target.mkdir(parents=True, exist_ok=True)
        (target / "config.json").write_text(json.dumps(cfg, indent=2) + "\n", encoding="utf-8")
        run_config(cfg, target)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infoloss", description="Relevant information loss analyses.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + MODES:
        p = sub.add_parser(name, help="run a config" if name == "run" else f"run a config in {name} mode")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output directory (overrides output_path)")
        p.add_argument("--seed", type=int, help="seed (overrides the config)")
        p.add_argument("--format", choices=("csv",), default="csv", help="report format")
    g = sub.add_parser("gallery", help="write and run the golden-example configs")
    g.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gallery":
            return run_gallery(args.out)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ValidationError("--seed must be an unsigned 64-bit integer")
        doc = load_config(args.config)
        hint = None if args.command == "run" else args.command
        return run_config(doc, args.out, args.seed, hint, base=Path(args.config).resolve().parent)
    except ValidationError as exc:
        print(f"infoloss: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"infoloss: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
