"""End-to-end spectral-spatial classification with Monte Carlo runs and sweeps.

Per run: split -> train ELM / kernel ELM on normalized spectra -> softmax
probabilities -> clamp training nodes -> loopy BP on the masked grid ->
per-node argmax of the beliefs. Pixel-only and spatial metrics are both
reported so the gain from the spatial stage is visible.
"""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field, replace
import csv
import io
import logging
from pathlib import Path
import time

import numpy as np

from hsilbp import elm_kernel, elm_linear, formats, metrics
from hsilbp._seeding import derive_seed
from hsilbp.errors import ConfigError, HSIError, StageError
from hsilbp.hsidata import LabelField, extract_samples, normalize, one_hot, stratified_split
from hsilbp.mrf_lbp import assemble_unaries, build_graph, lbp_run, make_pairwise, mam_decide

log = logging.getLogger(__name__)


@contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except (HSIError, ValueError, ArithmeticError, IndexError, OSError) as exc:
        raise StageError(name, exc) from exc


def run_seeds(seed, run):
    """(split seed, hidden-layer seed) for Monte Carlo run ``run``."""
    base = int(seed) ^ int(run)
    return derive_seed(base, 0), derive_seed(base, 1)


@dataclass
class SpectralResult:
    """Classifier output for one run, reusable across spatial settings."""

    run: int
    split: object
    probs: np.ndarray  # (num_nodes, M), aligned with graph nodes
    pixel_map: LabelField
    seconds: dict


@dataclass
class RunResult:
    spectral: SpectralResult
    spatial_map: LabelField
    beliefs: object
    pixel_report: metrics.RunReport
    spatial_report: metrics.RunReport


@dataclass
class PipelineResult:
    config: object
    runs: list
    summary: dict = field(default_factory=dict)

    @property
    def pixel_reports(self):
        return [r.pixel_report for r in self.runs]

    @property
    def spatial_reports(self):
        return [r.spatial_report for r in self.runs]


def load_inputs(config):
    if not config.cube or not config.labels:
        raise ConfigError("both cube and labels paths are required")
    with stage("load"):
        cube = formats.read_cube(config.cube)
        labels = formats.read_labels(config.labels)
    return cube, labels


def _fit_scores(config, train_x, train_y, all_x, M, hidden_seed):
    Y1 = one_hot(train_y, M)
    if config.classifier == "linear":
        model = elm_linear.fit(train_x, Y1, config.hidden_nodes, config.activation, config.ridge, hidden_seed)
        return elm_linear.predict(model, all_x)
    kernel = elm_kernel.KernelSpec("gaussian", config.kernel_sigma)
    model = elm_kernel.train_kelm(train_x, Y1, kernel, config.kernel_c)
    return elm_kernel.predict_kelm(model, all_x)


def spectral_stage(config, norm_cube, labels, graph, run):
    """Split, train and predict probabilities for every graph node."""
    split_seed, hidden_seed = run_seeds(config.seed, run)
    M = labels.num_classes
    seconds = {}
    with stage("split"):
        if config.train_counts is not None:
            split = stratified_split(labels, counts=config.train_counts, seed=split_seed)
        else:
            split = stratified_split(labels, fraction=config.train_fraction, seed=split_seed)
    with stage("train"):
        t0 = time.perf_counter()
        train_x = extract_samples(norm_cube, split.train_indices)
        all_x = extract_samples(norm_cube, graph.node_coords)
        scores = _fit_scores(config, train_x, labels.at(split.train_indices), all_x, M, hidden_seed)
        probs = elm_linear.scores_to_probs(scores, config.temperature)
        seconds["spectral"] = time.perf_counter() - t0
    pixel = np.zeros(labels.shape, dtype=np.int64)
    pixel[graph.node_coords[:, 0], graph.node_coords[:, 1]] = np.argmax(probs, axis=1) + 1
    tr = split.train_indices
    pixel[tr[:, 0], tr[:, 1]] = labels.at(tr)
    return SpectralResult(run, split, probs, LabelField(pixel, M), seconds)


def spatial_stage(config, labels, graph, spectral, mu=None):
    mu = config.mu if mu is None else mu
    with stage("lbp"):
        t0 = time.perf_counter()
        tr = spectral.split.train_indices
        unary = assemble_unaries(spectral.probs, graph, tr, labels.at(tr), config.clamp_eps)
        pairwise = make_pairwise(mu, labels.num_classes)
        beliefs = lbp_run(graph, unary, pairwise, config.max_iters, config.tol, config.damping)
        spatial = mam_decide(beliefs, graph, labels.shape)
        elapsed = time.perf_counter() - t0
    return spatial, beliefs, elapsed


def _reports(config, labels, spectral, spatial_map, beliefs, lbp_seconds, mu):
    test = spectral.split.test_indices
    params = {"mu": mu, "lbp_iterations": beliefs.iterations, "lbp_max_delta": beliefs.max_delta,
              "lbp_converged": beliefs.converged}
    with stage("metrics"):
        px = metrics.evaluate(labels, spectral.pixel_map, test, labels.num_classes, run=spectral.run, stage="pixel",
                              timing={"spectral": spectral.seconds["spectral"]}, parameters=params)
        sp = metrics.evaluate(labels, spatial_map, test, labels.num_classes, run=spectral.run, stage="spatial",
                              timing={"spectral": spectral.seconds["spectral"], "lbp": lbp_seconds},
                              parameters=params)
    return px, sp


def _summary(runs):
    return {
        "pixel": metrics.aggregate([r.pixel_report for r in runs]),
        "spatial": metrics.aggregate([r.spatial_report for r in runs]),
    }


def run_pipeline(config, cube=None, labels=None, out_dir=None):
    """Execute ``config.runs`` Monte Carlo runs; optionally write reports and maps to ``out_dir``."""
    config.validate()
    if cube is None or labels is None:
        cube, labels = load_inputs(config)
    with stage("normalize"):
        norm = normalize(cube)
    with stage("graph"):
        if labels.shape != norm.shape[:2]:
            raise ValueError(f"labels {labels.shape} do not match cube {norm.shape[:2]}")
        graph = build_graph(labels, config.connectivity)
    runs = []
    for run in range(config.runs):
        spectral = spectral_stage(config, norm, labels, graph, run)
        spatial, beliefs, lbp_s = spatial_stage(config, labels, graph, spectral)
        px, sp = _reports(config, labels, spectral, spatial, beliefs, lbp_s, config.mu)
        log.info("run %d: pixel OA %.4f, spatial OA %.4f (%d LBP iterations)", run, px.oa, sp.oa, beliefs.iterations)
        runs.append(RunResult(spectral, spatial, beliefs, px, sp))
    result = PipelineResult(config, runs, _summary(runs))
    if out_dir is not None:
        write_outputs(result, labels, out_dir)
    return result


# -- sweeps ---------------------------------------------------------------------

SWEEP_HEADER = ["value", "stage", "oa_mean", "oa_std", "aa_mean", "aa_std", "kappa_mean", "kappa_std"]


def _sweep_rows(value, summary):
    rows = []
    for stage_name in ("pixel", "spatial"):
        agg = summary[stage_name]
        rows.append({"value": value, "stage": stage_name,
                     **{f"{m}_{s}": agg[m][i] for m in ("oa", "aa", "kappa") for i, s in enumerate(("mean", "std"))}})
    return rows


def sweep_hidden_nodes(config, L_values, cube=None, labels=None):
    """Aggregate metrics per hidden-layer size; seeds are shared across sizes."""
    L_values = list(L_values)
    if not L_values:
        raise ConfigError("empty hidden-node list")
    if cube is None or labels is None:
        cube, labels = load_inputs(config)
    rows = []
    for L in L_values:
        result = run_pipeline(replace(config, hidden_nodes=int(L)), cube, labels)
        rows.extend(_sweep_rows(int(L), result.summary))
    return rows


def sweep_mu(config, mu_values, cube=None, labels=None):
    """Aggregate metrics per smoothness value; classifier outputs are computed once per run and reused."""
    mu_values = [float(m) for m in mu_values]
    if not mu_values:
        raise ConfigError("empty mu list")
    config.validate()
    if cube is None or labels is None:
        cube, labels = load_inputs(config)
    norm = normalize(cube)
    graph = build_graph(labels, config.connectivity)
    cached = [spectral_stage(config, norm, labels, graph, run) for run in range(config.runs)]
    rows = []
    for mu in mu_values:
        if mu < 0:
            raise ConfigError("mu must be >= 0")
        runs = []
        for spectral in cached:
            spatial, beliefs, lbp_s = spatial_stage(config, labels, graph, spectral, mu)
            px, sp = _reports(config, labels, spectral, spatial, beliefs, lbp_s, mu)
            runs.append(RunResult(spectral, spatial, beliefs, px, sp))
        rows.extend(_sweep_rows(mu, _summary(runs)))
    return rows


# -- output ---------------------------------------------------------------------

def _fmt(x):
    return "" if x is None else repr(float(x))


def report_csv(result, num_classes, timing=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "stage", "oa", "aa", "kappa"] + [f"class_{c}" for c in range(1, num_classes + 1)] + ["seconds"])
    for r in result.runs:
        for rep in (r.pixel_report, r.spatial_report):
            seconds = sum(rep.timing.values()) if timing else None
            w.writerow([rep.run, rep.stage, _fmt(rep.oa), _fmt(rep.aa), _fmt(rep.kappa)]
                       + [_fmt(v) for v in rep.per_class] + [_fmt(seconds)])
    return buf.getvalue()


def aggregate_csv(summary):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "metric", "mean", "std"])
    for stage_name in ("pixel", "spatial"):
        agg = summary[stage_name]
        for m in ("oa", "aa", "kappa"):
            w.writerow([stage_name, m, _fmt(agg[m][0]), _fmt(agg[m][1])])
        for c, (mean, std) in enumerate(zip(*agg["per_class"]), 1):
            w.writerow([stage_name, f"class_{c}", _fmt(mean), _fmt(std)])
    return buf.getvalue()


def convergence_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "iterations", "max_delta", "converged"])
    for r in result.runs:
        b = r.beliefs
        w.writerow([r.spectral.run, b.iterations, _fmt(b.max_delta), int(b.converged)])
    return buf.getvalue()


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, SWEEP_HEADER, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def write_outputs(result, labels, out_dir):
    config = result.config
    out = Path(out_dir)
    with stage("write"):
        out.mkdir(parents=True, exist_ok=True)
        M = labels.num_classes
        (out / "report.csv").write_text(report_csv(result, M, config.timing))
        (out / "aggregate.csv").write_text(aggregate_csv(result.summary))
        (out / "convergence.csv").write_text(convergence_csv(result))
        if config.write_maps:
            palette = formats.default_palette(M)
            formats.render_map(labels, palette, out / "truth.ppm")
            for r in result.runs:
                tag = f"run{r.spectral.run:02d}"
                formats.render_map(r.spectral.pixel_map, palette, out / f"{tag}_pixel.ppm")
                formats.render_map(r.spatial_map, palette, out / f"{tag}_spatial.ppm")
        if config.dump_probs:
            for r in result.runs:
                np.save(out / f"run{r.spectral.run:02d}_probs.npy", r.spectral.probs)
                np.save(out / f"run{r.spectral.run:02d}_test.npy", r.spectral.split.test_indices)
    return out
