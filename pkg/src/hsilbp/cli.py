"""Command-line entry point: ``hsilbp <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
import sys

from hsilbp import formats
from hsilbp.config import load_config
from hsilbp.errors import HSIError, StageError
from hsilbp.pipeline import run_pipeline, sweep_csv, sweep_hidden_nodes, sweep_mu
from hsilbp.synthgen import SceneSpec, gen_scene

log = logging.getLogger("hsilbp")

# (flag, config key, type)
PIPELINE_FLAGS = [
    ("--classifier", "classifier", str),
    ("--hidden-nodes", "hidden_nodes", int),
    ("--activation", "activation", str),
    ("--ridge", "ridge", float),
    ("--kernel-c", "kernel_c", float),
    ("--kernel-sigma", "kernel_sigma", float),
    ("--temperature", "temperature", float),
    ("--mu", "mu", float),
    ("--connectivity", "connectivity", int),
    ("--max-iters", "max_iters", int),
    ("--tol", "tol", float),
    ("--damping", "damping", float),
    ("--clamp-eps", "clamp_eps", float),
    ("--train-fraction", "train_fraction", float),
    ("--train-counts", "train_counts", str),
    ("--runs", "runs", int),
    ("--seed", "seed", int),
    ("--cube", "cube", str),
    ("--labels", "labels", str),
    ("--output", "output", str),
]


def _add_pipeline_args(p):
    p.add_argument("--config", help="flat key = value configuration file")
    for flag, key, kind in PIPELINE_FLAGS:
        p.add_argument(flag, dest=key, type=kind, default=None)
    p.add_argument("--timing", dest="timing", action="store_const", const=True, default=None,
                   help="fill the seconds column of report.csv (makes reports run-dependent)")
    p.add_argument("--no-maps", dest="write_maps", action="store_const", const=False, default=None)
    p.add_argument("--dump-probs", dest="dump_probs", action="store_const", const=True, default=None)


def _config_from(args):
    overrides = {key: getattr(args, key) for _, key, _ in PIPELINE_FLAGS}
    for key in ("timing", "write_maps", "dump_probs"):
        overrides[key] = getattr(args, key)
    return load_config(args.config, overrides)


def _values(text, kind):
    return [kind(v) for v in text.replace(",", " ").split()]


def cmd_synth(args):
    spec = SceneSpec(args.height, args.width, args.bands, args.classes, args.passes, args.noise,
                     args.background, args.seed, args.vote_radius)
    cube, labels = gen_scene(spec)
    formats.write_cube(args.out_cube, cube)
    formats.write_labels(args.out_labels, labels)
    log.info("wrote %s and %s", args.out_cube, args.out_labels)


def cmd_classify(args):
    config = _config_from(args)
    result = run_pipeline(config, out_dir=config.output)
    for stage_name in ("pixel", "spatial"):
        agg = result.summary[stage_name]
        print(f"{stage_name:8s} OA {agg['oa'][0]:.4f} +/- {agg['oa'][1]:.4f}  "
              f"AA {agg['aa'][0]:.4f}  kappa {agg['kappa'][0]:.4f}")


def _sweep(args, fn, values, name):
    config = _config_from(args)
    text = sweep_csv(fn(config, values))
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    sys.stdout.write(text)


def cmd_sweep_l(args):
    _sweep(args, sweep_hidden_nodes, _values(args.values, int), "sweep_hidden_nodes.csv")


def cmd_sweep_mu(args):
    _sweep(args, sweep_mu, _values(args.values, float), "sweep_mu.csv")


def cmd_render(args):
    labels = formats.read_labels(args.labels)
    formats.render_map(labels, formats.default_palette(labels.num_classes), args.out)


def cmd_convert(args):
    src, dst = Path(args.src), Path(args.dst)
    kinds = (src.suffix.lower(), dst.suffix.lower())
    if kinds == (".csv", ".hsc"):
        formats.write_cube(dst, formats.cube_from_csv(src))
    elif kinds == (".csv", ".hsg"):
        formats.write_labels(dst, formats.labels_from_csv(src, args.num_classes))
    elif kinds == (".hsc", ".csv"):
        formats.cube_to_csv(dst, formats.read_cube(src))
    elif kinds == (".hsg", ".csv"):
        formats.labels_to_csv(dst, formats.read_labels(src))
    else:
        raise HSIError(f"cannot convert {src.suffix} to {dst.suffix}; use .csv <-> .hsc/.hsg")


def build_parser():
    parser = argparse.ArgumentParser(prog="hsilbp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("out_cube")
    p.add_argument("out_labels")
    defaults = SceneSpec()
    p.add_argument("--height", type=int, default=defaults.height)
    p.add_argument("--width", type=int, default=defaults.width)
    p.add_argument("--bands", type=int, default=defaults.bands)
    p.add_argument("--classes", type=int, default=defaults.classes)
    p.add_argument("--passes", type=int, default=defaults.smoothing_passes)
    p.add_argument("--noise", type=float, default=defaults.noise_sigma)
    p.add_argument("--background", type=float, default=defaults.background_fraction)
    p.add_argument("--vote-radius", type=int, default=defaults.vote_radius)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("classify", help="run the Monte Carlo pipeline")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep-l", help="sweep the hidden-layer size")
    p.add_argument("values", help="comma-separated hidden-node counts")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_sweep_l)

    p = sub.add_parser("sweep-mu", help="sweep the smoothness parameter")
    p.add_argument("values", help="comma-separated mu values")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_sweep_mu)

    p = sub.add_parser("render", help="render an HSG1 label file as a PPM map")
    p.add_argument("labels")
    p.add_argument("out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("convert", help="convert between CSV and HSC1/HSG1")
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("--num-classes", type=int)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except StageError as exc:
        print(f"hsilbp: error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 2
    except (HSIError, OSError, ValueError) as exc:
        print(f"hsilbp: error in {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
