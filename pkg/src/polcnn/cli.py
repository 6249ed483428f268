"""
Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.
Every subcommand accepts ``--config FILE`` holding ``key = value`` lines
(keys are long option names); options given on the command line win.
"""

import argparse
import re
import sys
import time
import warnings
from dataclasses import replace

from . import io
from .cnn import (CnnLayer, NetworkConfig, TrainConfig, accuracy, gradcheck,
                  init_weights, train)
from .errors import DataError, TrainingDiverged
from .metrics import accuracy_stats, confusion_matrix, format_report
from .pipeline import (build_dataset, classify_image, cross_site_remap,
                       sample_training_pixels, split_train_validation)
from .polsar import (CHANNEL_SETS, ScatteringImage, covariance_to_coherency,
                     features_from_coherency, features_from_scattering)
from .synth import PRESETS, generate_scene, parse_scene_spec

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- option value parsers ----------------------------------------------------------

_LAYER = re.compile(r"^(\d+)x(\d+)x(\d+)(?:s(\d+)(?:x(\d+))?)?$")


def parse_cnn(text):
    """``"20x3x3s2,10x3x3s2"`` -> CnnLayer tuple (neurons x Kx x Ky, s ssx[x ssy])."""
    layers = []
    for item in text.split(","):
        m = _LAYER.match(item.strip())
        if not m:
            raise argparse.ArgumentTypeError(
                f"bad CNN layer {item!r}; expected NEURONSxKXxKY[sSS[xSS]], e.g. 20x3x3s2")
        n, kx, ky, sx, sy = m.groups()
        sx = int(sx or 2)
        sy = int(sy or sx)
        layers.append(CnnLayer(int(n), (int(kx), int(ky)), (sx, sy)))
    return tuple(layers)


def parse_int_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def odd_window(text):
    n = int(text)
    if n < 1 or n % 2 == 0:
        raise argparse.ArgumentTypeError(f"window must be a positive odd integer, got {n}")
    return n


def boxcar_window(text):
    n = int(text)
    if n != 0 and (n < 1 or n % 2 == 0):
        raise argparse.ArgumentTypeError(f"boxcar must be 0 or a positive odd integer, got {n}")
    return n


def _names(text):
    return [s.strip() for s in text.split(",")]


# -- config file -------------------------------------------------------------------

def read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _apply_config(sub, values):
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for {sub.prog}")
        if isinstance(action, argparse._StoreTrueAction):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} expects a boolean")
            defaults[key] = raw.lower() in ("true", "1", "yes")
            continue
        try:
            value = action.type(raw) if action.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[key] = value
        action.required = False
    sub.set_defaults(**defaults)


def _show(value):
    if isinstance(value, tuple) and value and isinstance(value[0], CnnLayer):
        return ",".join(f"{l.neurons}x{l.kernel[0]}x{l.kernel[1]}s{l.subsample[0]}x{l.subsample[1]}"
                        for l in value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return value


def print_config(args, out=None):
    out = out or sys.stdout
    print(f"# polcnn {args.command}", file=out)
    for key, value in sorted(vars(args).items()):
        if key in ("command", "func", "config"):
            continue
        print(f"#   {key} = {_show(value)}", file=out)


# -- subcommands -------------------------------------------------------------------

def cmd_extract_features(args):
    img = io.read_polarimetric(args.input)
    if isinstance(img, ScatteringImage):
        cube = features_from_scattering(img, args.channels, args.boxcar, args.db_floor)
    else:
        if img.basis == "lexicographic":
            img = covariance_to_coherency(img)
        cube = features_from_coherency(img, args.channels, args.boxcar, args.db_floor)
    io.write_cube(cube, args.out)
    print(f"wrote {args.out}: {len(cube.names)} channels {list(cube.names)}, "
          f"{cube.shape[1]}x{cube.shape[0]}")


def _network_config(args, channels, classes):
    return NetworkConfig(input_channels=channels, window=args.window, cnn_layers=args.cnn,
                         mlp_layers=args.mlp, num_classes=classes, seed=args.seed)


def cmd_train(args):
    if (args.per_class is None) == (args.fraction is None):
        raise UsageError("give exactly one of --per-class or --fraction")
    cube = io.read_cube(args.cube)
    labels = io.read_labels(args.labels, args.class_names)
    if tuple(labels.shape) != tuple(cube.shape):
        raise DataError(f"labels {labels.shape} and cube {tuple(cube.shape)} differ in size")
    classes = args.classes or labels.num_classes
    if labels.num_classes > classes:
        raise DataError(f"labels hold class id {labels.num_classes} but --classes is {classes}")
    samples = sample_training_pixels(labels, args.per_class, args.fraction, args.seed, args.clamp)
    if args.samples_out:
        io.write_samples(samples, args.samples_out)
    if args.val_split > 0:
        fit, val = split_train_validation(samples, args.val_split, args.seed)
    else:
        fit, val = samples, None
    data = build_dataset(cube, fit, args.window)
    vdata = build_dataset(cube, val, args.window) if val is not None and len(val) else None
    print(f"training on {len(fit)} pixels"
          + (f", validating on {len(val)}" if vdata is not None else ""))

    every = max(1, args.max_iters // 10)

    def report(epoch, hist):
        if epoch % every == 0 or epoch == args.max_iters:
            line = f"epoch {epoch:5d}  mse {hist.train_mse[-1]:.6f}  lr {hist.learning_rate[-1]:.6g}"
            if hist.val_accuracy:
                line += f"  val acc {100 * hist.val_accuracy[-1]:.2f}%"
            print(line, flush=True)

    last = None
    for attempt in range(args.restarts):
        seed = args.seed + attempt
        config = replace(_network_config(args, cube.data.shape[0], classes), seed=seed)
        tcfg = TrainConfig(args.max_iters, args.lr, shuffle_seed=seed)
        try:
            start = time.perf_counter()
            net, history = train(init_weights(config), data, tcfg, vdata, report)
            break
        except TrainingDiverged as exc:
            last = exc
            print(f"attempt {attempt + 1}/{args.restarts} (seed {seed}): {exc}", file=sys.stderr)
    else:
        raise last
    net.channel_names = cube.names
    net.scaling = cube.scaling
    net.class_names = tuple(args.class_names) if args.class_names else None
    io.save_model(net, args.out)
    if args.history:
        io.write_history(history, args.history)
    print(f"trained {history.final_epoch} epochs in {time.perf_counter() - start:.1f} s; "
          f"final train MSE {history.train_mse[-1]:.6f}, "
          f"train accuracy {100 * accuracy(net, *data):.2f}%")
    print(f"wrote {args.out}")


def cmd_classify(args):
    net = io.load_model(args.model)
    cube = io.read_cube(args.cube)
    pred, _ = classify_image(net, cube)
    palette = io.read_palette(args.palette) if args.palette else None
    if args.out_mask:
        io.write_mask(pred, args.out_mask, palette)
    io.write_labels(pred, args.out_labels)
    counts = pred.counts()[1:]
    print("pixels per class: " + ", ".join(f"{c + 1}:{n}" for c, n in enumerate(counts)))


def cmd_evaluate(args):
    pred = io.read_labels(args.pred)
    truth = io.read_labels(args.truth)
    if args.remap:
        truth = cross_site_remap(truth, io.read_remap(args.remap))
    if args.remap_pred:
        pred = cross_site_remap(pred, io.read_remap(args.remap_pred))
    if pred.shape != truth.shape:
        raise DataError(f"prediction {pred.shape} and truth {truth.shape} differ in size")
    ids = truth.ids.copy()
    if args.exclude_train and not args.include_train_pixels:
        samples = io.read_samples(args.exclude_train, truth.shape)
        ids[samples.y, samples.x] = 0
        print(f"excluding {len(samples)} training pixels")
    K = args.classes or int(max(ids.max(), pred.ids.max()))
    cm = confusion_matrix(pred.ids, ids, K, args.class_names)
    stats = accuracy_stats(cm)
    print(format_report(cm, stats))
    if args.out:
        io.write_metrics(cm, stats, args.out)


def cmd_synth(args):
    if (args.preset is None) == (args.spec is None):
        raise UsageError("give exactly one of --preset or --spec")
    if args.preset:
        spec = PRESETS[args.preset](seed=args.seed)
    else:
        with open(args.spec) as fh:
            spec = parse_scene_spec(fh.read(), seed=args.seed)
    T, labels = generate_scene(spec)
    cube = features_from_coherency(T, args.channels, args.boxcar, args.db_floor)
    io.write_cube(cube, args.out_cube)
    io.write_labels(labels, args.out_labels)
    if args.out_hermitian:
        io.write_hermitian(T, args.out_hermitian)
    print(f"wrote {spec.width}x{spec.height} scene, {len(spec.class_models)} classes, "
          f"{spec.looks} looks, seed {spec.seed}")


def cmd_gradcheck(args):
    config = NetworkConfig(input_channels=args.channels, window=args.window, cnn_layers=args.cnn,
                           mlp_layers=args.mlp, num_classes=args.classes)
    worst = 0.0
    for seed in range(args.seed, args.seed + args.repeats):
        rep = gradcheck(config, seed=seed, h=args.h)
        worst = max(worst, rep.max_rel_error)
        print(f"seed {seed}: {rep.n_parameters} parameters, max relative error "
              f"{rep.max_rel_error:.3e}, max abs error {rep.max_abs_error:.3e}")
    print(f"max relative error {worst:.3e} ({'PASS' if worst < args.tol else 'FAIL'} at {args.tol:g})")


# -- parser ------------------------------------------------------------------------

def _network_options(p):
    p.add_argument("--window", type=odd_window, default=9, help="patch side N (odd)")
    p.add_argument("--cnn", type=parse_cnn, default=parse_cnn("20x3x3s2"),
                   help="CNN layers, e.g. 20x3x3s2[,20x3x3s2]")
    p.add_argument("--mlp", type=parse_int_list, default=(10,), help="hidden MLP widths, e.g. 10")


def build_parser():
    parser = _Parser(prog="polcnn", description="PolSAR land-cover classification with a compact CNN")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sub(name, func, help):
        p = subs.add_parser(name, help=help)
        p.add_argument("--config", help="file of 'key = value' option defaults")
        p.set_defaults(func=func)
        return p

    p = sub("extract-features", cmd_extract_features, "scattering/Hermitian image -> feature cube")
    p.add_argument("--input", required=True)
    p.add_argument("--channels", choices=sorted(CHANNEL_SETS), default="T3")
    p.add_argument("--boxcar", type=boxcar_window, default=0, help="boxcar window, 0 = none")
    p.add_argument("--db-floor", type=float, default=1e-15)
    p.add_argument("--out", required=True)

    p = sub("train", cmd_train, "train a network on a labeled feature cube")
    p.add_argument("--cube", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--per-class", type=int)
    p.add_argument("--fraction", type=float)
    p.add_argument("--clamp", action="store_true", help="take all pixels of too-small classes")
    _network_options(p)
    p.add_argument("--classes", type=int, help="number of classes (default: largest label id)")
    p.add_argument("--class-names", type=_names)
    p.add_argument("--max-iters", type=int, default=400)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-split", type=float, default=0.5, help="validation share, 0 disables")
    p.add_argument("--restarts", type=int, default=1, help="attempts (seed, seed+1, ...) on divergence")
    p.add_argument("--out", required=True)
    p.add_argument("--history")
    p.add_argument("--samples-out", help="CSV of the sampled training pixels")

    p = sub("classify", cmd_classify, "label every pixel of a feature cube")
    p.add_argument("--model", required=True)
    p.add_argument("--cube", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--out-mask")
    p.add_argument("--palette")

    p = sub("evaluate", cmd_evaluate, "confusion matrix and accuracies")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--classes", type=int)
    p.add_argument("--class-names", type=_names)
    p.add_argument("--remap", help="remap file applied to the truth raster")
    p.add_argument("--remap-pred", help="remap file applied to the prediction raster")
    p.add_argument("--exclude-train", help="samples CSV whose pixels are left out")
    p.add_argument("--include-train-pixels", action="store_true",
                   help="ignore --exclude-train and score every labeled pixel")
    p.add_argument("--out")

    p = sub("synth", cmd_synth, "generate a synthetic Wishart scene")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--spec")
    p.add_argument("--seed", type=int)
    p.add_argument("--channels", choices=sorted(CHANNEL_SETS), default="T3")
    p.add_argument("--boxcar", type=boxcar_window, default=0)
    p.add_argument("--db-floor", type=float, default=1e-15)
    p.add_argument("--out-cube", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--out-hermitian")

    p = sub("gradcheck", cmd_gradcheck, "finite-difference check of back-propagation")
    p.add_argument("--channels", type=int, default=3)
    _network_options(p)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--h", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-6)
    return parser, subs.choices


def _config_path(argv):
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def parse_args(argv):
    parser, subs = build_parser()
    path = _config_path(argv)
    if path and argv and argv[0] in subs:
        try:
            values = read_config(path)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        _apply_config(subs[argv[0]], values)
    args = parser.parse_args(argv)
    if args.command == "synth" and args.seed is None and args.preset:
        args.seed = 0
    return args


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        print_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda m, *a, **k: print(f"warning: {m}", file=sys.stderr)
            args.func(args)
    except UsageError as exc:
        print(f"polcnn: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"polcnn: training {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DataError, OSError) as exc:
        print(f"polcnn: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK
