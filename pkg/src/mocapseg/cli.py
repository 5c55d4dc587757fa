"""Command-line entry point: one binary, verbs for each pipeline stage.

Exit codes: 0 success, 1 usage error, 2 data error (unparseable or
inconsistent inputs), 3 numeric failure. The only environment variable
consulted is MOCAPSEG_LOG_LEVEL; everything else is explicit flags. All
file outputs are written atomically.
"""

from __future__ import annotations

import io
import json
import logging
import os
import sys

import click
import numpy as np
from click.core import ParameterSource

from .bvh import parse_bvh
from .dtfcn import (
    CANONICAL_CHANNELS,
    NetConfig,
    TrainConfig,
    build_model,
    fold_seed,
    load_checkpoint,
    padding_schedule,
    parameter_count,
    predict_labels,
    receptive_field,
)
from .errors import BvhParseError, DataError, NumericError
from .experiments import (
    NoiseSpec,
    confusion,
    confusion_csv_bytes,
    load_manifest_dataset,
    per_frame_accuracy,
    run_experiment,
)
from .io_utils import atomic_write_bytes, atomic_write_text
from .kinematics import to_cartesian
from .labels import (
    CLASS_NAMES,
    LabelTrack,
    load_label_json,
    save_label_json,
    segments_from_classes,
)
from .motion_image import (
    channel_extrema,
    encode_png,
    export_png,
    motion_image_from_cartesian,
    render_label_strip,
)
from .nn.gradcheck import gradient_check_model
from .nn.rng import RngStream
from .synthetic import SynthSpec, write_dataset_files

_log = logging.getLogger(__name__)

_VIZ_BAND_HEIGHT = 32


def _setup_logging() -> None:
    name = os.environ.get("MOCAPSEG_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        level = logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("mocapseg")
    root.setLevel(level)
    # replace, don't append: tests call main() many times in one process
    root.handlers[:] = [handler]
    root.propagate = False


def _read_text(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


@click.group()
def cli():
    """Motion-capture segmentation toolkit."""


@cli.command("convert")
@click.argument("bvh_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--space", type=click.Choice(["local", "global"]), default="local", show_default=True)
@click.option("--height", type=int, default=224, show_default=True)
@click.option(
    "--out",
    "out_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="Output path, .png or .npy; defaults to the BVH name with .png.",
)
def cmd_convert(bvh_path, space, height, out_path):
    """Convert one BVH file into a motion image plus a sidecar JSON.

    The sidecar records joint/frame counts and the per-channel extrema so
    pixel values can be mapped back to coordinates.
    """
    skeleton, sequence = parse_bvh(_read_text(bvh_path))
    cart = to_cartesian(skeleton, sequence, space)
    lo, hi = channel_extrema(cart)
    image = motion_image_from_cartesian(cart, height)

    if out_path is None:
        out_path = os.path.splitext(bvh_path)[0] + ".png"
    ext = os.path.splitext(out_path)[1].lower()
    if ext == ".png":
        export_png(image, out_path)
    elif ext == ".npy":
        buf = io.BytesIO()
        np.save(buf, image.pixels)
        atomic_write_bytes(out_path, buf.getvalue())
    else:
        raise click.UsageError(f"--out must end in .png or .npy, got {out_path!r}")

    sidecar = {
        "joint_count": skeleton.joint_count,
        "frame_count": sequence.frame_count,
        "space": space,
        "height": height,
        "channel_min": [float(v) for v in lo],
        "channel_max": [float(v) for v in hi],
    }
    sidecar_path = out_path + ".json"
    atomic_write_text(sidecar_path, json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote {out_path} ({image.height}x{image.width}) and {sidecar_path}")


# keys a --config file may set; flags given on the command line win
_FILE_KEYS = frozenset(
    {
        "width",
        "height",
        "input_channels",
        "conv_channels",
        "classes",
        "dropout",
        "norm_relu_eps",
        "epochs",
        "alpha",
        "beta1",
        "beta2",
        "eps",
        "seed",
        "folds",
        "space",
        "noise_mode",
        "noise_pct",
        "noise_n",
        "noise_seed",
    }
)
_FLAG_KEYS = (
    "width",
    "height",
    "epochs",
    "alpha",
    "seed",
    "folds",
    "space",
    "noise_mode",
    "noise_pct",
    "noise_n",
    "noise_seed",
)


def _resolve_train_settings(ctx, config_path) -> dict:
    doc = {}
    if config_path is not None:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON in config file {config_path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise DataError("config file must hold a JSON object")
    unknown = set(doc) - _FILE_KEYS
    if unknown:
        raise click.UsageError(f"unknown config keys: {sorted(unknown)}")

    settings = {
        "width": 3,
        "height": 224,
        "input_channels": 3,
        "conv_channels": list(CANONICAL_CHANNELS),
        "classes": None,
        "dropout": 0.5,
        "norm_relu_eps": 1e-5,
        "epochs": 100,
        "alpha": 0.001,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "seed": 0,
        "folds": 7,
        "space": "local",
        "noise_mode": None,
        "noise_pct": 0.0,
        "noise_n": 0,
        "noise_seed": 0,
    }
    settings.update(doc)
    for key in _FLAG_KEYS:
        if ctx.get_parameter_source(key) == ParameterSource.COMMANDLINE:
            settings[key] = ctx.params[key]
    if settings["noise_mode"] is None and (settings["noise_pct"] or settings["noise_n"]):
        raise click.UsageError("noise parameters require --noise-mode")
    return settings


@cli.command("train")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file with network/training fields; explicit flags override it.",
)
@click.option("--folds", type=int, default=7, show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--alpha", type=float, default=0.001, show_default=True, help="Adam step size.")
@click.option("--width", type=int, default=3, show_default=True, help="Convolution width w.")
@click.option("--height", type=int, default=224, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--space", type=click.Choice(["local", "global"]), default="local", show_default=True)
@click.option(
    "--noise-mode",
    type=click.Choice(["random_pct", "boundary_window", "boundary_mask"]),
    default=None,
)
@click.option("--noise-pct", type=float, default=0.0, show_default=True)
@click.option("--noise-n", type=int, default=0, show_default=True)
@click.option("--noise-seed", type=int, default=0, show_default=True)
@click.option("--outdir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.pass_context
def cmd_train(ctx, manifest, config_path, outdir, **_flags):
    """Cross-validated training from a dataset manifest.

    Writes fold checkpoints, metrics.csv, and confusion.csv into --outdir.
    """
    settings = _resolve_train_settings(ctx, config_path)
    dataset = load_manifest_dataset(manifest, height=settings["height"], space=settings["space"])
    classes = len(dataset.class_names)
    if settings["classes"] is not None and settings["classes"] != classes:
        raise DataError(f"config says {settings['classes']} classes, dataset has {classes}")
    settings["classes"] = classes

    net = NetConfig(
        width=settings["width"],
        height=settings["height"],
        input_channels=settings["input_channels"],
        conv_channels=tuple(settings["conv_channels"]),
        classes=classes,
        dropout=settings["dropout"],
        norm_relu_eps=settings["norm_relu_eps"],
    )
    train_cfg = TrainConfig(
        epochs=settings["epochs"],
        alpha=settings["alpha"],
        beta1=settings["beta1"],
        beta2=settings["beta2"],
        eps=settings["eps"],
        seed=settings["seed"],
    )
    noise = None
    if settings["noise_mode"] is not None:
        noise = NoiseSpec(
            mode=settings["noise_mode"],
            pct=settings["noise_pct"],
            n=settings["noise_n"],
            seed=settings["noise_seed"],
        )

    folds = settings["folds"]
    _log.info("resolved config: %s", json.dumps(settings, sort_keys=True))
    _log.info(
        "base seed %d, fold seeds %s",
        settings["seed"],
        [fold_seed(settings["seed"], k) for k in range(folds)],
    )
    os.makedirs(outdir, exist_ok=True)
    report = run_experiment(dataset, net, train_cfg, noise, folds=folds, outdir=outdir)
    click.echo(f"per-frame accuracy {report.per_frame_accuracy!r} over {len(report.folds)} folds")
    click.echo(f"wrote metrics.csv, confusion.csv, and fold checkpoints to {outdir}")


@cli.command("segment")
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.argument("bvh_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="labels.json", show_default=True)
@click.option(
    "--viz",
    "viz_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write a PNG label strip; with --truth, truth on top, prediction below.",
)
@click.option("--truth", "truth_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--space", type=click.Choice(["local", "global"]), default="local", show_default=True)
def cmd_segment(checkpoint, bvh_path, out_path, viz_path, truth_path, space):
    """Label every frame of a BVH file with a trained model."""
    model, extra = load_checkpoint(checkpoint)
    class_names = extra.get("class_names") if isinstance(extra, dict) else None
    if class_names is None:
        c = model.config.classes
        class_names = list(CLASS_NAMES) if c == len(CLASS_NAMES) else [f"class{i}" for i in range(c)]

    skeleton, sequence = parse_bvh(_read_text(bvh_path))
    cart = to_cartesian(skeleton, sequence, space)
    image = motion_image_from_cartesian(cart, model.config.height)
    track = predict_labels(model, image)
    save_label_json(out_path, track, class_names)
    n_segments = len(segments_from_classes(track.classes))
    click.echo(f"wrote {out_path} ({n_segments} segments over {len(track)} frames)")

    if viz_path is not None:
        bands = []
        if truth_path is not None:
            truth_track, truth_names = load_label_json(truth_path)
            if len(truth_track) != len(track):
                raise DataError(
                    f"truth has {len(truth_track)} frames, prediction has {len(track)}"
                )
            bands.append(render_label_strip(truth_track, _VIZ_BAND_HEIGHT, truth_names))
        bands.append(render_label_strip(track, _VIZ_BAND_HEIGHT, class_names))
        atomic_write_bytes(viz_path, encode_png(np.concatenate(bands, axis=0)))
        click.echo(f"wrote {viz_path}")


@cli.command("eval")
@click.argument("pred_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("truth_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="confusion.csv", show_default=True)
def cmd_eval(pred_path, truth_path, out_path):
    """Score predicted labels against ground truth; prints accuracy."""
    pred_track, pred_names = load_label_json(pred_path)
    truth_track, truth_names = load_label_json(truth_path)
    if len(pred_track) != len(truth_track):
        raise DataError(f"prediction has {len(pred_track)} frames, truth has {len(truth_track)}")
    index = {name: i for i, name in enumerate(truth_names)}
    missing = sorted(set(pred_names) - set(truth_names))
    if missing:
        raise DataError(f"predicted classes missing from truth: {missing}")
    remap = np.array([index[name] for name in pred_names], dtype=np.int64)
    pred = LabelTrack(classes=remap[pred_track.classes], class_count=len(truth_names))

    acc = per_frame_accuracy(pred, truth_track)
    conf = confusion(pred, truth_track)
    atomic_write_bytes(out_path, confusion_csv_bytes(conf, truth_names))
    click.echo(f"per-frame accuracy {acc!r}")
    click.echo(f"wrote {out_path}")


@cli.command("rfs")
@click.option("--w", "width", type=int, default=3, show_default=True, help="Convolution width.")
@click.option("--height", type=int, default=224, show_default=True)
@click.option("--classes", type=int, default=10, show_default=True)
def cmd_rfs(width, height, classes):
    """Print the receptive field, padding, and parameter table."""
    config = NetConfig(width=width, height=height, classes=classes)
    rfs = receptive_field(config)
    pads = padding_schedule(config)
    for layer, (d, pad, r) in enumerate(zip(config.dilations(), pads, rfs), start=1):
        click.echo(f"layer {layer}: dilation {d}, padding {pad}, rfs {r}")
    click.echo(f"RFS {rfs[-1]} and params {parameter_count(config):,}")


@cli.command("gradcheck")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON NetConfig fields; defaults to a desk-scale network.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--frames", type=int, default=24, show_default=True)
def cmd_gradcheck(config_path, seed, frames):
    """Finite-difference check of the full model gradient; exit 3 on failure."""
    if config_path is None:
        config = NetConfig(width=3, height=32, conv_channels=(8, 8, 16, 32, 64), classes=10)
    else:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON in config file {config_path}: {exc}") from exc
        if isinstance(doc.get("conv_channels"), list):
            doc["conv_channels"] = tuple(doc["conv_channels"])
        config = NetConfig.from_json_dict(doc)

    model = build_model(config, seed=seed)
    root = RngStream(seed)
    pixels = root.derive(1).uniform(size=(config.height, frames, 3), high=255.0)
    labels = root.derive(2).integers(config.classes, size=frames)
    report = gradient_check_model(model, pixels, labels, dropout_seed=seed)
    click.echo(str(report))
    if not report.passed:
        raise NumericError(f"gradient check failed: max relative error {report.max_rel_error!r}")


@cli.command("synth")
@click.argument("outdir", type=click.Path(file_okay=False))
@click.option("--sequences", type=int, default=28, show_default=True)
@click.option("--frames", type=int, default=240, show_default=True)
@click.option("--classes", type=int, default=10, show_default=True)
@click.option("--joints", type=int, default=17, show_default=True)
@click.option("--fps", type=float, default=72.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--idle-only", is_flag=True, help="Every frame labeled standing (degenerate data).")
def cmd_synth(outdir, sequences, frames, classes, joints, fps, seed, idle_only):
    """Generate a synthetic labeled BVH dataset and its manifest."""
    spec = SynthSpec(
        sequences=sequences,
        frames=frames,
        fps=fps,
        joint_count=joints,
        classes=classes,
        seed=seed,
        idle_only=idle_only,
    )
    manifest = write_dataset_files(spec, outdir)
    click.echo(f"wrote {sequences} sequences and {manifest}")


def main(argv=None) -> int:
    """Run the CLI; returns the process exit code instead of raising."""
    _setup_logging()
    try:
        result = cli.main(args=argv, prog_name="mocapseg", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.NoArgsIsHelpError as exc:
        # bare invocation: show help like --help does, not a usage failure
        click.echo(exc.format_message())
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except (BvhParseError, DataError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except NumericError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return int(result) if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
