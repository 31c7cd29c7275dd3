"""Command-line driver for the simulator experiments.

Exit codes: 0 success, 1 usage or configuration error, 2 data or format
error, 3 numeric or calibration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import formats, nn, plotting
from .config import RunConfig, load_run_config
from .devices import Fidelity
from .encoding import ImageTensor, write_tcwf, write_waveform_csv
from .engine import calibrate_gain, find_sync_offset, simulate
from .errors import DataError, TempocompError
from .fixtures import bundled_flower
from .wdm import format_ops, plan_matmul, throughput_estimate


class UsageError(TempocompError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=d, help="noise and training seed")
    p.add_argument("--noise", choices=("on", "off"), default=d)
    p.add_argument("--fidelity", choices=[f.value for f in Fidelity], default=d)
    p.add_argument("--out", default=d, help="output directory")
    p.add_argument("--data-dir", default=d, help="directory holding the MNIST IDX files")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tempocomp", description=__doc__.splitlines()[0])
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        _add_globals(p, suppress=True)
        return p

    p = add("edge-detect", "Laplacian edge map of a grayscale image")
    p.add_argument("--image", help="P5 PGM input (default: bundled 92x92 flower)")
    p.add_argument("--kernel", help="CSV kernel (default: 3x3 Laplacian / 4)")

    p = add("mnist-train", "train the conv + FC classifier digitally")
    p.add_argument("--train-count", type=int, default=10000)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.3)

    p = add("mnist-infer", "classify a seeded MNIST test subset on the photonic engine")
    p.add_argument("--weights", help="FC weights CSV from mnist-train (trained if omitted)")
    p.add_argument("--kernel", help="conv kernel CSV (default: 5x5 Gaussian)")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--features", choices=("photonic", "digital"), default="photonic",
                   help="compute the conv layer photonically or digitally")

    p = add("detect", "sliding-window detection of digits 0, 4 and 8 on a 68x68 canvas")
    p.add_argument("--detector", help="detector JSON (trained if omitted)")

    p = add("wdm-demo", "two digits classified in parallel on two wavelengths")
    p.add_argument("--weights", help="10x784 pixel-domain FC weights CSV (trained if omitted)")
    p.add_argument("--crosstalk-db", type=float, default=float("-inf"))

    p = add("plan", "tile an M x N by L x N product over wavelengths, channels and slots")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--wavelengths", type=int, default=1)
    p.add_argument("--spatial", type=int, default=1)
    p.add_argument("--crosstalk-db", type=float, default=float("-inf"))
    p.add_argument("--symbol-rate", type=float, default=None)

    p = add("bench", "throughput of a fully loaded multiplexed engine")
    p.add_argument("--symbol-rate", type=float, default=None)
    p.add_argument("--wavelengths", type=int, default=1)
    p.add_argument("--spatial", type=int, default=1)
    p.add_argument("--n", type=int, default=784, help="vector length per frame")
    p.add_argument("--guard", type=int, default=0, help="guard symbols per frame")

    p = add("calibrate", "recover sync offset, residual offset and gain")
    p.add_argument("--inject-offset", type=int, default=None,
                   help="weight-stream lag in samples to simulate before calibrating")

    p = add("dump-waveform", "write every stage waveform of one weighted sum")
    p.add_argument("--data", default="1,0,1,0.5", help="comma-separated values in [0, 1]")
    p.add_argument("--weights", default="0.5,-0.3,0.25,-1", help="comma-separated values in [-1, 1]")
    p.add_argument("--format", choices=("tcwf", "csv"), default="tcwf")
    return parser


# -- helpers ------------------------------------------------------------------------

def _run_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.noise is not None:
        changes["noise"] = args.noise == "on"
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.data_dir is not None:
        changes["data_dir"] = args.data_dir
    if args.fidelity is not None:
        changes["engine"] = replace(cfg.engine, fidelity=Fidelity(args.fidelity))
    return replace(cfg, **changes)


def _out_dir(rc: RunConfig) -> Path:
    out = Path(rc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _floats(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise UsageError(f"--{what}: expected comma-separated numbers") from None


def _load_image(path) -> ImageTensor:
    try:
        return formats.read_pgm(path)
    except OSError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from None


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def _engine(rc: RunConfig) -> nn.Engine:
    return nn.Engine.calibrated(rc.effective_engine())


def _mnist_model(rc: RunConfig, weights, kernel):
    conv = formats.read_kernel(kernel) if kernel else nn.mnist_conv_spec()
    if weights:
        return conv, formats.read_fcspec(weights)
    print("no --weights given; training the classifier on 10000 images")
    return ex.train_mnist(seed=rc.seed, data_dir=rc.data_dir, conv=conv)


# -- commands ----------------------------------------------------------------------

def cmd_edge_detect(args, rc: RunConfig) -> None:
    out = _out_dir(rc)
    path = args.image or rc.image
    img = _load_image(path) if path else bundled_flower()
    kernel = args.kernel or rc.kernel
    spec = formats.read_kernel(kernel) if kernel else nn.edge_spec()
    res = ex.run_edge_detection(img, _engine(rc), spec)
    digital = nn.minmax_rescale(res.oracle)
    formats.write_pgm(img, out / "edge_input.pgm")
    formats.write_pgm(digital, out / "edge_digital.pgm")
    formats.write_pgm(res.photonic, out / "edge_photonic.pgm")
    formats.write_matrix_csv(res.oracle, out / "edge_digital.csv")
    formats.write_matrix_csv(res.photonic.raw(), out / "edge_photonic.csv")
    _write_rows(out / "edge_summary.csv", ["pearson_r", "max_abs_error"],
                [[repr(res.correlation), repr(res.max_abs_error)]])
    plotting.edge_maps(img.to_array(), res.oracle, res.photonic.raw(), out / "edge.png",
                       res.correlation)
    print(f"pearson_r {res.correlation:.6f}")
    print(f"max_abs_error {res.max_abs_error:.3e}")


def cmd_mnist_train(args, rc: RunConfig) -> None:
    out = _out_dir(rc)
    conv, fc = ex.train_mnist(args.train_count, args.epochs, args.lr, rc.seed, rc.data_dir)
    formats.write_fcspec(fc, out / "fc_weights.csv")
    formats.write_kernel(conv, out / "kernel.csv")
    images, labels, _ = ex.mnist_test_subset(100, 0, rc.data_dir)
    acc = np.mean(np.argmax(nn.digital_scores(images, conv, fc), axis=1) == labels)
    print(f"wrote {out / 'fc_weights.csv'}")
    print(f"digital accuracy {100 * acc:.1f}% on the 100-image test subset")


def cmd_mnist_infer(args, rc: RunConfig) -> None:
    out = _out_dir(rc)
    conv, fc = _mnist_model(rc, args.weights or rc.weights, args.kernel or rc.kernel)
    images, labels, idx = ex.mnist_test_subset(args.count, 0, rc.data_dir)
    res = ex.run_mnist_inference(images, labels, conv, fc, _engine(rc),
                                 photonic_features=args.features == "photonic")
    dig, pho = res.digital_confusion, res.photonic_confusion
    formats.write_matrix_csv(pho.counts, out / "confusion_photonic.csv")
    formats.write_matrix_csv(dig.counts, out / "confusion_digital.csv")
    _write_rows(out / "predictions.csv", ["test_index", "label", "digital", "photonic"],
                zip(idx, res.labels, res.digital, res.photonic))
    formats.write_matrix_csv(res.photonic_scores, out / "photonic_scores.csv")
    plotting.confusion(pho.counts, out / "confusion.png",
                       f"photonic accuracy {100 * pho.accuracy:.0f}%")
    print(f"digital accuracy {100 * dig.accuracy:.1f}%")
    print(f"photonic accuracy {100 * pho.accuracy:.1f}%")
    print(f"agreement {int(np.sum(res.digital == res.photonic))}/{len(labels)}")


def cmd_detect(args, rc: RunConfig) -> None:
    out = _out_dir(rc)
    det_path = args.detector or rc.detector
    if det_path:
        spec = formats.read_detspec(det_path)
    else:
        print("no --detector given; training templates on synthetic canvases")
        spec = ex.train_detector(seed=rc.seed, data_dir=rc.data_dir)
        formats.write_detspec(spec, out / "detector.json")
    images, labels = formats.load_mnist("test", rc.data_dir)
    canvas = ex.build_detection_canvas(images, labels)
    run = ex.run_detection(canvas, spec, _engine(rc))
    formats.write_pgm(canvas, out / "detect_canvas.pgm")
    formats.write_matrix_csv(run.matrix, out / "decision_matrix.csv",
                             header=[f"digit_{l}" for l in spec.labels])
    _write_rows(out / "detections.csv", ["label", "patch_index", "decision_value"],
                [(d.label, d.patch_index, repr(d.decision_value)) for d in run.detections])
    plotting.decision_matrix(run.matrix, spec.labels, spec.thresholds, out / "decision.png")
    for d in run.detections:
        print(f"digit {d.label} at patch {d.patch_index} (score {d.decision_value:.4f})")
    if not run.detections:
        print("no detections")


def cmd_wdm_demo(args, rc: RunConfig) -> None:
    out = _out_dir(rc)
    weights = args.weights or rc.weights
    if weights:
        fc = formats.read_fcspec(weights)
    else:
        print("no --weights given; training a pixel-domain classifier on 10000 images")
        _, fc = ex.train_mnist(seed=rc.seed, data_dir=rc.data_dir, conv=ex.pixel_conv_spec())
    vectors = ex.wdm_vectors(data_dir=rc.data_dir)
    run = ex.run_wdm_demo(vectors, fc, _engine(rc), crosstalk_db=args.crosstalk_db)
    (out / "wdm_plan.json").write_text(run.plan.to_json() + "\n")
    formats.write_matrix_csv(run.parallel, out / "wdm_scores.csv",
                             header=[f"class_{c}" for c in range(fc.n_classes)])
    formats.write_matrix_csv(run.sequential, out / "sequential_scores.csv",
                             header=[f"class_{c}" for c in range(fc.n_classes)])
    plotting.class_scores(run.parallel, run.labels, out / "wdm.png", "two-wavelength scores")
    for wl, (label, row) in enumerate(zip(run.labels, run.parallel)):
        print(f"wavelength {wl + 1}: digit {label} -> class {nn.classify(row)}")
    print(f"max |parallel - sequential| {np.abs(run.parallel - run.sequential).max():.3e}")


def cmd_plan(args, rc: RunConfig) -> None:
    out = _out_dir(rc)
    plan = plan_matmul(args.m, args.n, args.l, args.wavelengths, args.spatial, args.crosstalk_db)
    (out / "plan.json").write_text(plan.to_json() + "\n")
    rate = args.symbol_rate or rc.engine.scheme.symbol_rate
    guard = rc.engine.scheme.guard_symbols
    print(f"{len(plan.assignments)} frames over {plan.n_slots} time slots, "
          f"{plan.parallel_channels} parallel channel(s)")
    print(f"throughput {format_ops(throughput_estimate(plan, rate, guard))}")


def cmd_bench(args, rc: RunConfig) -> None:
    rate = args.symbol_rate or rc.engine.scheme.symbol_rate
    if args.wavelengths < 1 or args.spatial < 1 or args.n < 1 or args.guard < 0:
        raise UsageError("--wavelengths, --spatial and --n must be >= 1, --guard >= 0")
    plan = plan_matmul(args.wavelengths, args.n, args.spatial, args.wavelengths, args.spatial)
    ops = throughput_estimate(plan, rate, args.guard)
    row = [f"{rate:g}", args.wavelengths, args.spatial, args.guard, f"{ops:g}", format_ops(ops)]
    header = ["symbol_rate_baud", "wavelengths", "spatial", "guard", "ops_per_s", "throughput"]
    _write_rows(_out_dir(rc) / "bench.csv", header, [row])
    print(",".join(header[:-1]))
    print(",".join(str(v) for v in row[:-1]))
    print(format_ops(ops))


def cmd_calibrate(args, rc: RunConfig) -> None:
    out = _out_dir(rc)
    cfg = rc.effective_engine()
    if args.inject_offset is not None:
        cfg = replace(cfg, sync_offset=args.inject_offset)
    cal = calibrate_gain(cfg)
    doc = {"gain_v_per_unit": cal.gain, "residual_offset_v": cal.residual_offset,
           "found_sync_offset": cal.found_sync_offset,
           "noisy_sync_estimate": find_sync_offset(cfg) if cfg.noise.enabled else None}
    (out / "calibration.json").write_text(json.dumps(doc, indent=2) + "\n")
    for k, v in doc.items():
        print(f"{k} {v}")


def cmd_dump_waveform(args, rc: RunConfig) -> None:
    out = _out_dir(rc)
    data, weights = _floats(args.data, "data"), _floats(args.weights, "weights")
    cfg = rc.effective_engine()
    cal = calibrate_gain(cfg)
    tr = simulate(data, weights, cfg, cal.found_sync_offset, trace=True)
    stages = {"data_drive": tr.data_drive, "weight_drive": tr.weight_drive, "mzm1": tr.mzm1,
              "upper": tr.upper, "lower": tr.lower, "current": tr.current,
              "voltage": tr.voltage}
    for name, w in stages.items():
        if args.format == "tcwf":
            write_tcwf(w, out / f"{name}.tcwf")
        else:
            write_waveform_csv(w, out / f"{name}.csv")
    plotting.waveforms(tr.current.times, {k: stages[k].samples for k in
                                          ("mzm1", "upper", "lower", "current", "voltage")},
                       out / "waveforms.png")
    value = (tr.frame_voltages[0] - cal.residual_offset) / cal.gain
    print(f"wrote {len(stages)} {args.format} waveforms to {out}")
    print(f"weighted sum {value:.9g} (digital {float(np.dot(data, weights)):.9g})")


COMMANDS = {
    "edge-detect": cmd_edge_detect,
    "mnist-train": cmd_mnist_train,
    "mnist-infer": cmd_mnist_infer,
    "detect": cmd_detect,
    "wdm-demo": cmd_wdm_demo,
    "plan": cmd_plan,
    "bench": cmd_bench,
    "calibrate": cmd_calibrate,
    "dump-waveform": cmd_dump_waveform,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        rc = _run_config(args)
        COMMANDS[args.command](args, rc)
    except TempocompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
