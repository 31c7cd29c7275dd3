"""End-to-end acceptance criteria, one test each, at their stated tolerances.

Each test prints a single PASS/FAIL line (visible with ``pytest -s`` or in
the captured output of a failure) before asserting.
"""

import filecmp
import math
import time

import numpy as np
import pytest

from tempocomp import cli
from tempocomp import experiments as ex
from tempocomp.encoding import predistort_values
from tempocomp.engine import EngineConfig, simulate, weighted_sum
from tempocomp.fixtures import bundled_flower
from tempocomp.formats import load_mnist
from tempocomp.oracle import dot_digital
from tempocomp.wdm import format_ops, plan_matmul, throughput_estimate


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


def test_1_predistortion_round_trip(capsys):
    m = np.random.default_rng(1).uniform(0, 1, 100_000)
    t0 = time.perf_counter()
    v = predistort_values(m, 3.5)
    back = np.sin(math.pi * v / (2 * 3.5)) ** 2
    dt = time.perf_counter() - t0
    err = float(np.abs(back - m).max())
    report(capsys, 1, err <= 1e-12 and dt < 1.0,
           f"max |sin^2(pi V/2Vpi) - m| = {err:.2e} over 1e5 samples in {dt * 1e3:.1f} ms")


def test_2_eq6_point_check(capsys):
    cfg = EngineConfig().noiseless()
    full = cfg.bpd.responsivity * cfg.laser.intensity_in / 4
    sps = cfg.scheme.samples_per_symbol
    # current during the single data symbol of a one-symbol frame
    i = {w: simulate([1.0], [w], cfg, trace=True).current.samples[:sps] for w in (1.0, 0.0, -1.0)}
    plus = float(np.abs(i[1.0] / full - 1).max())
    zero = float(np.abs(i[0.0]).max())
    minus = float(np.abs(i[-1.0] / -full - 1).max())
    ok = plus <= 1e-12 and zero == 0.0 and minus <= 1e-12
    report(capsys, 2, ok, f"w=+1 rel err {plus:.1e}, w=0 |i| {zero:.1e} A, w=-1 rel err {minus:.1e}")


def test_3_oracle_equivalence(capsys, quiet_engine):
    rng = np.random.default_rng(3)
    cfg, cal = quiet_engine
    worst, bad = 0.0, 0
    t0 = time.perf_counter()
    for trial in range(1000):
        n = (1, 16, 256, 784)[trial % 4]
        d, w = rng.uniform(0, 1, n), rng.uniform(-1, 1, n)
        truth = dot_digital(d, w)
        got = weighted_sum(d, w, cfg, cal)
        if truth == 0:
            bad += abs(got) > 1e-12
        else:
            worst = max(worst, abs(got - truth) / abs(truth))
    dt = time.perf_counter() - t0
    report(capsys, 3, worst <= 1e-9 and not bad and dt < 120,
           f"worst relative error {worst:.2e} over 1000 pairs in {dt:.1f} s")


def test_4_edge_detection(capsys, quiet_engine, noisy_engine):
    img = bundled_flower()
    r_quiet = ex.run_edge_detection(img, quiet_engine).correlation
    r_noisy = ex.run_edge_detection(img, noisy_engine).correlation
    report(capsys, 4, img.shape == (92, 92) and r_quiet >= 0.999 and r_noisy >= 0.99,
           f"Pearson r noiseless {r_quiet:.6f} (>= 0.999), default noise {r_noisy:.4f} (>= 0.99)")


def test_5_mnist_classification(capsys, mnist_test, quiet_engine, noisy_engine):
    t0 = time.perf_counter()
    images, labels, _ = mnist_test
    conv, fc = ex.train_mnist()
    quiet = ex.run_mnist_inference(images, labels, conv, fc, quiet_engine)
    noisy = ex.run_mnist_inference(images, labels, conv, fc, noisy_engine)
    dt = time.perf_counter() - t0
    digital = 100 * quiet.digital_confusion.accuracy
    parity = int(np.sum(quiet.photonic == quiet.digital))
    cm = noisy.photonic_confusion
    acc = 100 * cm.accuracy
    ok = (digital >= 90 and parity == 100 and 80 <= acc <= digital - 1
          and cm.counts.shape == (10, 10) and cm.total == 100 and dt < 600)
    report(capsys, 5, ok,
           f"digital {digital:.0f}%, noiseless parity {parity}/100, "
           f"noisy photonic {acc:.0f}% (band [80, {digital - 1:.0f}]), {dt:.0f} s")


def test_6_sliding_window_detection(capsys, mnist_test, detector, quiet_engine):
    images, labels = load_mnist("test")
    canvas = ex.build_detection_canvas(images, labels)
    run = ex.run_detection(canvas, detector, quiet_engine)
    n_patches = run.matrix.shape[0]
    err = float(np.abs(run.matrix - run.oracle_matrix).max())
    found = sorted((d.label, d.patch_index) for d in run.detections)
    expected = sorted(ex.DETECTION_LAYOUT.items())
    ok = n_patches == 25 and err <= 1e-9 and found == expected
    report(capsys, 6, ok, f"{n_patches} patches, |photonic - oracle| {err:.1e}, "
                          f"detections {found} (expected {expected})")


def test_7_wdm_parallelism(capsys, mnist_test, quiet_engine):
    _, fc = ex.train_mnist(conv=ex.pixel_conv_spec())
    run = ex.run_wdm_demo(ex.wdm_vectors(), fc, quiet_engine)
    err = float(np.abs(run.parallel - run.sequential).max())
    picks = tuple(int(np.argmax(r)) for r in run.parallel)
    ok = run.vectors.shape == (2, 784) and err <= 1e-9 and picks == run.labels
    report(capsys, 7, ok, f"|parallel - sequential| {err:.1e}, argmax {picks} for digits {run.labels}")


def test_8_throughput(capsys):
    one = throughput_estimate(plan_matmul(1, 784, 1, 1, 1), 50e9, 0)
    many = throughput_estimate(plan_matmul(100, 784, 1, 100, 1), 50e9, 0)
    report(capsys, 8, one == 1e11 and many == 1e13,
           f"50 GBaud x 1 = {format_ops(one)}, x 100 wavelengths = {format_ops(many)}")


EXPERIMENTS = [
    ["edge-detect"], ["mnist-train"], ["mnist-infer"], ["detect"], ["wdm-demo"],
    ["plan", "--m", "2", "--n", "784", "--l", "10", "--wavelengths", "2"],
    ["bench", "--symbol-rate", "50e9", "--wavelengths", "100"],
    ["calibrate", "--inject-offset", "5"], ["dump-waveform"],
]


def test_9_determinism(capsys, tmp_path, mnist_test):
    bad = []
    for argv in EXPERIMENTS:
        outs = []
        for rep in ("a", "b"):
            d = tmp_path / rep / argv[0]
            code = cli.main([*argv, "--seed", "0", "--out", str(d)])
            outs.append((code, capsys.readouterr().out.replace(str(d), "<out>"), d))
        (ca, oa, da), (cb, ob, db) = outs
        files = sorted(p.name for p in da.iterdir()) if da.exists() else []
        same = (ca == cb == 0 and oa == ob and files == sorted(p.name for p in db.iterdir()))
        if same and files:
            _, mismatch, errors = filecmp.cmpfiles(da, db, files, shallow=False)
            same = not mismatch and not errors
        if not same:
            bad.append(argv[0])
    report(capsys, 9, not bad,
           f"{len(EXPERIMENTS) - len(bad)}/{len(EXPERIMENTS)} CLI experiments byte-identical"
           + (f"; differing: {', '.join(bad)}" if bad else ""))
