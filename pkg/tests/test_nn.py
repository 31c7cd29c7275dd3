import numpy as np
import pytest

from tempocomp import experiments as ex
from tempocomp import nn
from tempocomp.encoding import ImageTensor
from tempocomp.errors import DataError, DimensionError, NumericError
from tempocomp.oracle import conv2d_digital, detect_digital, fc_digital


class TestSpecs:
    def test_kernel_too_large(self):
        with pytest.raises(DimensionError):
            nn.ConvSpec(np.ones((5, 5))).output_shape(3, 3)

    def test_kernel_not_square(self):
        with pytest.raises(DimensionError):
            nn.ConvSpec(np.ones((3, 2)))

    def test_kernel_range(self):
        with pytest.raises(ValueError):
            nn.ConvSpec(np.full((3, 3), 2.0))

    def test_mnist_conv_keeps_784(self):
        assert nn.mnist_conv_spec().output_shape(28, 28) == (28, 28)

    def test_grid_mismatch(self):
        spec = nn.DetectionSpec(28, 10, (0,), np.zeros((1, 28, 28)), (0.0,))
        with pytest.raises(DimensionError):
            spec.grid(70, 70)

    def test_patch_count(self):
        spec = nn.DetectionSpec(28, 10, (0,), np.zeros((1, 28, 28)), (0.0,))
        assert spec.n_patches(68, 68) == 25


class TestConvPhotonic:
    def test_delta_identity(self, quiet_engine, rng):
        k = np.zeros((3, 3))
        k[1, 1] = 1
        img = ImageTensor.from_array(rng.uniform(size=(7, 7)))
        out = nn.conv2d_photonic(img, nn.ConvSpec(k, padding=1), quiet_engine)
        np.testing.assert_allclose(out.raw(), img.to_array(), rtol=1e-9, atol=1e-12)

    def test_laplacian_constant_interior(self, quiet_engine):
        img = ImageTensor.from_array(np.full((10, 10), 0.6))
        out = nn.conv2d_photonic(img, nn.edge_spec(), quiet_engine).raw()
        ref = conv2d_digital(img, nn.edge_spec())
        assert np.abs(out[1:-1, 1:-1]).max() < 1e-12
        assert not ref[1:-1, 1:-1].any()

    def test_matches_oracle(self, quiet_engine, rng):
        img = ImageTensor.from_array(rng.uniform(size=(12, 12)))
        spec = nn.ConvSpec(rng.uniform(-1, 1, (3, 3)), padding=1)
        out = nn.conv2d_photonic(img, spec, quiet_engine).raw()
        np.testing.assert_allclose(out, conv2d_digital(img, spec), rtol=1e-9, atol=1e-12)

    def test_rescale_bounds(self, quiet_engine, rng):
        img = ImageTensor.from_array(rng.uniform(size=(9, 9)))
        out = nn.conv2d_photonic(img, nn.edge_spec(), quiet_engine)
        assert out.pixels.min() == 0.0 and out.pixels.max() == 1.0


class TestFcPhotonic:
    def test_scaled_identity(self, quiet_engine, rng):
        v = rng.uniform(size=6)
        out = nn.fc_forward_photonic(v, nn.FcSpec(0.5 * np.eye(6)), quiet_engine)
        np.testing.assert_allclose(out, 0.5 * v, rtol=1e-9)

    def test_matches_oracle(self, quiet_engine, rng):
        v = rng.uniform(size=784)
        spec = nn.FcSpec(rng.uniform(-1, 1, (10, 784)))
        np.testing.assert_allclose(nn.fc_forward_photonic(v, spec, quiet_engine),
                                   fc_digital(v, spec), rtol=1e-9)

    def test_width_mismatch(self, quiet_engine):
        with pytest.raises(DimensionError):
            nn.fc_forward_photonic(np.ones(5), nn.FcSpec(np.eye(4)), quiet_engine)


class TestClassify:
    def test_max(self):
        assert nn.classify([0.1, 0.9, 0.3]) == 1

    def test_tie(self):
        assert nn.classify([0.4, 0.4, 0.4]) == 0

    def test_single(self):
        assert nn.classify([-3.0]) == 0

    def test_nan(self):
        with pytest.raises(NumericError):
            nn.classify([0.1, np.nan])

    def test_empty(self):
        with pytest.raises(DimensionError):
            nn.classify([])


class TestTraining:
    def test_memorizes_one_per_class(self, rng):
        images = rng.uniform(size=(10, 28, 28))
        labels = np.arange(10)
        fc = nn.train_fc_digital(images, labels, nn.mnist_conv_spec(), epochs=300,
                                 learning_rate=1.0)
        pred = np.argmax(nn.digital_scores(images, nn.mnist_conv_spec(), fc), axis=1)
        np.testing.assert_array_equal(pred, labels)

    def test_empty(self):
        with pytest.raises(DataError):
            nn.train_fc_digital(np.zeros((0, 28, 28)), np.zeros(0), nn.mnist_conv_spec())

    def test_weights_in_range(self, mnist_model):
        _, fc = mnist_model
        assert fc.weights.shape == (10, 784)
        assert np.abs(fc.weights).max() == 1.0

    def test_renormalize_keeps_decisions(self, mnist_model, mnist_test):
        conv, fc = mnist_model
        images, _, _ = mnist_test
        feats = nn.conv_features_digital(images, conv)
        scaled = feats @ (0.37 * fc.weights).T
        np.testing.assert_array_equal(np.argmax(scaled, 1), np.argmax(feats @ fc.weights.T, 1))

    def test_held_out_accuracy(self, mnist_model):
        from tempocomp.formats import load_mnist
        conv, fc = mnist_model
        images, labels = load_mnist("train", limit=11000)
        pred = np.argmax(nn.digital_scores(images[10000:], conv, fc), axis=1)
        assert np.mean(pred == labels[10000:]) >= 0.90


class TestPhotonicMnist:
    def test_digit_zero_theoretical_features(self, mnist_model, quiet_engine):
        from tempocomp.formats import load_mnist
        conv, fc = mnist_model
        images, labels = load_mnist("test")
        img = images[ex.prototype_index(images, labels, 0)]
        scores = nn.photonic_scores(img, conv, fc, quiet_engine, photonic_features=False)
        assert nn.classify(scores) == 0

    def test_digit_seven_noisy_features(self, mnist_model, noisy_engine):
        from tempocomp.formats import load_mnist
        conv, fc = mnist_model
        images, labels = load_mnist("test")
        img = images[ex.prototype_index(images, labels, 7)]
        assert nn.classify(nn.photonic_scores(img, conv, fc, noisy_engine)) == 7

    def test_noiseless_parity_small(self, mnist_model, mnist_test, quiet_engine):
        conv, fc = mnist_model
        images, labels, _ = mnist_test
        res = ex.run_mnist_inference(images[:10], labels[:10], conv, fc, quiet_engine)
        np.testing.assert_array_equal(res.photonic, res.digital)


class TestDetection:
    def test_25_patches(self):
        patches = nn.window_patches(np.zeros((68, 68)),
                                    nn.DetectionSpec(28, 10, (0,), np.zeros((1, 28, 28)), (0.0,)))
        assert patches.shape == (25, 784)

    def test_blank_canvas(self, detector, quiet_engine):
        blank = ImageTensor.from_array(np.zeros((68, 68)))
        assert nn.sliding_window_detect(blank, detector, quiet_engine) == []
        assert min(detector.thresholds) > 0

    def test_digit_zero_patch_11(self, detector, quiet_engine):
        from tempocomp.formats import load_mnist
        images, labels = load_mnist("test")
        canvas = ex.build_detection_canvas(images, labels, layout={0: 11})
        hits = nn.sliding_window_detect(canvas, detector, quiet_engine)
        assert [(d.label, d.patch_index) for d in hits] == [(0, 11)]

    def test_matrix_matches_oracle(self, detector, quiet_engine, rng):
        canvas = ImageTensor.from_array(rng.uniform(size=(68, 68)))
        np.testing.assert_allclose(nn.decision_matrix_photonic(canvas, detector, quiet_engine),
                                   detect_digital(canvas, detector), atol=1e-9)

    def test_threshold_midpoint(self):
        scores = np.array([0.1, 0.5, 0.9, 1.3])
        assert nn.threshold_midpoint(scores, np.array([False, False, True, True])) == 0.7

    def test_threshold_needs_both_classes(self):
        with pytest.raises(DataError):
            nn.threshold_midpoint(np.ones(3), np.ones(3, bool))

    def test_place_digits(self):
        canvas = nn.place_digits([np.ones((28, 28))], [(2, 0)])
        assert canvas[20:48, 0:28].all() and canvas.sum() == 784
