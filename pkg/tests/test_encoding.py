import math

import numpy as np
import pytest

from tempocomp.encoding import (EncodingScheme, ImageTensor, Waveform, WaveformKind,
                                decode_vector, encode_frames, encode_vector, flatten_image,
                                normalize_pixels, predistort, predistort_values, read_tcwf,
                                read_waveform_csv, write_tcwf, write_waveform_csv)
from tempocomp.errors import DimensionError, FormatError, RangeError


class TestWaveform:
    def test_rejects_nan(self):
        with pytest.raises(RangeError):
            Waveform([0.0, np.nan], 1.0, WaveformKind.VOLTAGE)

    def test_rejects_negative_intensity(self):
        with pytest.raises(RangeError):
            Waveform([0.1, -1e-9], 1.0, WaveformKind.OPTICAL_INTENSITY)

    def test_negative_voltage_is_fine(self):
        assert Waveform([-1.0], 1.0, WaveformKind.VOLTAGE).samples[0] == -1.0

    @pytest.mark.parametrize("rate", [0.0, -1.0])
    def test_rate_must_be_positive(self, rate):
        with pytest.raises(RangeError):
            Waveform([0.0], rate, WaveformKind.VOLTAGE)

    def test_samples_read_only(self):
        w = Waveform([1.0, 2.0], 1.0, WaveformKind.VOLTAGE)
        with pytest.raises(ValueError):
            w.samples[0] = 5.0

    def test_times(self):
        w = Waveform(np.zeros(4), 2.0, WaveformKind.VOLTAGE)
        np.testing.assert_allclose(w.times, [0, 0.5, 1.0, 1.5])


class TestNormalizePixels:
    @pytest.mark.parametrize("raw, expected", [(0, 0.0), (255, 1.0), (51, 0.2)])
    def test_values(self, raw, expected):
        assert normalize_pixels([raw], 1, 1).to_array()[0, 0] == expected

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            normalize_pixels([1, 2, 3], 2, 2)


class TestFlatten:
    def test_row_major(self):
        a, b, c, d = 0.1, 0.2, 0.3, 0.4
        img = ImageTensor.from_array([[a, b], [c, d]])
        np.testing.assert_array_equal(flatten_image(img), [a, b, c, d])

    def test_digit_size(self):
        assert flatten_image(ImageTensor.from_array(np.zeros((28, 28)))).shape == (784,)

    def test_single_pixel(self):
        np.testing.assert_array_equal(flatten_image(ImageTensor.from_array([[0.7]])), [0.7])


class TestEncode:
    def test_hold(self):
        w = encode_vector([1.0], EncodingScheme(1.0, 4, 0))
        np.testing.assert_array_equal(w.samples, [1, 1, 1, 1])

    def test_empty(self):
        assert len(encode_vector([], EncodingScheme())) == 0

    def test_guard_zeros(self):
        w = encode_vector([0.5, -0.5], EncodingScheme(1.0, 2, 1), WaveformKind.DRIVE_VOLTAGE)
        np.testing.assert_array_equal(w.samples, [0.5, 0.5, -0.5, -0.5, 0, 0])

    def test_sample_rate(self):
        s = EncodingScheme(10e9, 8, 4)
        assert encode_vector([0.2], s).sample_rate == 80e9

    def test_intensity_range_error_names_index(self):
        with pytest.raises(RangeError, match="3"):
            encode_frames([[0.0, 0.5, 1.0, 1.5]], EncodingScheme())

    def test_drive_range(self):
        with pytest.raises(RangeError):
            encode_frames([[-1.01]], EncodingScheme(), WaveformKind.DRIVE_VOLTAGE)

    def test_round_trip(self, rng):
        s = EncodingScheme()
        v = rng.uniform(0, 1, 37)
        np.testing.assert_array_equal(decode_vector(encode_vector(v, s), s, v.size), v)


class TestPredistort:
    @pytest.mark.parametrize("m, v_pi, expected", [(0.0, 2.0, 0.0), (0.0, 3.5, 0.0),
                                                   (1.0, 3.5, 3.5), (0.5, 3.5, 1.75)])
    def test_values(self, m, v_pi, expected):
        assert predistort_values([m], v_pi)[0] == pytest.approx(expected, abs=1e-15)

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            predistort_values([1.1], 3.5)

    def test_waveform_kind(self):
        w = predistort(encode_vector([0.25], EncodingScheme()), 3.5)
        assert w.kind is WaveformKind.DRIVE_VOLTAGE
        assert math.sin(math.pi * w.samples[0] / 7.0) ** 2 == pytest.approx(0.25, abs=1e-15)


class TestWaveformFiles:
    def test_tcwf_round_trip(self, tmp_path, rng):
        w = Waveform(rng.normal(size=50), 80e9, WaveformKind.PHOTOCURRENT)
        write_tcwf(w, tmp_path / "w.tcwf")
        back = read_tcwf(tmp_path / "w.tcwf")
        assert back.kind is w.kind and back.sample_rate == w.sample_rate
        np.testing.assert_array_equal(back.samples, w.samples)

    def test_tcwf_bad_magic(self, tmp_path):
        (tmp_path / "x.tcwf").write_bytes(b"NOPE" + bytes(12))
        with pytest.raises(FormatError):
            read_tcwf(tmp_path / "x.tcwf")

    def test_tcwf_truncated(self, tmp_path):
        w = Waveform(np.ones(4), 1.0, WaveformKind.VOLTAGE)
        write_tcwf(w, tmp_path / "w.tcwf")
        blob = (tmp_path / "w.tcwf").read_bytes()
        (tmp_path / "w.tcwf").write_bytes(blob[:-3])
        with pytest.raises(FormatError):
            read_tcwf(tmp_path / "w.tcwf")

    def test_csv_round_trip(self, tmp_path, rng):
        w = Waveform(rng.normal(size=20), 8e9, WaveformKind.VOLTAGE)
        write_waveform_csv(w, tmp_path / "w.csv")
        back = read_waveform_csv(tmp_path / "w.csv")
        np.testing.assert_array_equal(back.samples, w.samples)
        assert back.sample_rate == pytest.approx(w.sample_rate, rel=1e-9)
