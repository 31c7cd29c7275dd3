import json
import pytest

from tempocomp.config import (RunConfig, engine_from_dict, engine_to_dict, load_run_config,
                              parse_run_config)
from tempocomp.devices import Bias, Fidelity, IntegratorMode
from tempocomp.engine import DEFAULT_DETECTOR_NOISE_FRACTION, EngineConfig
from tempocomp.errors import ConfigurationError


def test_defaults_materialized():
    doc = RunConfig().to_dict()
    assert doc["engine"]["mzm_weight"]["bias"] == "quadrature"
    assert doc["engine"]["bpd"]["bandwidth"] == 150e6
    assert doc["engine"]["scheme"] == {"symbol_rate": 10e9, "samples_per_symbol": 8,
                                       "guard_symbols": 4}


def test_round_trip_default():
    cfg = RunConfig()
    assert parse_run_config(json.loads(cfg.dumps())).dumps() == cfg.dumps()


def test_round_trip_custom():
    doc = {"engine": {"fidelity": "physical", "mzm_data": {"v_pi": 4.0},
                      "bpd": {"integrator_mode": "leaky_rc"}, "sync_offset": 3},
           "seed": 11, "noise": False}
    cfg = parse_run_config(doc)
    again = parse_run_config(json.loads(cfg.dumps()))
    assert again.dumps() == cfg.dumps()
    assert again.engine.fidelity is Fidelity.PHYSICAL
    assert again.engine.bpd.integrator_mode is IntegratorMode.LEAKY_RC
    assert again.engine.mzm_data.v_pi == 4.0 and again.engine.mzm_data.bias is Bias.NULL_POINT


def test_partial_section_keeps_defaults():
    cfg = engine_from_dict({"mzm_weight": {"v_pi": 4.0}})
    assert cfg.mzm_weight.bias is Bias.QUADRATURE_POINT


def test_noise_default_scales_with_laser():
    cfg = engine_from_dict({"laser": {"intensity_in": 4e-3}})
    assert cfg.noise.detector_noise_std == pytest.approx(DEFAULT_DETECTOR_NOISE_FRACTION * 1e-3)


def test_engine_dict_round_trip():
    cfg = EngineConfig()
    assert engine_from_dict(engine_to_dict(cfg)) == cfg


@pytest.mark.parametrize("doc", [{"bogus": 1}, {"engine": {"bogus": 1}},
                                 {"engine": {"bpd": {"resistance": 1}}}])
def test_unknown_keys(doc):
    with pytest.raises(ConfigurationError, match="bogus|resistance"):
        parse_run_config(doc)


def test_bad_enum():
    with pytest.raises(ConfigurationError):
        parse_run_config({"engine": {"fidelity": "exact"}})


def test_invalid_value():
    with pytest.raises(ConfigurationError):
        parse_run_config({"engine": {"voa": {"alpha": 2.0}}})


def test_missing_path():
    with pytest.raises(ConfigurationError, match="image"):
        parse_run_config({"image": "/does/not/exist.pgm"})


def test_existing_path(tmp_path):
    (tmp_path / "x.pgm").write_bytes(b"")
    assert parse_run_config({"image": str(tmp_path / "x.pgm")}).image.endswith("x.pgm")


def test_noise_off_and_seed():
    eng = parse_run_config({"noise": False, "seed": 5}).effective_engine()
    assert not eng.noise.enabled and eng.noise.rng_seed == 5


def test_bad_json(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_run_config(tmp_path / "c.json")

