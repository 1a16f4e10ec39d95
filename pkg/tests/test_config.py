import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldsim.config import (
    CavitySpec,
    ConfigError,
    ExperimentConfig,
    LeakageCoeffs,
    load_config,
    serialize,
    validate,
)


def test_empty_overrides_give_nominal_values():
    cfg = load_config(b"{}")
    assert cfg.zeeman_splitting == pytest.approx(2.4e6)
    assert cfg.spin_wave_lifetime == pytest.approx(0.27e-3)
    assert cfg.detection_efficiency == pytest.approx(0.096)
    assert cfg.escape_efficiency == pytest.approx(0.62)
    assert cfg.mean_write_excitations == pytest.approx(0.23)
    assert cfg.write_efficiency == pytest.approx(0.63)
    assert cfg.cycles_per_sequence == 55
    assert [c.fwhm for c in cfg.filter_chain] == [66e3, 900e3]
    assert [c.peak_transmission for c in cfg.filter_chain] == [0.66, 0.90]


def test_fraction_out_of_bounds_rejected():
    with pytest.raises(ConfigError, match="detection_efficiency"):
        load_config(json.dumps({"detection_efficiency": 1.2}))


def test_empty_filter_chain_is_valid():
    cfg = load_config(json.dumps({"filter_chain": []}))
    assert cfg.filter_chain == ()
    assert validate(cfg) == []


def test_unknown_keys_are_an_error():
    with pytest.raises(ConfigError, match="detection_efficency"):
        load_config(json.dumps({"detection_efficency": 0.1}))


def test_malformed_json_is_a_parse_error():
    with pytest.raises(ConfigError, match="JSON"):
        load_config(b"{nope")


def test_validate_nominal_is_clean():
    assert validate(ExperimentConfig()) == []


def test_validate_negative_delay():
    violations = validate(ExperimentConfig(write_read_delay=-1e-6))
    assert len(violations) == 1
    assert "write_read_delay" in violations[0]


def test_validate_paper_write_point():
    cfg = ExperimentConfig(write_efficiency=0.63, mean_write_excitations=0.23)
    assert validate(cfg) == []


def test_validate_is_pure():
    cfg = ExperimentConfig(write_read_delay=-2e-6, dark_rate=-1.0)
    assert validate(cfg) == validate(cfg)


def test_validate_flags_bad_cavity():
    cfg = ExperimentConfig(filter_chain=(CavitySpec(fwhm=-1.0, peak_transmission=2.0),))
    violations = validate(cfg)
    assert any("filter_chain[0].fwhm" in v for v in violations)
    assert any("filter_chain[0].peak_transmission" in v for v in violations)


def test_roundtrip_nominal():
    cfg = ExperimentConfig()
    assert load_config(serialize(cfg)) == cfg


def test_roundtrip_with_overrides():
    cfg = ExperimentConfig(
        write_read_delay=123e-6,
        leakage_coeffs=LeakageCoeffs(l0=3.5, l1=2e4),
        filter_chain=(CavitySpec(fwhm=50e3, peak_transmission=0.5),),
    )
    again = load_config(serialize(cfg))
    assert again == cfg
    assert load_config(serialize(again)) == again


@settings(max_examples=40, deadline=None)
@given(
    delay=st.floats(0.0, 1e-3),
    mu=st.floats(0.0, 2.0),
    eps=st.floats(0.0, 1.0),
    eta=st.floats(0.01, 1.0),
    seed=st.integers(0, 2**63),
    fwhm=st.floats(1e3, 5e6),
    trans=st.floats(0.01, 1.0),
)
def test_roundtrip_property(delay, mu, eps, eta, seed, fwhm, trans):
    cfg = ExperimentConfig(
        write_read_delay=delay,
        mean_write_excitations=mu,
        write_efficiency=eps,
        detection_efficiency=eta,
        rng_master_seed=seed,
        filter_chain=(CavitySpec(fwhm=fwhm, peak_transmission=trans),),
    )
    assert load_config(serialize(cfg)) == cfg


def test_time_series_from_file(tmp_path):
    doc = {
        "drive_profile": [[0.0, 0.0], [1e-5, 1.0], [2e-4, 1.0]],
        "fwm_couplings": {"chi_r": 50.0, "alpha_table": [[0.0, 1.1], [2e-4, 1.2]]},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    with open(path, "rb") as fh:
        cfg = load_config(fh)
    assert cfg.fwm_couplings.chi_r == 50.0
    assert cfg.fwm_couplings.alpha_table(1e-4) == pytest.approx(1.15)
    assert cfg.drive_profile(5e-6) == pytest.approx(0.5)


def test_profile_must_cover_read_window():
    doc = {"drive_profile": [[0.0, 1.0], [1e-4, 1.0]]}  # read lasts 2e-4
    with pytest.raises(ConfigError, match="drive_profile"):
        load_config(json.dumps(doc))


def test_config_is_immutable():
    cfg = ExperimentConfig()
    with pytest.raises(Exception):
        cfg.dark_rate = 5.0
