import math

import pytest

from kerrpurify.config import ConfigError, RunConfig, parse_quantity
from kerrpurify.kerr import TWO_PI, chi_from_params
from kerrpurify.protocol import RuleSet


class TestParseQuantity:
    def test_frequency_units(self):
        assert parse_quantity("300 MHz", "frequency") == 300e6
        assert parse_quantity("1.5 GHz", "frequency") == 1.5e9
        assert parse_quantity("2 kHz", "frequency") == 2e3

    def test_time_units(self):
        assert parse_quantity("10 ns", "time") == pytest.approx(10e-9, rel=1e-12)
        assert parse_quantity("20 us", "time") == pytest.approx(20e-6, rel=1e-12)
        assert parse_quantity("20 µs", "time") == pytest.approx(20e-6, rel=1e-12)

    def test_bare_number(self):
        assert parse_quantity("42", "frequency") == 42.0

    def test_bad_unit_rejected(self):
        with pytest.raises(ConfigError):
            parse_quantity("3 parsec", "time", "kappa1_inv")

    def test_garbage_rejected(self):
        with pytest.raises(ConfigError):
            parse_quantity("MHz 300", "frequency")


class TestDefaults:
    def test_reference_chi(self):
        cfg = RunConfig.defaults()
        chi = chi_from_params(cfg.kerr_params())
        assert abs(chi / TWO_PI - (-2.4e6)) < 1.0

    def test_frequencies_scaled_by_two_pi(self):
        cfg = RunConfig.defaults()
        assert abs(cfg.kerr_params().g1 - TWO_PI * 300e6) < 1.0

    def test_angular_flag_disables_scaling(self):
        cfg = RunConfig.defaults().with_overrides(frequencies_are_angular="true")
        assert abs(cfg.kerr_params().g1 - 300e6) < 1.0

    def test_typed_accessors(self):
        cfg = RunConfig.defaults()
        assert cfg.f == 0.8
        assert cfg.alpha == math.inf
        assert cfg.rule_set is RuleSet.IDEAL_PHASE
        assert cfg.sweep_initial_states == ((1, 0), (1, 1))
        assert cfg.time_list("kappa2_inv_sweep")[0] == 2e-9


class TestValidation:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_mapping({"notakey": "1"})

    def test_bad_f_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.defaults().with_overrides(f="0.4")

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.defaults().with_overrides(mode="maximal_overdrive")

    def test_bad_rule_set_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.defaults().with_overrides(rule_set="vibes")

    def test_bad_sweep_state_rejected(self):
        cfg = RunConfig.defaults().with_overrides(sweep_initial_states="1x")
        with pytest.raises(ConfigError):
            cfg.sweep_initial_states


class TestFiles:
    def test_parse_file_with_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nf = 0.9   # inline\n\nalpha = 24.7\n")
        cfg = RunConfig.from_file(path)
        assert cfg.f == 0.9
        assert cfg.alpha == 24.7

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("just some words\n")
        with pytest.raises(ConfigError):
            RunConfig.from_file(path)

    def test_manifest_round_trips(self, tmp_path):
        cfg = RunConfig.defaults().with_overrides(f="0.85", seed="99")
        path = tmp_path / "manifest.txt"
        path.write_text(cfg.manifest_text())
        again = RunConfig.from_file(path)
        assert again == cfg
        assert again.manifest_text() == cfg.manifest_text()
