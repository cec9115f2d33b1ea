"""Tests for src/utils/settings.py"""

import os

import pytest

from src.utils.settings import (
    DEFAULT_CONFIG_PATH,
    Settings,
    SettingsException,
    get_settings,
    load_settings,
)


pytestmark = pytest.mark.usefixtures("fresh_settings")


class TestLoadSettings:
    """Tests for load_settings function."""

    def test_bundled_config(self):
        """The shipped config.yaml validates and carries the documented defaults."""
        settings = load_settings(DEFAULT_CONFIG_PATH)
        assert settings.powerflow.tol == 1e-10
        assert settings.powerflow.max_iter == 500
        assert settings.robust.polytope_m == [2, 4, 8, 16, 32]
        assert settings.robust.lgr_max_iter == 400
        assert settings.sampling.seed == 7
        assert settings.bisection.grid_points == 9
        assert settings.cli.format == "csv"

    def test_missing_file_uses_defaults(self, tmp_path):
        """A missing file yields the built-in defaults."""
        settings = load_settings(tmp_path / "absent.yaml")
        assert settings == Settings()

    def test_partial_file(self, tmp_path):
        """Sections not present keep their defaults."""
        path = tmp_path / "config.yaml"
        path.write_text("sampling:\n  samples: 1000\n")
        settings = load_settings(path)
        assert settings.sampling.samples == 1000
        assert settings.sampling.batch_size == 65536
        assert settings.powerflow.max_iter == 500

    def test_invalid_yaml(self, tmp_path):
        """Malformed YAML raises SettingsException."""
        path = tmp_path / "config.yaml"
        path.write_text("powerflow: [unclosed\n")
        with pytest.raises(SettingsException):
            load_settings(path)

    def test_invalid_value(self, tmp_path):
        """Out-of-range values fail validation."""
        path = tmp_path / "config.yaml"
        path.write_text("powerflow:\n  tol: -1\n")
        with pytest.raises(SettingsException, match="Invalid configuration"):
            load_settings(path)

    def test_env_overrides(self, tmp_path, mocker):
        """BALANCIBILITY_THREADS and BALANCIBILITY_SEED override single values."""
        mocker.patch.dict(os.environ, {'BALANCIBILITY_THREADS': '4', 'BALANCIBILITY_SEED': '123'})
        settings = load_settings(tmp_path / "absent.yaml")
        assert settings.cli.threads == 4
        assert settings.sampling.seed == 123

    def test_config_path_env(self, tmp_path, mocker):
        """BALANCIBILITY_CONFIG selects the file when no path is given."""
        path = tmp_path / "alt.yaml"
        path.write_text("cli:\n  format: json\n")
        mocker.patch.dict(os.environ, {'BALANCIBILITY_CONFIG': str(path)})
        settings = load_settings()
        assert settings.cli.format == "json"


class TestGetSettings:
    """Tests for the cached accessor."""

    def test_cached(self):
        """Repeated calls return the same object."""
        assert get_settings() is get_settings()

    def test_cache_clear_rereads(self, tmp_path, mocker):
        """Clearing the cache picks up a new environment."""
        path = tmp_path / "alt.yaml"
        path.write_text("sampling:\n  seed: 99\n")
        mocker.patch.dict(os.environ, {'BALANCIBILITY_CONFIG': str(path)})
        get_settings.cache_clear()
        assert get_settings().sampling.seed == 99
        get_settings.cache_clear()
