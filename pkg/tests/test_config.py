import json

import pytest

from matchfuse.config import AppConfig, ensure_data_dir, load_config
from matchfuse.model import DomainError


class TestLoadConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg.k == 3
        assert cfg.brand_sim == 0.85
        assert cfg.dist_threshold == 0.2

    def test_file_values(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"k": 5, "data_dir": "elsewhere"}))
        cfg = load_config(path)
        assert cfg.k == 5
        assert cfg.data_dir == "elsewhere"

    def test_env_overrides_file(self, tmp_path, monkeypatch):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"k": 5}))
        monkeypatch.setenv("MATCHFUSE_K", "7")
        monkeypatch.setenv("MATCHFUSE_BRAND_SIM", "0.9")
        monkeypatch.setenv("MATCHFUSE_EXPERIMENT_MODE", "true")
        cfg = load_config(path)
        assert cfg.k == 7
        assert cfg.brand_sim == 0.9
        assert cfg.experiment_mode is True

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"knn": 5}))
        with pytest.raises(DomainError, match="unknown config"):
            load_config(path)

    def test_invalid_values_rejected(self):
        with pytest.raises(DomainError):
            AppConfig(k=0)
        with pytest.raises(DomainError):
            AppConfig(band_low=0.9, band_high=0.8)
        with pytest.raises(DomainError):
            AppConfig(dist_threshold=3.0)
        with pytest.raises(DomainError):
            AppConfig(p_model=0.0)

    def test_ensure_data_dir(self, tmp_path):
        cfg = AppConfig(data_dir=str(tmp_path / "nested" / "dir"))
        path = ensure_data_dir(cfg)
        assert path.is_dir()
