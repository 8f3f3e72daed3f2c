import numpy as np
import pandas as pd
import pytest
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pydantic import ValidationError

from src.storage import ResultStorage, atomic_write_bytes
from src.utils.config import Settings, get_settings
from src.utils.helpers import (
    STREAM_CLIENT_ROUND,
    STREAM_MODEL_INIT,
    batched,
    derive_rng,
    format_duration,
    last_mean,
    lr_tag,
)


# ----------------------------------------------------------------------
# Settings
# ----------------------------------------------------------------------
def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("FEDSPLIT_THREADS", "4")
    monkeypatch.setenv("FEDSPLIT_RECORD_TIMING", "true")
    settings = Settings()
    assert settings.threads == 4
    assert settings.record_timing is True
    assert settings.effective_threads() == 4
    assert settings.effective_threads(2) == 2


def test_settings_defaults(monkeypatch):
    monkeypatch.delenv("FEDSPLIT_THREADS", raising=False)
    settings = Settings(_env_file=None)
    assert settings.threads == 1
    assert settings.eval_batch_size == 512
    assert settings.output_dir == "results"


def test_settings_reject_zero_threads(monkeypatch):
    monkeypatch.setenv("FEDSPLIT_THREADS", "0")
    with pytest.raises(ValidationError):
        Settings()


def test_get_settings_is_cached():
    assert get_settings() is get_settings()


# ----------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------
def test_derive_rng_streams():
    a = derive_rng(7, STREAM_CLIENT_ROUND, 3, 1).random(4)
    np.testing.assert_array_equal(a, derive_rng(7, STREAM_CLIENT_ROUND, 3, 1).random(4))
    assert not np.array_equal(a, derive_rng(7, STREAM_CLIENT_ROUND, 3, 2).random(4))
    assert not np.array_equal(a, derive_rng(8, STREAM_CLIENT_ROUND, 3, 1).random(4))
    assert not np.array_equal(derive_rng(7, STREAM_MODEL_INIT).random(4), derive_rng(7, STREAM_CLIENT_ROUND).random(4))


def test_derive_rng_accepts_large_seeds():
    derive_rng(2 ** 63 - 1, STREAM_MODEL_INIT).random()


def test_batched_keeps_order():
    batches = list(batched([5, 1, 4, 2, 3], 2))
    assert [b.tolist() for b in batches] == [[5, 1], [4, 2], [3]]
    assert list(batched([], 3)) == []


def test_last_mean():
    assert last_mean([0.0, 0.2, 0.4, 0.6, 0.8, 1.0]) == pytest.approx(0.6)
    assert last_mean([1.0, 3.0], n=5) == pytest.approx(2.0)


def test_lr_tag():
    assert lr_tag(0.05) == "0.05"
    assert lr_tag(1) == "1.0"


def test_format_duration():
    assert format_duration(65) == "01:05"
    assert format_duration(3725) == "01:02:05"


# ----------------------------------------------------------------------
# Storage
# ----------------------------------------------------------------------
def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "nested" / "out.txt"
    atomic_write_bytes(target, b"first")
    atomic_write_bytes(target, b"second")
    assert target.read_bytes() == b"second"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_frame_round_trip(tmp_path):
    storage = ResultStorage(tmp_path / "results")
    frame = pd.DataFrame({"round": [0, 10], "local_acc": [0.25, 0.5]})
    path = storage.write_frame("metrics.csv", frame)
    assert path.read_text() == "round,local_acc\n0,0.25\n10,0.5\n"
    pd.testing.assert_frame_equal(storage.read_frame("metrics.csv"), frame)


def test_toml_output(tmp_path):
    storage = ResultStorage(tmp_path)
    storage.write_toml("effective_config.toml", {"seed": 7, "federation": {"lrs": [0.01, 0.05]}})
    with open(storage.path("effective_config.toml"), "rb") as f:
        assert tomllib.load(f) == {"seed": 7, "federation": {"lrs": [0.01, 0.05]}}
