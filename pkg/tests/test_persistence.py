import numpy as np
import pytest

from vibdenoise.exceptions import ChecksumError, ConfigError, DataError
from vibdenoise.persistence import (
    ExperimentConfig,
    checkpoint_bytes,
    dataset_bytes,
    format_config,
    parse_checkpoint,
    parse_config,
    parse_dataset,
    read_history_csv,
    read_table,
    write_history_csv,
    write_signal_csv,
)
from vibdenoise.signals import NoiseSpec, SignalSpec, add_gaussian_noise, build_dataset, synth_clean
from vibdenoise.transformer import ModelConfig, init_params

CFG = ModelConfig(seq_len=8, d_model=8, n_heads=2, d_ff=8, n_blocks=2)


def test_checkpoint_roundtrip_bit_exact():
    params = init_params(CFG, 3)
    blob = checkpoint_bytes(params, CFG)
    assert blob[:4] == b"VCLN"
    loaded, cfg = parse_checkpoint(blob)
    assert cfg == CFG
    assert list(loaded) == list(params)
    assert all(loaded[k].tobytes() == params[k].tobytes() for k in params)
    assert checkpoint_bytes(loaded, cfg) == blob


def test_checkpoint_corruption_detected():
    blob = bytearray(checkpoint_bytes(init_params(CFG, 0), CFG))
    blob[len(blob) // 2] ^= 0x01
    with pytest.raises(ChecksumError):
        parse_checkpoint(bytes(blob))


def test_checkpoint_bad_magic():
    with pytest.raises(DataError):
        parse_checkpoint(b"XXXX" + b"\0" * 40)


def test_dataset_roundtrip_and_determinism():
    clean = synth_clean(SignalSpec(duration=0.5))
    a = build_dataset(clean, NoiseSpec("gaussian", 0.1, 4), 64, 32)
    b = build_dataset(clean, NoiseSpec("gaussian", 0.1, 4), 64, 32)
    assert dataset_bytes(a) == dataset_bytes(b)
    back = parse_dataset(dataset_bytes(a))
    for name in ("noisy", "clean", "means", "stds"):
        assert getattr(back, name).tobytes() == getattr(a, name).tobytes()


def test_dataset_checksum():
    blob = bytearray(dataset_bytes(build_dataset(synth_clean(SignalSpec(duration=0.2)), NoiseSpec(), 50, 50)))
    blob[20] ^= 0xFF
    with pytest.raises(ChecksumError):
        parse_dataset(bytes(blob))


def test_signal_csv_roundtrip(tmp_path):
    clean = synth_clean(SignalSpec(duration=0.1))
    noisy = add_gaussian_noise(clean, NoiseSpec("gaussian", 0.1, 0))
    path = tmp_path / "sig.csv"
    write_signal_csv(path, clean, noisy)
    assert path.read_text().splitlines()[0] == "t,clean,noisy"
    table = read_table(path)
    assert table["clean"].tobytes() == clean.samples.tobytes()
    assert table["noisy"].tobytes() == noisy.samples.tobytes()


def test_history_csv(tmp_path):
    hist = [(1.5, 1.25), (0.1 / 3, 2 ** -30)]
    path = tmp_path / "h.csv"
    write_history_csv(path, hist)
    assert path.read_text().splitlines()[0] == "epoch,train_loss,val_loss"
    assert read_history_csv(path) == hist


def test_config_defaults():
    cfg = parse_config("")
    assert cfg.model == ModelConfig()
    assert cfg.window_len == cfg.hop == 128
    assert cfg.train.epochs == 50 and cfg.train.batch_size == 32 and cfg.train.val_fraction == 0.2


def test_config_parse_values():
    text = """
    # comment
    signal.components = 1 5 0; 0.5 20 1.5
    noise.kind = brownian   # trailing comment
    noise.variance = 0.2
    model.seq_len = 32
    model.d_model = 16
    model.n_heads = 4
    train.learning_rate = 0.01
    """
    cfg = parse_config(text)
    assert cfg.signal.components == ((1.0, 5.0, 0.0), (0.5, 20.0, 1.5))
    assert cfg.noise.kind == "brownian" and cfg.noise.variance == 0.2
    assert cfg.window_len == 32 and cfg.model.d_head == 4
    assert cfg.train.learning_rate == 0.01


def test_config_roundtrip():
    cfg = parse_config("model.seq_len = 16\nwindow.hop = 4\nnoise.seed = 9\n")
    assert parse_config(format_config(cfg)) == cfg
    assert parse_config(format_config(ExperimentConfig())) == ExperimentConfig()


@pytest.mark.parametrize("text,line", [
    ("model.seq_len = 4\nmodel.d_modle = 8\n", 2),
    ("\n\nnoise.variance = abc\n", 3),
    ("train.epochs 5\n", 1),
    ("train.epochs = 1\ntrain.epochs = 2\n", 2),
])
def test_config_errors_report_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.lineno == line
    assert f"line {line}" in str(info.value)


def test_config_seed_env_fallback(monkeypatch):
    monkeypatch.setenv("VCLN_SEED", "77")
    cfg = parse_config("")
    assert cfg.noise.seed == 77 and cfg.train.seed == 77
    assert parse_config("train.seed = 3").train.seed == 3
