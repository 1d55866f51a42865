"""On-disk formats: checkpoints, datasets, signal/history CSVs and experiment configs.

Binary files are little-endian and end with an 8-byte BLAKE2b digest of
every preceding byte.

Checkpoint layout::

    b"VCLN" | u32 version | u32 n | n bytes ModelConfig JSON (sorted keys)
    | u32 tensor count | per tensor: u16 name length, name (utf-8),
      u32 rows, u32 cols, rows*cols float64 | 8-byte digest

Dataset layout::

    b"VCDS" | u32 version | u32 window_len | u32 count
    | count float64 means | count float64 stds
    | count*window_len float64 noisy | count*window_len float64 clean | digest
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .exceptions import ChecksumError, ConfigError, DataError
from .signals import DEFAULT_COMPONENTS, NoiseSpec, Signal, SignalSpec, WindowedDataset
from .training import TrainConfig
from .transformer import ModelConfig, check_params

CHECKPOINT_MAGIC = b"VCLN"
DATASET_MAGIC = b"VCDS"
FORMAT_VERSION = 1
_DIGEST = 8


def atomic_write(path, data):
    """Write ``data`` (bytes or str) to a temp file beside ``path``, then rename over it."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _digest(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=_DIGEST).digest()


def _seal(payload: bytes) -> bytes:
    return payload + _digest(payload)


def _unseal(blob: bytes, magic: bytes) -> memoryview:
    if len(blob) < len(magic) + 4 + _DIGEST or blob[: len(magic)] != magic:
        raise DataError(f"not a {magic.decode()} file")
    payload, digest = blob[:-_DIGEST], blob[-_DIGEST:]
    if _digest(payload) != digest:
        raise ChecksumError("checksum mismatch: file is corrupted")
    version = struct.unpack_from("<I", payload, len(magic))[0]
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported format version {version}")
    return memoryview(payload)[len(magic) + 4:]


def _f64(values) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def checkpoint_bytes(params: dict, config: ModelConfig) -> bytes:
    check_params(params, config)
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC + struct.pack("<I", FORMAT_VERSION))
    cfg = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":")).encode()
    buf.write(struct.pack("<I", len(cfg)) + cfg)
    buf.write(struct.pack("<I", len(params)))
    for name, tensor in params.items():
        encoded = name.encode("utf-8")
        rows, cols = tensor.shape
        buf.write(struct.pack("<H", len(encoded)) + encoded + struct.pack("<II", rows, cols))
        buf.write(_f64(tensor))
    return _seal(buf.getvalue())


def parse_checkpoint(blob: bytes):
    """Return ``(params, config)`` from checkpoint bytes."""
    body = _unseal(blob, CHECKPOINT_MAGIC)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(body):
            raise DataError("truncated checkpoint")
        out = body[pos:pos + n]
        pos += n
        return bytes(out)

    (cfg_len,) = struct.unpack("<I", take(4))
    config = ModelConfig(**json.loads(take(cfg_len)))
    (count,) = struct.unpack("<I", take(4))
    params = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        rows, cols = struct.unpack("<II", take(8))
        params[name] = np.frombuffer(take(8 * rows * cols), dtype="<f8").reshape(rows, cols).astype(np.float64)
    if pos != len(body):
        raise DataError("trailing bytes after checkpoint tensors")
    check_params(params, config)
    return params, config


def save_checkpoint(path, params: dict, config: ModelConfig):
    atomic_write(path, checkpoint_bytes(params, config))


def load_checkpoint(path):
    return parse_checkpoint(Path(path).read_bytes())


def dataset_bytes(dataset: WindowedDataset) -> bytes:
    n, length = dataset.noisy.shape
    head = DATASET_MAGIC + struct.pack("<III", FORMAT_VERSION, length, n)
    body = _f64(dataset.means) + _f64(dataset.stds) + _f64(dataset.noisy) + _f64(dataset.clean)
    return _seal(head + body)


def parse_dataset(blob: bytes) -> WindowedDataset:
    body = _unseal(blob, DATASET_MAGIC)
    length, n = struct.unpack_from("<II", body, 0)
    values = np.frombuffer(body[8:], dtype="<f8").astype(np.float64)
    if values.size != 2 * n + 2 * n * length:
        raise DataError("dataset payload size does not match its header")
    means, stds = values[:n], values[n:2 * n]
    noisy = values[2 * n:2 * n + n * length].reshape(n, length)
    clean = values[2 * n + n * length:].reshape(n, length)
    return WindowedDataset(noisy, clean, means, stds)


def save_dataset(path, dataset: WindowedDataset):
    atomic_write(path, dataset_bytes(dataset))


def load_dataset(path) -> WindowedDataset:
    return parse_dataset(Path(path).read_bytes())


def write_table(path, header, columns):
    """CSV with a header row; floats written with ``repr`` for exact round trips."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([v if isinstance(v, (int, np.integer)) else repr(float(v)) for v in row])
    atomic_write(path, buf.getvalue())


def read_table(path) -> dict:
    """Read a headed numeric CSV into ``{column: float array}`` (``#`` lines skipped)."""
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if line.strip() and not line.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows = list(reader)
    try:
        data = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    data = data.reshape(len(rows), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def write_signal_csv(path, clean: Signal, noisy: Signal | None = None):
    header = ["t", "clean"] + (["noisy"] if noisy is not None else [])
    cols = [clean.times, clean.samples] + ([noisy.samples] if noisy is not None else [])
    write_table(path, header, cols)


def write_history_csv(path, history):
    epochs = list(range(1, len(history) + 1))
    write_table(path, ["epoch", "train_loss", "val_loss"],
                [epochs, [h[0] for h in history], [h[1] for h in history]])


def read_history_csv(path):
    table = read_table(path)
    return list(zip(table["train_loss"].tolist(), table["val_loss"].tolist()))


@dataclass
class ExperimentConfig:
    signal: SignalSpec = field(default_factory=SignalSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    window_len: int = 128
    hop: int = 128
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str = "out"


def _parse_components(text):
    components = []
    for chunk in text.split(";"):
        if chunk.strip():
            parts = chunk.split()
            if len(parts) != 3:
                raise ValueError(f"component {chunk.strip()!r} needs 'amplitude frequency phase'")
            components.append(tuple(float(p) for p in parts))
    return tuple(components)


def _format_components(components):
    return "; ".join(" ".join(repr(v) for v in c) for c in components)


def _config_keys():
    keys = {
        "signal.components": ("signal", "components", _parse_components),
        "signal.duration": ("signal", "duration", float),
        "signal.sample_rate": ("signal", "sample_rate", float),
        "noise.kind": ("noise", "kind", str),
        "noise.variance": ("noise", "variance", float),
        "noise.seed": ("noise", "seed", int),
        "window.len": (None, "window_len", int),
        "window.hop": (None, "hop", int),
        "output.dir": (None, "output_dir", str),
    }
    casts = {"int": int, "float": float, "str": str}
    for section, cls in (("model", ModelConfig), ("train", TrainConfig)):
        for f in fields(cls):
            keys[f"{section}.{f.name}"] = (section, f.name, casts[f.type])
    return keys


def env_seed(default: int = 0) -> int:
    value = os.environ.get("VCLN_SEED")
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"VCLN_SEED must be an integer, got {value!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors.

    Seeds left unset fall back to ``$VCLN_SEED`` (then 0). ``window.len``
    defaults to ``model.seq_len`` and ``window.hop`` to ``window.len``.
    """
    keys = _config_keys()
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in keys:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = keys[key][2](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        lines[key] = lineno

    seed = env_seed()
    sections = {"signal": {}, "noise": {"seed": seed}, "model": {}, "train": {"seed": seed}, None: {}}
    for key, value in values.items():
        section, name, _ = keys[key]
        sections[section][name] = value

    def build(cls, section):
        try:
            return cls(**sections[section])
        except (ValueError, TypeError) as exc:
            keyed = [k for k in lines if k.startswith(section + ".")]
            raise ConfigError(str(exc), lines[keyed[0]] if keyed else None) from None

    signal = build(SignalSpec, "signal")
    noise = build(NoiseSpec, "noise")
    model = build(ModelConfig, "model")
    train = build(TrainConfig, "train")
    top = sections[None]
    window_len = top.get("window_len", model.seq_len)
    hop = top.get("hop", window_len)
    if window_len < 1 or hop < 1:
        raise ConfigError("window.len and window.hop must be >= 1",
                          lines.get("window.len") or lines.get("window.hop"))
    return ExperimentConfig(signal, noise, window_len, hop, model, train, top.get("output_dir", "out"))


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def format_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`; every key written explicitly."""
    lines = [
        f"signal.components = {_format_components(cfg.signal.components)}",
        f"signal.duration = {cfg.signal.duration!r}",
        f"signal.sample_rate = {cfg.signal.sample_rate!r}",
        f"noise.kind = {cfg.noise.kind}",
        f"noise.variance = {cfg.noise.variance!r}",
        f"noise.seed = {cfg.noise.seed}",
        f"window.len = {cfg.window_len}",
        f"window.hop = {cfg.hop}",
    ]
    for section, obj in (("model", cfg.model), ("train", cfg.train)):
        for f in fields(obj):
            value = getattr(obj, f.name)
            lines.append(f"{section}.{f.name} = {value!r}" if isinstance(value, float)
                         else f"{section}.{f.name} = {value}")
    lines.append(f"output.dir = {cfg.output_dir}")
    return "\n".join(lines) + "\n"


def with_variance(cfg: ExperimentConfig, variance: float) -> ExperimentConfig:
    return replace(cfg, noise=replace(cfg.noise, variance=variance))


__all__ = [
    "DEFAULT_COMPONENTS", "ExperimentConfig", "atomic_write", "checkpoint_bytes", "dataset_bytes",
    "format_config", "load_checkpoint", "load_config", "load_dataset", "parse_checkpoint",
    "parse_config", "parse_dataset", "read_history_csv", "read_table", "save_checkpoint",
    "save_dataset", "with_variance", "write_history_csv", "write_signal_csv", "write_table",
]
