"""Model checkpoints: one ``.npz`` holding JSON layer specs and parameter arrays."""

from __future__ import annotations

import io
import json
import os
import zipfile

import numpy as np

from .layers import (BatchNorm, Conv2D, Dense, Embedding, Flatten, Layer, LeakyReLU,
                     MaxPool2D, ReLU, Sequential, Sigmoid, Softmax, Tanh)

FORMAT_VERSION = 1


def build_layer(spec: dict) -> Layer:
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "sequential":
        return Sequential([build_layer(s) for s in spec["layers"]])
    factories = {
        "conv2d": lambda: Conv2D(spec["in_channels"], spec["filters"], spec["kernel_size"]),
        "maxpool2d": lambda: MaxPool2D(spec["pool"]),
        "flatten": Flatten,
        "dense": lambda: Dense(spec["n_in"], spec["n_out"]),
        "relu": ReLU,
        "leaky_relu": lambda: LeakyReLU(spec["slope"]),
        "sigmoid": Sigmoid,
        "tanh": Tanh,
        "softmax": Softmax,
        "batchnorm": lambda: BatchNorm(spec["n_features"], spec["momentum"], spec["eps"]),
        "embedding": lambda: Embedding(spec["vocab"], spec["dim"]),
    }
    if kind not in factories:
        raise ValueError(f"unknown layer kind {kind!r}")
    return factories[kind]()


def _state(layer: Layer, prefix: str, out: dict[str, np.ndarray]) -> None:
    if isinstance(layer, Sequential):
        for i, sub in enumerate(layer.layers):
            _state(sub, f"{prefix}{i}.", out)
        return
    for p in layer.params():
        out[f"{prefix}{p.name}"] = p.value
    if isinstance(layer, BatchNorm):
        for name, buf in layer.buffers().items():
            out[f"{prefix}{name}"] = buf


def _load_state(layer: Layer, prefix: str, arrays) -> None:
    if isinstance(layer, Sequential):
        for i, sub in enumerate(layer.layers):
            _load_state(sub, f"{prefix}{i}.", arrays)
        return
    for p in layer.params():
        value = arrays[f"{prefix}{p.name}"]
        if value.shape != p.value.shape:
            raise ValueError(f"checkpoint shape {value.shape} != layer shape {p.value.shape}")
        p.value[...] = value
    if isinstance(layer, BatchNorm):
        layer.running_mean = arrays[f"{prefix}running_mean"].copy()
        layer.running_var = arrays[f"{prefix}running_var"].copy()


def save_checkpoint(path: str | os.PathLike, models: dict[str, Layer], meta: dict | None = None) -> None:
    arrays: dict[str, np.ndarray] = {}
    for name, model in models.items():
        _state(model, f"{name}/", arrays)
    header = {
        "format_version": FORMAT_VERSION,
        "models": {name: m.spec().to_dict() for name, m in models.items()},
        "meta": meta or {},
    }
    arrays["__header__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    # hand-rolled npz with a fixed timestamp so identical weights give identical bytes
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for key in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[key]), allow_pickle=False)
            info = zipfile.ZipInfo(f"{key}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_checkpoint(path: str | os.PathLike) -> tuple[dict[str, Layer], dict]:
    with np.load(path) as data:
        header = json.loads(data["__header__"].tobytes().decode())
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('format_version')}")
        models = {}
        for name, spec in header["models"].items():
            model = build_layer(spec)
            _load_state(model, f"{name}/", data)
            models[name] = model
    return models, header["meta"]
