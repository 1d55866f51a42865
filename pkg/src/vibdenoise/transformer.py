"""Encoder-only transformer denoiser with a hand-derived backward pass.

Architecture, per window of ``seq_len`` scalars::

    E  = x[:, None] * W_e + b_e + PE
    U  = LN(E + MHA(E))                  # post-norm, repeated n_blocks times
    X' = LN(U + relu(U W1 + b1) W2 + b2)
    Z  = X' W_h + b_h                    # 64-unit dense head
    y  = Z W_out + b_out                 # scalar per position

Parameters live in an insertion-ordered ``dict[str, ndarray]``; every tensor
is 2-D (biases and LayerNorm vectors are single rows) and the key order is
the canonical order used by checkpoints and the optimizer.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import LengthMismatch, ShapeMismatch
from .numerics import check_finite, layer_norm, layer_norm_backward, relu, relu_grad, softmax_rows


@dataclass(frozen=True)
class ModelConfig:
    seq_len: int = 128
    d_model: int = 64
    n_heads: int = 8
    d_ff: int = 64
    n_blocks: int = 1
    ln_eps: float = 1e-6
    positional_encoding: str = "sinusoidal"

    def __post_init__(self):
        for name in ("seq_len", "d_model", "n_heads", "d_ff", "n_blocks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.d_model % self.n_heads:
            raise ValueError(f"n_heads={self.n_heads} does not divide d_model={self.d_model}")
        if not self.ln_eps > 0:
            raise ValueError("ln_eps must be positive")
        if self.positional_encoding not in ("sinusoidal", "none"):
            raise ValueError(f"unknown positional encoding {self.positional_encoding!r}")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    def to_dict(self) -> dict:
        return asdict(self)


TINY_CONFIG = ModelConfig(seq_len=4, d_model=8, n_heads=2, d_ff=8, n_blocks=1)


def param_shapes(config: ModelConfig) -> dict:
    d, f = config.d_model, config.d_ff
    shapes = {"embed.W": (1, d), "embed.b": (1, d)}
    for i in range(config.n_blocks):
        p = f"block{i}."
        shapes.update({
            p + "attn.W_q": (d, d),
            p + "attn.W_k": (d, d),
            p + "attn.W_v": (d, d),
            p + "attn.W_o": (d, d),
            p + "ln1.gamma": (1, d),
            p + "ln1.beta": (1, d),
            p + "ffn.W1": (d, f),
            p + "ffn.b1": (1, f),
            p + "ffn.W2": (f, d),
            p + "ffn.b2": (1, d),
            p + "ln2.gamma": (1, d),
            p + "ln2.beta": (1, d),
        })
    shapes.update({"head.W": (d, d), "head.b": (1, d), "out.W": (d, 1), "out.b": (1, 1)})
    return shapes


def _is_weight(name):
    return name.rsplit(".", 1)[-1].startswith("W")


def glorot_bound(shape) -> float:
    fan_in, fan_out = shape
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(config: ModelConfig, seed: int = 0) -> dict:
    """Glorot-uniform weights, zero biases, unit LayerNorm gains."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(config).items():
        if _is_weight(name):
            bound = glorot_bound(shape)
            params[name] = rng.uniform(-bound, bound, size=shape)
        elif name.endswith("gamma"):
            params[name] = np.ones(shape)
        else:
            params[name] = np.zeros(shape)
    return params


def zeros_like_params(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def check_params(params: dict, config: ModelConfig):
    expected = param_shapes(config)
    if list(params) != list(expected):
        raise ShapeMismatch("parameter names do not match the model configuration")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ShapeMismatch(f"{name} has shape {params[name].shape}, expected {shape}")


def positional_table(seq_len: int, d_model: int) -> np.ndarray:
    """Sinusoidal table: even columns sin(t / 10000^(2i/d)), odd columns cos of the same angle."""
    t = np.arange(seq_len)[:, None]
    two_i = np.arange(0, d_model, 2)[None, :]
    angle = t / np.power(10000.0, two_i / d_model)
    table = np.zeros((seq_len, d_model))
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return table


def _positional(config):
    if config.positional_encoding == "none":
        return np.zeros((config.seq_len, config.d_model))
    return positional_table(config.seq_len, config.d_model)


def embed(window, params, config: ModelConfig) -> np.ndarray:
    x = np.asarray(window, dtype=np.float64)
    if x.shape[-1] != config.seq_len:
        raise LengthMismatch(f"window length {x.shape[-1]} != seq_len {config.seq_len}")
    return x[..., None] * params["embed.W"][0] + params["embed.b"][0] + _positional(config)


def _split_heads(m, n_heads):
    # (..., T, d) -> (..., H, T, d_head)
    *lead, t, d = m.shape
    return np.swapaxes(m.reshape(*lead, t, n_heads, d // n_heads), -2, -3)


def _merge_heads(m):
    # (..., H, T, d_head) -> (..., T, d)
    m = np.swapaxes(m, -2, -3)
    *lead, t, h, dh = m.shape
    return m.reshape(*lead, t, h * dh)


def multi_head_attention(x, params, config: ModelConfig, prefix="block0."):
    """Unmasked scaled dot-product attention over all positions.

    Returns ``(y, weights, cache)`` with ``weights`` of shape ``(..., H, T, T)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != config.d_model:
        raise ShapeMismatch(f"attention input width {x.shape[-1]} != d_model {config.d_model}")
    h = config.n_heads
    scale = 1.0 / np.sqrt(config.d_head)
    q = _split_heads(x @ params[prefix + "attn.W_q"], h)
    k = _split_heads(x @ params[prefix + "attn.W_k"], h)
    v = _split_heads(x @ params[prefix + "attn.W_v"], h)
    weights = softmax_rows(q @ np.swapaxes(k, -1, -2) * scale)
    concat = _merge_heads(weights @ v)
    y = concat @ params[prefix + "attn.W_o"]
    cache = {"x": x, "q": q, "k": k, "v": v, "weights": weights, "concat": concat}
    return y, weights, cache


def _attention_backward(dy, cache, params, config, prefix, grads):
    h = config.n_heads
    scale = 1.0 / np.sqrt(config.d_head)
    x = cache["x"]
    grads[prefix + "attn.W_o"] = _sum_outer(cache["concat"], dy)
    dheads = _split_heads(dy @ params[prefix + "attn.W_o"].T, h)
    weights, q, k, v = cache["weights"], cache["q"], cache["k"], cache["v"]
    dweights = dheads @ np.swapaxes(v, -1, -2)
    dv = np.swapaxes(weights, -1, -2) @ dheads
    dscores = weights * (dweights - (dweights * weights).sum(axis=-1, keepdims=True))
    dq = dscores @ k * scale
    dk = np.swapaxes(dscores, -1, -2) @ q * scale
    dx = np.zeros_like(x)
    for name, d in (("W_q", dq), ("W_k", dk), ("W_v", dv)):
        d = _merge_heads(d)
        grads[prefix + "attn." + name] = _sum_outer(x, d)
        dx += d @ params[prefix + "attn." + name].T
    return dx


def _sum_outer(a, b):
    """``sum over batch/positions of a_i^T b_i`` for row-stacked activations."""
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


def _row_sum(d):
    return d.reshape(-1, d.shape[-1]).sum(axis=0, keepdims=True)


def transformer_block(x, params, config: ModelConfig, prefix="block0."):
    """Post-norm block; returns ``(x_out, cache)``."""
    attn, weights, attn_cache = multi_head_attention(x, params, config, prefix)
    u, u_hat, u_inv = layer_norm(x + attn, params[prefix + "ln1.gamma"], params[prefix + "ln1.beta"], config.ln_eps)
    pre = u @ params[prefix + "ffn.W1"] + params[prefix + "ffn.b1"][0]
    hidden = relu(pre)
    ffn = hidden @ params[prefix + "ffn.W2"] + params[prefix + "ffn.b2"][0]
    out, o_hat, o_inv = layer_norm(u + ffn, params[prefix + "ln2.gamma"], params[prefix + "ln2.beta"], config.ln_eps)
    cache = {
        "attn": attn_cache, "u": u, "u_hat": u_hat, "u_inv": u_inv,
        "pre": pre, "hidden": hidden, "o_hat": o_hat, "o_inv": o_inv,
    }
    return out, cache


def _block_backward(dout, cache, params, config, prefix, grads):
    dsum2, dgamma, dbeta = layer_norm_backward(dout, cache["o_hat"], cache["o_inv"], params[prefix + "ln2.gamma"])
    grads[prefix + "ln2.gamma"], grads[prefix + "ln2.beta"] = dgamma[None, :], dbeta[None, :]
    grads[prefix + "ffn.W2"] = _sum_outer(cache["hidden"], dsum2)
    grads[prefix + "ffn.b2"] = _row_sum(dsum2)
    dpre = (dsum2 @ params[prefix + "ffn.W2"].T) * relu_grad(cache["pre"])
    grads[prefix + "ffn.W1"] = _sum_outer(cache["u"], dpre)
    grads[prefix + "ffn.b1"] = _row_sum(dpre)
    du = dsum2 + dpre @ params[prefix + "ffn.W1"].T
    dsum1, dgamma, dbeta = layer_norm_backward(du, cache["u_hat"], cache["u_inv"], params[prefix + "ln1.gamma"])
    grads[prefix + "ln1.gamma"], grads[prefix + "ln1.beta"] = dgamma[None, :], dbeta[None, :]
    return dsum1 + _attention_backward(dsum1, cache["attn"], params, config, prefix, grads)


def forward(params, config: ModelConfig, window):
    """Denoise one window ``(seq_len,)`` or a batch ``(n, seq_len)``.

    Returns ``(output, activations)``; ``activations["attention"]`` lists the
    per-block attention weights of shape ``(..., n_heads, seq_len, seq_len)``.
    """
    x = check_finite(np.asarray(window, dtype=np.float64), "input window")
    h = embedded = embed(x, params, config)
    blocks = []
    for i in range(config.n_blocks):
        h, cache = transformer_block(h, params, config, f"block{i}.")
        blocks.append(cache)
    z = h @ params["head.W"] + params["head.b"][0]
    out = (z @ params["out.W"])[..., 0] + params["out.b"][0, 0]
    activations = {
        "input": x, "embedded": embedded, "blocks": blocks, "encoded": h, "head": z,
        "attention": [b["attn"]["weights"] for b in blocks],
    }
    return out, activations


def mse(pred, target) -> float:
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(diff * diff))


def backward(params, config: ModelConfig, window, target):
    """MSE loss over all positions (and batch members) and its exact gradient.

    For a batch the loss is the mean of the per-window losses, so the
    gradient is the mean of the per-window gradients.
    """
    out, act = forward(params, config, window)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != out.shape:
        raise LengthMismatch(f"target shape {target.shape} != output shape {out.shape}")
    diff = out - target
    loss = float(np.mean(diff * diff))
    dout = 2.0 * diff / diff.size

    grads = {}
    z = act["head"]
    grads["out.W"] = _sum_outer(z, dout[..., None])
    grads["out.b"] = np.array([[dout.sum()]])
    dz = dout[..., None] * params["out.W"][:, 0]
    grads["head.W"] = _sum_outer(act["encoded"], dz)
    grads["head.b"] = _row_sum(dz)
    dh = dz @ params["head.W"].T
    for i in reversed(range(config.n_blocks)):
        dh = _block_backward(dh, act["blocks"][i], params, config, f"block{i}.", grads)
    x = act["input"]
    grads["embed.W"] = (x[..., None] * dh).reshape(-1, config.d_model).sum(axis=0, keepdims=True)
    grads["embed.b"] = _row_sum(dh)
    return loss, {name: grads[name] for name in params}


def gradient_check(config: ModelConfig = TINY_CONFIG, seed: int = 0, step: float = 1e-5,
                   corrupt: str | None = None) -> dict:
    """Compare analytic gradients with central differences on random data.

    Returns ``{tensor name: max relative error}``, the relative error of an
    element being ``|g - n| / max(|g|, |n|, 1e-8)``. ``corrupt`` names a
    tensor whose analytic gradient is deliberately scaled by 1.1, a
    negative control for the checker itself.
    """
    rng = np.random.default_rng(seed)
    params = init_params(config, seed)
    # move off the init point so LN gains/biases carry nonzero gradients
    for name in params:
        params[name] = params[name] + rng.normal(0.0, 0.1, size=params[name].shape)
    window = rng.uniform(-1.0, 1.0, size=config.seq_len)
    target = rng.uniform(-1.0, 1.0, size=config.seq_len)
    _, grads = backward(params, config, window, target)
    if corrupt is not None:
        grads[corrupt] = grads[corrupt] * 1.1

    def loss_at():
        return mse(forward(params, config, window)[0], target)

    errors = {}
    for name, tensor in params.items():
        numeric = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            saved = tensor[idx]
            tensor[idx] = saved + step
            up = loss_at()
            tensor[idx] = saved - step
            down = loss_at()
            tensor[idx] = saved
            numeric[idx] = (up - down) / (2 * step)
        analytic = grads[name]
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
        errors[name] = float(np.max(np.abs(analytic - numeric) / denom))
    return errors
