"""Transformer over raw stroke tokens: encoder with a learnable index
positional table blended by a scalar, post-norm residual layers, a decoder
with causal self-attention and cross-attention over the encoder output, and
greedy autoregressive decoding with cross-attention capture.

Parameters live in a flat name -> Tensor dict (checkpoint manifest order).
Encoder names start with "enc.", decoder names with "dec.".
"""

import io
import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from . import tensor as T

CHECKPOINT_MAGIC = b"S2T1"
CHECKPOINT_VERSION = 1
NEG_INF = float("-inf")


@dataclass
class ModelConfig:
    l_e: int = 3
    l_d: int = 2
    d_a: int = 2
    d_h: int = 32
    d_p: int = 64
    k: int = 1
    d_f: int = 64
    n: int = 56
    m: int = 28
    alpha: float = 1.0
    vocab_size: int = 57
    dropout: float = 0.1
    channels: str = "xy"  # per-touch features packed into tokens

    @property
    def d_model(self):
        return self.d_a * self.d_h

    def validate(self):
        if self.d_f != self.d_model:
            raise ValueError(
                f"d_f must equal d_a*d_h (raw tokens feed attention directly): "
                f"{self.d_f} != {self.d_a}*{self.d_h}")
        if not 1 <= self.k <= 3:
            raise ValueError(f"k must be in 1..3, got {self.k}")
        for name in ("l_d", "d_a", "d_h", "d_p", "n", "m", "vocab_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.l_e < 0:
            raise ValueError("l_e must be >= 0")
        return self


def count_params(config):
    """Closed-form (encoder, decoder) parameter counts for a config."""
    d = config.d_model
    attn = 4 * (d * d + d)
    enc_ffn = d * config.d_p + config.d_p + config.d_p * d + d
    enc_layer = attn + enc_ffn + 2 * (2 * d)
    theta_e = config.l_e * enc_layer + config.n * config.d_f

    kd = config.k * config.d_p
    dec_ffn = d * kd + kd + kd * d + d
    dec_layer = 2 * attn + dec_ffn + 3 * (2 * d)
    theta_d = (config.l_d * dec_layer
               + config.vocab_size * d
               + config.m * d
               + d * config.vocab_size + config.vocab_size)
    return theta_e, theta_d


def param_shapes(config):
    """name -> shape for every parameter tensor, in manifest order."""
    d = config.d_model
    shapes = {"enc.pos": (config.n, config.d_f)}

    def attn_shapes(prefix):
        for w in ("q", "k", "v", "o"):
            shapes[f"{prefix}.w{w}"] = (d, d)
            shapes[f"{prefix}.b{w}"] = (d,)

    for i in range(config.l_e):
        p = f"enc.layers.{i}"
        attn_shapes(f"{p}.attn")
        shapes[f"{p}.ffn.w1"] = (d, config.d_p)
        shapes[f"{p}.ffn.b1"] = (config.d_p,)
        shapes[f"{p}.ffn.w2"] = (config.d_p, d)
        shapes[f"{p}.ffn.b2"] = (d,)
        for ln in ("ln1", "ln2"):
            shapes[f"{p}.{ln}.g"] = (d,)
            shapes[f"{p}.{ln}.b"] = (d,)

    shapes["dec.embed"] = (config.vocab_size, d)
    shapes["dec.pos"] = (config.m, d)
    kd = config.k * config.d_p
    for i in range(config.l_d):
        p = f"dec.layers.{i}"
        attn_shapes(f"{p}.self_attn")
        attn_shapes(f"{p}.cross_attn")
        shapes[f"{p}.ffn.w1"] = (d, kd)
        shapes[f"{p}.ffn.b1"] = (kd,)
        shapes[f"{p}.ffn.w2"] = (kd, d)
        shapes[f"{p}.ffn.b2"] = (d,)
        for ln in ("ln1", "ln2", "ln3"):
            shapes[f"{p}.{ln}.g"] = (d,)
            shapes[f"{p}.{ln}.b"] = (d,)
    shapes["dec.out.w"] = (d, config.vocab_size)
    shapes["dec.out.b"] = (config.vocab_size,)
    return shapes


def param_tally(params, prefix=""):
    return sum(t.data.size for name, t in params.items() if name.startswith(prefix))


def init_params(config, seed, dtype=np.float32):
    """Fresh parameters: projections uniform +-1/sqrt(fan_in), tables N(0, 0.02),
    norm gains 1, all biases 0. Deterministic in `seed`.
    """
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 11)))
    params = {}
    for name, shape in param_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if name in ("enc.pos", "dec.pos", "dec.embed"):
            data = rng.normal(0.0, 0.02, size=shape)
        elif leaf.startswith("w"):
            bound = 1.0 / np.sqrt(shape[0])
            data = rng.uniform(-bound, bound, size=shape)
        elif leaf == "g":
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        params[name] = T.Tensor(data.astype(dtype), requires_grad=True)
    return params


def freeze_encoder(params):
    """Mark encoder tensors non-trainable; they receive no grads or updates."""
    for name, t in params.items():
        if name.startswith("enc."):
            t.requires_grad = False
    return params


def unfreeze_encoder(params):
    for name, t in params.items():
        if name.startswith("enc."):
            t.requires_grad = True
    return params


def encoder_checksum(params):
    import hashlib

    h = hashlib.sha256()
    for name in sorted(params):
        if name.startswith("enc."):
            h.update(params[name].data.tobytes())
    return h.hexdigest()


def _normalize_mask(mask, batch, q_len, k_len):
    """Accept key masks of shape (k,), (q,k), (B,k) or (B,q,k) and return a
    (B or 1, 1, q or 1, k) boolean array, True at attendable keys."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape == (k_len,):
        return mask[None, None, None, :]
    if mask.shape == (q_len, k_len):
        return mask[None, None, :, :]
    if mask.shape == (batch, k_len):
        return mask[:, None, None, :]
    if mask.shape == (batch, q_len, k_len):
        return mask[:, None, :, :]
    raise ValueError(
        f"mask shape {mask.shape} incompatible with batch={batch}, "
        f"q={q_len}, k={k_len}")


def multi_head_attention(queries, keys, values, mask, params, prefix, config,
                         train=False, rng=None):
    """Scaled dot-product attention with `config.d_a` heads.

    `queries`/`keys`/`values` are pre-projection (B, T, d_model) tensors;
    `mask` marks attendable key positions (True = attend). Returns the
    output tensor and the post-softmax weights as a numpy (B, H, Tq, Tk)
    array. Masked keys get exactly zero weight; a query row with no
    attendable key is an error.
    """
    b, tq, d = queries.shape
    tk = keys.shape[1]
    heads, dh = config.d_a, config.d_h
    if d != heads * dh:
        raise ValueError(f"width {d} not divisible into {heads} heads of {dh}")

    def project(x, w, bias, t_len):
        y = T.add(T.matmul(x, params[f"{prefix}.w{w}"]), params[f"{prefix}.b{w}"])
        y = T.reshape(y, (b, t_len, heads, dh))
        return T.transpose(y, (0, 2, 1, 3))

    q = project(queries, "q", "bq", tq)
    k = project(keys, "k", "bk", tk)
    v = project(values, "v", "bv", tk)

    scores = T.scale(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dh))
    mask4 = _normalize_mask(mask, b, tq, tk)
    support = np.broadcast_to(mask4, (mask4.shape[0], 1, tq, tk)).any(axis=-1)
    if not support.all():
        raise ValueError("attention over empty support: a query row has no "
                         "unmasked key")
    scores = T.masked_fill(scores, ~mask4, NEG_INF)
    weights = T.softmax(scores, axis=-1)
    recorded = weights.data.copy()
    if train:
        weights = T.dropout(weights, config.dropout, rng)
    ctx = T.matmul(weights, v)
    ctx = T.reshape(T.transpose(ctx, (0, 2, 1, 3)), (b, tq, d))
    out = T.add(T.matmul(ctx, params[f"{prefix}.wo"]), params[f"{prefix}.bo"])
    return out, recorded


def _ffn(x, params, prefix, config, train, rng):
    h = T.relu(T.add(T.matmul(x, params[f"{prefix}.w1"]), params[f"{prefix}.b1"]))
    out = T.add(T.matmul(h, params[f"{prefix}.w2"]), params[f"{prefix}.b2"])
    if train:
        out = T.dropout(out, config.dropout, rng)
    return out


def _post_norm(x, sub, params, prefix):
    return T.layer_norm(T.add(x, sub), params[f"{prefix}.g"], params[f"{prefix}.b"])


def encoder_forward(x, mask, params, config, train=False, rng=None):
    """Encode (B, n', d_f) stroke tokens; `mask` is (B, n') validity.

    The positional table is blended in as x + alpha * P before the layer
    stack. n' may be <= config.n (trailing all-pad columns trimmed).
    """
    b, n_used, d_f = x.shape
    if d_f != config.d_f or n_used > config.n:
        raise ValueError(
            f"encoder input shape {x.shape} incompatible with "
            f"(d_f={config.d_f}, n<={config.n})")
    pos = T.slice_axis(params["enc.pos"], 0, 0, n_used)
    z = T.add(x, T.scale(pos, config.alpha))
    for i in range(config.l_e):
        p = f"enc.layers.{i}"
        attn, _ = multi_head_attention(z, z, z, mask, params, f"{p}.attn",
                                       config, train, rng)
        z = _post_norm(z, attn, params, f"{p}.ln1")
        z = _post_norm(z, _ffn(z, params, f"{p}.ffn", config, train, rng),
                       params, f"{p}.ln2")
    return z


def decoder_forward(ids, y_mask, z, x_mask, params, config, train=False,
                    rng=None, record=False):
    """Decode token ids (B, T) against encoder output `z`.

    Self-attention is causal (optionally also key-masked by `y_mask`);
    cross-attention keys are masked by `x_mask`. Returns logits (B, T, V)
    and, when `record` is set, per-layer cross-attention weights
    (B, H, T, n').
    """
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise ValueError(f"ids must be (B, T), got {ids.shape}")
    b, t_len = ids.shape
    if t_len > config.m:
        raise ValueError(f"decoder length {t_len} exceeds m={config.m}")

    emb = T.embedding_lookup(params["dec.embed"], ids)
    pos = T.slice_axis(params["dec.pos"], 0, 0, t_len)
    y = T.add(emb, pos)

    causal = np.tril(np.ones((t_len, t_len), dtype=bool))
    if y_mask is not None:
        self_mask = causal[None, :, :] & np.asarray(y_mask, dtype=bool)[:, None, :]
    else:
        self_mask = causal
    records = [] if record else None
    for i in range(config.l_d):
        p = f"dec.layers.{i}"
        attn, _ = multi_head_attention(y, y, y, self_mask, params,
                                       f"{p}.self_attn", config, train, rng)
        y = _post_norm(y, attn, params, f"{p}.ln1")
        cross, w = multi_head_attention(y, z, z, x_mask, params,
                                        f"{p}.cross_attn", config, train, rng)
        if record:
            records.append(w)
        y = _post_norm(y, cross, params, f"{p}.ln2")
        y = _post_norm(y, _ffn(y, params, f"{p}.ffn", config, train, rng),
                       params, f"{p}.ln3")
    logits = T.add(T.matmul(y, params["dec.out.w"]), params["dec.out.b"])
    return logits, records


@dataclass
class AttentionRecord:
    """Cross-attention weights captured during one decode: per decoder layer
    an (H, T_out, n') array over the encoder columns that were kept."""

    layers: list
    input_mask: np.ndarray

    def head_count(self):
        return self.layers[0].shape[0] if self.layers else 0


def greedy_decode(z, x_mask, params, config, bos_id=2, eos_id=3):
    """Argmax decoding from <bos> until <eos> or `m` tokens (B = 1).

    Ties break to the lowest token id. The attention record is captured in
    one final teacher-forced pass; causality makes it identical to the
    weights seen step by step.
    """
    ids, records = greedy_decode_batch(z, x_mask, params, config, bos_id, eos_id,
                                       record=True)
    return ids[0], records[0]


def greedy_decode_batch(z, x_mask, params, config, bos_id=2, eos_id=3,
                        record=False):
    """Greedy decode every row of a batched encoder output in lockstep."""
    b = z.shape[0]
    prefix = np.full((b, 1), bos_id, dtype=np.int64)
    done = np.zeros(b, dtype=bool)
    for _ in range(config.m):
        logits, _ = decoder_forward(prefix, None, z, x_mask, params, config)
        nxt = np.argmax(logits.data[:, -1, :], axis=-1).astype(np.int64)
        nxt = np.where(done, bos_id, nxt)  # placeholder column for finished rows
        prefix = np.concatenate([prefix, nxt[:, None]], axis=1)
        done |= nxt == eos_id
        if done.all() or prefix.shape[1] >= config.m + 1:
            break

    outputs = []
    for i in range(b):
        row = prefix[i, 1:].tolist()
        if eos_id in row:
            row = row[: row.index(eos_id) + 1]
        outputs.append(row)

    records = None
    if record:
        full_logits, raw = decoder_forward(prefix[:, :-1] if prefix.shape[1] > 1
                                           else prefix, None, z, x_mask, params,
                                           config, record=True)
        del full_logits
        records = []
        mask_np = np.asarray(x_mask, dtype=bool)
        for i in range(b):
            t_out = len(outputs[i])
            layers = [w[i, :, :t_out, :] for w in raw]
            records.append(AttentionRecord(layers=layers, input_mask=mask_np[i]))
    return outputs, records


def save_checkpoint(path, params, config, vocab_dump=None):
    """Binary checkpoint: magic, version, config+vocab JSON, manifest JSON,
    then raw little-endian float32 payloads."""
    names = [n for n in param_shapes(config) if n in params]
    header = {"config": asdict(config), "vocab": vocab_dump}
    header_b = json.dumps(header).encode("utf-8")
    manifest = []
    offset = 0
    for name in names:
        shape = list(params[name].data.shape)
        manifest.append({"name": name, "shape": shape, "offset": offset})
        offset += int(np.prod(shape)) * 4
    manifest_b = json.dumps(manifest).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<I", len(header_b)))
        f.write(header_b)
        f.write(struct.pack("<I", len(manifest_b)))
        f.write(manifest_b)
        for name in names:
            f.write(params[name].data.astype("<f4").tobytes())


def load_checkpoint(path, dtype=np.float32):
    """Load and validate a checkpoint; returns (params, config, vocab_dump)."""
    with open(path, "rb") as f:
        blob = f.read()
    buf = io.BytesIO(blob)
    if buf.read(4) != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    version = struct.unpack("<I", buf.read(4))[0]
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(buf.read(struct.unpack("<I", buf.read(4))[0]))
    manifest = json.loads(buf.read(struct.unpack("<I", buf.read(4))[0]))
    config = ModelConfig(**header["config"]).validate()

    expected = param_shapes(config)
    payload_start = buf.tell()
    params = {}
    for entry in manifest:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in expected:
            raise ValueError(f"{path}: unexpected parameter {name!r}")
        if expected[name] != shape:
            raise ValueError(
                f"{path}: shape mismatch for {name}: config expects "
                f"{expected[name]}, file has {shape}")
        count = int(np.prod(shape))
        start = payload_start + entry["offset"]
        data = np.frombuffer(blob, dtype="<f4", count=count, offset=start)
        params[name] = T.Tensor(data.reshape(shape).astype(dtype),
                                requires_grad=True)
    missing = set(expected) - set(params)
    if missing:
        raise ValueError(f"{path}: missing parameters {sorted(missing)[:4]}")
    return params, config, header.get("vocab")
