"""Teacher-forced training: Adam with a halving learning-rate schedule,
masked batching, per-epoch validation, checkpointing on best validation
cross-entropy, and transfer-learning entry points (frozen or fine-tuned
encoder).
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from . import tensor as T
from .model import (decoder_forward, encoder_forward, freeze_encoder,
                    greedy_decode_batch, init_params, load_checkpoint,
                    save_checkpoint)
from .strokes import affine_augment, normalize_sequence, tokenize_sequence


@dataclass
class TrainConfig:
    initial_lr: float = 8e-4
    halving_period: int = 30
    batch_size: int = 32
    max_epochs: int = 200
    seed: int = 0
    precision: str = "32"
    freeze_encoder: bool = False
    clip_norm: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    augment: object = None  # AffineParams or None
    eval_max: int = 200
    stop_at_val_la: float | None = None

    def dtype(self):
        if self.precision not in ("32", "64"):
            raise ValueError(f"precision must be '32' or '64', got {self.precision!r}")
        return np.float32 if self.precision == "32" else np.float64


def lr_at_epoch(epoch, config):
    """Step-wise halving: initial_lr * 2^-(epoch // period)."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return config.initial_lr * 2.0 ** (-(epoch // config.halving_period))


@dataclass
class Batch:
    x: np.ndarray        # (B, n', d_f) stroke token rows
    x_mask: np.ndarray   # (B, n') validity
    dec_in: np.ndarray   # (B, T) <bos> + target ids, <pad> filled
    targets: np.ndarray  # (B, T) target ids + <eos>, <pad> filled
    y_mask: np.ndarray   # (B, T) True at real decoder input tokens


def example_tokens(seq, config):
    """Normalize one sequence and pack it into (n', d_f) token rows + mask,
    trimmed to this sequence's own length (bos + strokes + eos)."""
    tm = tokenize_sequence(normalize_sequence(seq), config.n, config.d_f,
                           channels=config.channels)
    used = seq.stroke_count() + 2
    return tm.data.T[:used], tm.mask[:used]


def make_batch(examples, vocab, config, dtype=np.float32, augment=None, rng=None):
    """Assemble a teacher-forcing batch; columns beyond each example's own
    tokens are zero/pad and masked out."""
    if augment is not None and rng is not None:
        examples = [affine_augment(ex, augment, rng) for ex in examples]
    token_rows = []
    for ex in examples:
        rows, mask = example_tokens(ex, config)
        token_rows.append((rows, mask))
    n_used = max(r.shape[0] for r, _ in token_rows)

    id_rows = []
    for ex in examples:
        ids = vocab.encode(ex.text)
        if len(ids) + 1 > config.m:
            raise ValueError(
                f"target {ex.text!r} needs {len(ids) + 1} decoder slots > m={config.m}")
        id_rows.append(ids)
    t_len = max(len(ids) + 1 for ids in id_rows)

    b = len(examples)
    x = np.zeros((b, n_used, config.d_f), dtype=dtype)
    x_mask = np.zeros((b, n_used), dtype=bool)
    dec_in = np.full((b, t_len), vocab.pad_id, dtype=np.int64)
    targets = np.full((b, t_len), vocab.pad_id, dtype=np.int64)
    y_mask = np.zeros((b, t_len), dtype=bool)
    for i, ((rows, mask), ids) in enumerate(zip(token_rows, id_rows)):
        x[i, : rows.shape[0]] = rows
        x_mask[i, : mask.shape[0]] = mask
        frame = [vocab.bos_id] + ids + [vocab.eos_id]
        dec_in[i, : len(frame) - 1] = frame[:-1]
        targets[i, : len(frame) - 1] = frame[1:]
        y_mask[i, : len(frame) - 1] = True
    return Batch(x=x, x_mask=x_mask, dec_in=dec_in, targets=targets, y_mask=y_mask)


class AdamState:
    """Per-parameter moment accumulators; frozen parameters carry none."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.moments = {
            name: (np.zeros_like(p.data), np.zeros_like(p.data))
            for name, p in params.items() if p.requires_grad
        }

    def step(self, params, lr, clip_norm=None):
        grads = {name: params[name].grad for name in self.moments
                 if params[name].grad is not None}
        if clip_norm is not None and clip_norm > 0:
            total = np.sqrt(sum(float((g.astype(np.float64) ** 2).sum())
                                for g in grads.values()))
            if total > clip_norm:
                factor = clip_norm / total
                grads = {n: g * g.dtype.type(factor) for n, g in grads.items()}
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m, v = self.moments[name]
            p = params[name].data
            kernels.adam_step(p.reshape(-1), np.ascontiguousarray(g.reshape(-1)),
                              m.reshape(-1), v.reshape(-1),
                              lr, self.beta1, self.beta2, self.eps, bc1, bc2)


def _loss_on_batch(batch, params, config, train=False, rng=None, pad_id=0):
    x = T.Tensor(batch.x)
    z = encoder_forward(x, batch.x_mask, params, config, train=train, rng=rng)
    logits, _ = decoder_forward(batch.dec_in, batch.y_mask, z, batch.x_mask,
                                params, config, train=train, rng=rng)
    return T.cross_entropy(logits, batch.targets, ignore_id=pad_id)


def train_step(batch, params, opt, lr, config, clip_norm=1.0, rng=None, pad_id=0):
    """One teacher-forced step: forward, masked cross-entropy, backward, Adam."""
    T.zero_grads(params.values())
    loss = _loss_on_batch(batch, params, config, train=True, rng=rng, pad_id=pad_id)
    value = float(loss.data)
    if not np.isfinite(value):
        raise RuntimeError(
            f"non-finite training loss ({value}) at step {opt.t + 1}; "
            f"lr={lr}, batch={batch.x.shape}")
    if lr > 0:
        loss.backward()
        opt.step(params, lr, clip_norm)
    return value


def dataset_xel(examples, params, config, vocab, dtype=np.float32, batch_size=64):
    """Teacher-forced mean cross-entropy over non-pad targets of a split."""
    total, count = 0.0, 0
    for i in range(0, len(examples), batch_size):
        batch = make_batch(examples[i:i + batch_size], vocab, config, dtype=dtype)
        loss = _loss_on_batch(batch, params, config, train=False, pad_id=vocab.pad_id)
        k = int(batch.y_mask.sum())
        total += float(loss.data) * k
        count += k
    return total / max(count, 1)


def decode_texts(examples, params, config, vocab, dtype=np.float32, batch_size=64):
    """Greedy-decode a list of examples into hypothesis strings."""
    out = []
    for i in range(0, len(examples), batch_size):
        chunk = examples[i:i + batch_size]
        batch = make_batch(chunk, vocab, config, dtype=dtype)
        x = T.Tensor(batch.x)
        z = encoder_forward(x, batch.x_mask, params, config)
        ids, _ = greedy_decode_batch(z, batch.x_mask, params, config,
                                     bos_id=vocab.bos_id, eos_id=vocab.eos_id)
        out.extend(vocab.decode(row) for row in ids)
    return out


@dataclass
class FitResult:
    params: dict
    history: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_xel: float = float("inf")
    checkpoint_path: str | None = None

    def epochs_to_la(self, threshold):
        """First epoch (1-based count of epochs run) reaching val LA >= t."""
        for row in self.history:
            if row["val_la"] >= threshold:
                return row["epoch"] + 1
        return None


def fit(train_examples, val_examples, model_config, train_config, vocab,
        out_dir=None, initial_params=None, log=None):
    """Epoch loop with seeded shuffling, per-epoch validation metrics, and
    best-validation checkpointing. Returns the best parameters plus the
    full metrics history (also written as CSV when `out_dir` is given).
    """
    from .evaluation import cer, la  # local import; evaluation imports us

    if not train_examples:
        raise ValueError("empty training split")
    dtype = train_config.dtype()
    params = initial_params if initial_params is not None else init_params(
        model_config, train_config.seed, dtype=dtype)
    if train_config.freeze_encoder:
        freeze_encoder(params)
    opt = AdamState(params, train_config.beta1, train_config.beta2, train_config.eps)

    csv_path = None
    writer = None
    csv_file = None
    if out_dir is not None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "metrics.csv")
        csv_file = open(csv_path, "w", newline="")
        writer = csv.writer(csv_file)
        writer.writerow(["epoch", "lr", "train_xel", "val_xel", "val_la",
                         "val_cer", "wall_seconds"])

    result = FitResult(params=params)
    best = {n: p.data.copy() for n, p in params.items()}
    eval_subset = val_examples[: train_config.eval_max]
    refs = [ex.text for ex in eval_subset]
    t0 = time.time()
    try:
        for epoch in range(train_config.max_epochs):
            lr = lr_at_epoch(epoch, train_config)
            order = np.random.default_rng(
                np.random.SeedSequence((train_config.seed, 1000 + epoch))
            ).permutation(len(train_examples))
            rng = np.random.default_rng(
                np.random.SeedSequence((train_config.seed, 2000 + epoch)))

            losses = []
            for lo in range(0, len(order), train_config.batch_size):
                chunk = [train_examples[j] for j in order[lo:lo + train_config.batch_size]]
                batch = make_batch(chunk, vocab, model_config, dtype=dtype,
                                   augment=train_config.augment, rng=rng)
                losses.append(train_step(batch, params, opt, lr, model_config,
                                         clip_norm=train_config.clip_norm,
                                         rng=rng, pad_id=vocab.pad_id))
            train_xel = float(np.mean(losses))

            val_xel = dataset_xel(val_examples, params, model_config, vocab, dtype)
            if eval_subset:
                hyps = decode_texts(eval_subset, params, model_config, vocab, dtype)
                val_la, val_cer = la(refs, hyps), cer(refs, hyps)
            else:
                val_la, val_cer = 0.0, 0.0
            row = {"epoch": epoch, "lr": lr, "train_xel": train_xel,
                   "val_xel": val_xel, "val_la": val_la, "val_cer": val_cer,
                   "wall_seconds": round(time.time() - t0, 3)}
            result.history.append(row)
            if writer:
                writer.writerow([row[k] for k in ("epoch", "lr", "train_xel",
                                                  "val_xel", "val_la", "val_cer",
                                                  "wall_seconds")])
                csv_file.flush()
            if log:
                log(f"epoch {epoch:4d} lr {lr:.2e} train_xel {train_xel:.4f} "
                    f"val_xel {val_xel:.4f} val_la {val_la:.4f} val_cer {val_cer:.4f}")

            if val_xel < result.best_val_xel:
                result.best_val_xel = val_xel
                result.best_epoch = epoch
                best = {n: p.data.copy() for n, p in params.items()}
            if (train_config.stop_at_val_la is not None
                    and val_la >= train_config.stop_at_val_la):
                break
    finally:
        if csv_file:
            csv_file.close()

    for name, p in params.items():
        p.data = best[name]
    result.params = params
    if out_dir is not None:
        import os

        vocab_dump = vocab.to_dict() if hasattr(vocab, "to_dict") else {
            "type": "symbol", "punctuation": getattr(vocab, "punctuation", "")}
        result.checkpoint_path = os.path.join(out_dir, "best.ckpt")
        save_checkpoint(result.checkpoint_path, params, model_config, vocab_dump)
    return result


_ENCODER_FIELDS = ("l_e", "d_a", "d_h", "d_p", "d_f", "n", "alpha")


def transfer_fit(encoder_checkpoint, train_examples, val_examples, model_config,
                 train_config, vocab, mode="frozen", out_dir=None, log=None):
    """Train a fresh decoder on top of a pretrained encoder.

    `mode` is "frozen" (encoder bytes never change) or "fine_tune" (all
    parameters update). The checkpoint's encoder section must match the new
    model config; mismatches are reported by field name.
    """
    if mode not in ("frozen", "fine_tune"):
        raise ValueError(f"mode must be 'frozen' or 'fine_tune', got {mode!r}")
    src_params, src_config, _ = load_checkpoint(encoder_checkpoint,
                                                dtype=train_config.dtype())
    bad = [f for f in _ENCODER_FIELDS
           if getattr(src_config, f) != getattr(model_config, f)]
    if bad:
        raise ValueError(
            "encoder config mismatch on fields: " + ", ".join(
                f"{f} (checkpoint {getattr(src_config, f)} != model "
                f"{getattr(model_config, f)})" for f in bad))

    params = init_params(model_config, train_config.seed, dtype=train_config.dtype())
    for name in params:
        if name.startswith("enc."):
            params[name].data = src_params[name].data.copy()
    import dataclasses

    cfg = dataclasses.replace(train_config, freeze_encoder=(mode == "frozen"))
    return fit(train_examples, val_examples, model_config, cfg, vocab,
               out_dir=out_dir, initial_params=params, log=log)
