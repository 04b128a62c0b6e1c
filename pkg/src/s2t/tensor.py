"""Minimal shaped-array numerics with reverse-mode differentiation.

A Tensor wraps a numpy array plus an implicit tape: each op records its
parents and a closure computing parent gradients. `backward` on a scalar
walks the tape once in reverse topological order. Precision follows the
arrays (float32 for training, float64 for gradient checking); broadcasting
is supported only where the model uses it (bias adds, batched matmul).
"""

import numpy as np

from . import kernels


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_grad_fn", "_done")

    def __init__(self, data, requires_grad=False, dtype=None):
        if dtype is not None:
            data = np.asarray(data, dtype=dtype)
        else:
            data = np.asarray(data)
            if data.dtype not in (np.float32, np.float64):
                data = data.astype(np.float64)
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._grad_fn = None
        self._done = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data.copy())

    def __add__(self, other):
        return add(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self):
        """Reverse-mode sweep from a scalar. A second sweep on the same
        result is an error: the tape is consumed.
        """
        if self.data.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {self.data.shape}")
        if self._done:
            raise RuntimeError("backward already ran on this tape; rebuild the graph")
        self._done = True

        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited and p.requires_grad:
                    stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._grad_fn is None or node.grad is None:
                continue
            for parent, g in node._grad_fn(node.grad):
                if not parent.requires_grad or g is None:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g


def _result(data, parents, grad_fn):
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._grad_fn = grad_fn
    return out


def _reduce_to(g, shape):
    """Sum a broadcast gradient back down to the original operand shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def matmul(a, b):
    """Batched matrix product (numpy stacking rules, operands >= 2-d)."""
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError(f"matmul needs 2-d+ operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def grad_fn(g):
        grads = []
        if a.requires_grad:
            grads.append((a, _reduce_to(g @ np.swapaxes(b.data, -1, -2), a.shape)))
        if b.requires_grad:
            grads.append((b, _reduce_to(np.swapaxes(a.data, -1, -2) @ g, b.shape)))
        return grads

    return _result(out, (a, b), grad_fn)


def add(a, b):
    """Elementwise sum with broadcasting (bias-add patterns)."""
    try:
        out = a.data + b.data
    except ValueError:
        raise ValueError(f"add shape mismatch: {a.shape} + {b.shape}") from None

    def grad_fn(g):
        return ((a, _reduce_to(g, a.shape)), (b, _reduce_to(g, b.shape)))

    return _result(out, (a, b), grad_fn)


def scale(a, c):
    """Multiply by a python scalar."""
    c = a.data.dtype.type(c)
    out = a.data * c

    def grad_fn(g):
        return ((a, g * c),)

    return _result(out, (a,), grad_fn)


def concat(tensors, axis):
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def grad_fn(g):
        pieces = []
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            pieces.append((t, np.ascontiguousarray(g[tuple(idx)])))
        return pieces

    return _result(out, tuple(tensors), grad_fn)


def slice_axis(a, axis, start, stop):
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    out = a.data[idx]

    def grad_fn(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return ((a, full),)

    return _result(out, (a,), grad_fn)


def transpose(a, axes):
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = np.transpose(a.data, axes)

    def grad_fn(g):
        return ((a, np.transpose(g, inverse)),)

    return _result(out, (a,), grad_fn)


def reshape(a, shape):
    out = a.data.reshape(shape)

    def grad_fn(g):
        return ((a, g.reshape(a.data.shape)),)

    return _result(out, (a,), grad_fn)


def relu(a):
    out = np.maximum(a.data, 0)

    def grad_fn(g):
        return ((a, g * (a.data > 0)),)

    return _result(out, (a,), grad_fn)


def masked_fill(a, mask, value):
    """Replace entries where `mask` is True by `value` (mask broadcasts)."""
    out = np.where(mask, a.data.dtype.type(value), a.data)

    def grad_fn(g):
        return ((a, np.where(mask, g.dtype.type(0), g)),)

    return _result(out, (a,), grad_fn)


def _rows2d(x, axis):
    """View `x` with `axis` moved last and flattened to 2-d rows."""
    moved = np.moveaxis(x, axis, -1)
    return np.ascontiguousarray(moved).reshape(-1, moved.shape[-1]), moved.shape


def softmax(a, axis=-1):
    """Stable softmax along `axis`. -inf entries yield exact zeros."""
    x2, moved_shape = _rows2d(a.data, axis)
    p2 = kernels.softmax_rows(x2)
    out = np.moveaxis(p2.reshape(moved_shape), -1, axis if axis >= 0 else a.data.ndim + axis)

    def grad_fn(g):
        g2, _ = _rows2d(g, axis)
        gx2 = kernels.softmax_grad_rows(p2, g2)
        gx = np.moveaxis(gx2.reshape(moved_shape), -1,
                         axis if axis >= 0 else a.data.ndim + axis)
        return ((a, np.ascontiguousarray(gx)),)

    return _result(out, (a,), grad_fn)


def layer_norm(a, gain, bias, eps=1e-5):
    """Normalize the last axis to zero mean/unit variance, then gain+bias."""
    d = a.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ValueError(
            f"layer_norm gain/bias must be shape ({d},), got {gain.shape}/{bias.shape}")
    x2 = np.ascontiguousarray(a.data).reshape(-1, d)
    y2, mean, rstd = kernels.layer_norm_rows(x2, gain.data, bias.data, a.data.dtype.type(eps))
    out = y2.reshape(a.data.shape)

    def grad_fn(g):
        g2 = np.ascontiguousarray(g).reshape(-1, d)
        gx2, ggain, gbias = kernels.layer_norm_grad_rows(x2, mean, rstd, gain.data, g2)
        return ((a, gx2.reshape(a.data.shape)), (gain, ggain), (bias, gbias))

    return _result(out, (a, gain, bias), grad_fn)


def embedding_lookup(table, ids):
    """Gather rows of `table` (2-d) by integer index array `ids`."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ValueError(
            f"token id out of range [0, {table.shape[0]}): "
            f"min={ids.min()}, max={ids.max()}")
    out = table.data[ids]

    def grad_fn(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        return ((table, gt),)

    return _result(out, (table,), grad_fn)


def dropout(a, rate, rng):
    """Inverted dropout; identity when rate is 0 or rng is None."""
    if rate <= 0.0 or rng is None:
        return a
    keep = (rng.random(a.shape) >= rate)
    m = keep.astype(a.data.dtype) / a.data.dtype.type(1.0 - rate)
    out = a.data * m

    def grad_fn(g):
        return ((a, g * m),)

    return _result(out, (a,), grad_fn)


def cross_entropy(logits, targets, ignore_id=None):
    """Mean cross-entropy over targets not equal to `ignore_id`.

    `logits` is (..., V); `targets` an integer array of the leading shape.
    """
    targets = np.asarray(targets)
    v = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise ValueError(
            f"cross_entropy shape mismatch: logits {logits.shape} vs targets {targets.shape}")
    flat = np.ascontiguousarray(logits.data).reshape(-1, v)
    tgt = targets.reshape(-1)
    if tgt.size and (tgt.min() < 0 or tgt.max() >= v):
        raise ValueError(f"target id out of range [0, {v})")
    keep = np.ones(tgt.shape, dtype=bool) if ignore_id is None else (tgt != ignore_id)
    count = int(keep.sum())
    if count == 0:
        raise ValueError("empty loss: every target is ignored")

    m = flat.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(flat - m).sum(axis=1))
    picked = flat[np.arange(flat.shape[0]), tgt]
    losses = np.where(keep, lse - picked, 0.0)
    out = losses.sum() / count

    def grad_fn(g):
        p = np.exp(flat - lse[:, None])
        p[np.arange(flat.shape[0]), tgt] -= 1.0
        p *= (keep[:, None] * (g / count)).astype(flat.dtype)
        return ((logits, p.reshape(logits.data.shape)),)

    return _result(np.asarray(out, dtype=logits.dtype), (logits,), grad_fn)


def zero_grads(tensors):
    for t in tensors:
        t.grad = None


class GradCheckReport:
    """Outcome of a finite-difference check: worst relative error and where."""

    def __init__(self, max_rel_error, worst, passed, detail):
        self.max_rel_error = max_rel_error
        self.worst = worst
        self.passed = passed
        self.detail = detail

    def __repr__(self):
        status = "pass" if self.passed else "FAIL"
        return (f"GradCheckReport({status}, max_rel_error={self.max_rel_error:.3e}, "
                f"worst={self.worst})")


def gradient_check(f, params, h=1e-5, tolerance=1e-5, samples=32, seed=0):
    """Compare analytic gradients of scalar `f()` against central differences.

    `params` maps names to float64 Tensors that `f` closes over. At least
    `samples` coordinates per tensor are probed (all of them for small
    tensors). Relative error uses an absolute floor of 1e-4 so true-zero
    gradients with O(h^2) noise do not read as failures.
    """
    for name, t in params.items():
        if t.dtype != np.float64:
            raise ValueError(f"gradient_check requires float64 params; {name} is {t.dtype}")

    zero_grads(params.values())
    loss = f()
    if not np.isfinite(loss.data):
        return GradCheckReport(np.inf, "loss", False, "non-finite loss at base point")
    loss.backward()
    analytic = {name: (np.zeros_like(t.data) if t.grad is None else t.grad.copy())
                for name, t in params.items()}

    rng = np.random.default_rng(seed)
    max_rel = 0.0
    worst = None
    for name, t in params.items():
        flat = t.data.reshape(-1)
        n = flat.size
        if n <= samples:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=samples, replace=False)
        a_flat = analytic[name].reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            up = float(f().data)
            flat[c] = orig - h
            down = float(f().data)
            flat[c] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                return GradCheckReport(np.inf, f"{name}[{c}]", False,
                                       "non-finite value during perturbation")
            numeric = (up - down) / (2.0 * h)
            a = a_flat[c]
            rel = abs(a - numeric) / max(abs(a) + abs(numeric), 1e-4)
            if rel > max_rel:
                max_rel = rel
                worst = f"{name}[{c}] analytic={a:.6e} numeric={numeric:.6e}"
    return GradCheckReport(max_rel, worst, max_rel <= tolerance,
                           f"{len(params)} tensors checked")
