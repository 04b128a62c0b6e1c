"""Hot numeric kernels, each with a numba-jitted and a pure-numpy implementation.

The jitted path is used whenever numba imports cleanly; set ``S2T_NO_NUMBA=1``
to force the numpy fallback (``benchmarks/bench_kernels.py`` times the two
side by side). Matrix products are deliberately *not* here: those go through
numpy's BLAS on both paths.

All kernels are deterministic. The two paths may differ in the last float bit
(different reduction orders); each path is bit-stable with itself.
"""

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("S2T_NO_NUMBA", "").strip() not in ("", "0")

try:
    if _FORCE_NUMPY:
        raise ImportError("disabled via S2T_NO_NUMBA")
    from numba import njit

    USING_NUMBA = True
except ImportError:
    USING_NUMBA = False


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def softmax_rows_np(x):
    """Row softmax of a 2-d array, max-subtracted. -inf entries give exact 0."""
    m = np.max(x, axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / np.sum(e, axis=1, keepdims=True)


def softmax_grad_rows_np(p, g):
    """Input gradient of row softmax given its output p and upstream grad g."""
    dot = np.sum(p * g, axis=1, keepdims=True)
    return p * (g - dot)


def layer_norm_rows_np(x, gain, bias, eps):
    """Row layer norm. Returns (y, mean, rstd); mean/rstd feed the backward."""
    mean = np.mean(x, axis=1, keepdims=True)
    var = np.mean((x - mean) ** 2, axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * rstd
    return gain * xhat + bias, mean[:, 0], rstd[:, 0]


def layer_norm_grad_rows_np(x, mean, rstd, gain, g):
    """Gradients (gx, ggain, gbias) of layer_norm_rows."""
    d = x.shape[1]
    xhat = (x - mean[:, None]) * rstd[:, None]
    gg = g * gain
    m1 = np.mean(gg, axis=1, keepdims=True)
    m2 = np.mean(gg * xhat, axis=1, keepdims=True)
    gx = rstd[:, None] * (gg - m1 - xhat * m2)
    return gx, np.sum(g * xhat, axis=0), np.sum(g, axis=0)


def adam_step_np(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    """One fused Adam update, in place on flat views p, m, v."""
    one = p.dtype.type(1.0)
    m *= beta1
    m += (one - beta1) * g
    v *= beta2
    v += (one - beta2) * g * g
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def levenshtein_codes_np(a, b):
    """Edit distance between two int code arrays (two-row DP)."""
    la, lb = len(a), len(b)
    prev = np.arange(lb + 1, dtype=np.int64)
    cur = np.empty(lb + 1, dtype=np.int64)
    for i in range(1, la + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            c = 0 if ai == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + c)
        prev, cur = cur.copy(), prev
    return int(prev[lb])


def resample_polyline_np(pts, k):
    """Resample an (n, 2) polyline to k points uniformly spaced by arc length.

    Endpoints are copied exactly. A degenerate (zero-length) polyline repeats
    its first point.
    """
    seg = np.sqrt(np.sum(np.diff(pts, axis=0) ** 2, axis=1))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    out = np.empty((k, 2), dtype=pts.dtype)
    if total <= 0.0 or k == 1:
        out[:] = pts[0]
        return out
    targets = np.linspace(0.0, total, k)
    out[:, 0] = np.interp(targets, cum, pts[:, 0])
    out[:, 1] = np.interp(targets, cum, pts[:, 1])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


# ---------------------------------------------------------------------------
# numba implementations (loop forms of the same math)
# ---------------------------------------------------------------------------

if USING_NUMBA:

    @njit(cache=True)
    def _softmax_rows_nb(x):
        n, d = x.shape
        out = np.empty_like(x)
        for i in range(n):
            m = x[i, 0]
            for j in range(1, d):
                if x[i, j] > m:
                    m = x[i, j]
            s = 0.0
            for j in range(d):
                e = np.exp(x[i, j] - m)
                out[i, j] = e
                s += e
            inv = 1.0 / s
            for j in range(d):
                out[i, j] *= inv
        return out

    @njit(cache=True)
    def _softmax_grad_rows_nb(p, g):
        n, d = p.shape
        out = np.empty_like(p)
        for i in range(n):
            dot = 0.0
            for j in range(d):
                dot += p[i, j] * g[i, j]
            for j in range(d):
                out[i, j] = p[i, j] * (g[i, j] - dot)
        return out

    @njit(cache=True)
    def _layer_norm_rows_nb(x, gain, bias, eps):
        n, d = x.shape
        y = np.empty_like(x)
        mean = np.empty(n, dtype=x.dtype)
        rstd = np.empty(n, dtype=x.dtype)
        for i in range(n):
            s = 0.0
            for j in range(d):
                s += x[i, j]
            mu = s / d
            var = 0.0
            for j in range(d):
                t = x[i, j] - mu
                var += t * t
            var /= d
            r = 1.0 / np.sqrt(var + eps)
            mean[i] = mu
            rstd[i] = r
            for j in range(d):
                y[i, j] = gain[j] * ((x[i, j] - mu) * r) + bias[j]
        return y, mean, rstd

    @njit(cache=True)
    def _layer_norm_grad_rows_nb(x, mean, rstd, gain, g):
        n, d = x.shape
        gx = np.empty_like(x)
        ggain = np.zeros(d, dtype=x.dtype)
        gbias = np.zeros(d, dtype=x.dtype)
        for i in range(n):
            mu = mean[i]
            r = rstd[i]
            m1 = 0.0
            m2 = 0.0
            for j in range(d):
                xh = (x[i, j] - mu) * r
                gg = g[i, j] * gain[j]
                m1 += gg
                m2 += gg * xh
                ggain[j] += g[i, j] * xh
                gbias[j] += g[i, j]
            m1 /= d
            m2 /= d
            for j in range(d):
                xh = (x[i, j] - mu) * r
                gx[i, j] = r * (g[i, j] * gain[j] - m1 - xh * m2)
        return gx, ggain, gbias

    @njit(cache=True)
    def _adam_step_nb(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
        for i in range(p.size):
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
            p[i] -= lr * (m[i] / bc1) / (np.sqrt(v[i] / bc2) + eps)

    @njit(cache=True)
    def _levenshtein_codes_nb(a, b):
        la, lb = a.size, b.size
        prev = np.arange(lb + 1)
        cur = np.empty(lb + 1, dtype=np.int64)
        for i in range(1, la + 1):
            cur[0] = i
            ai = a[i - 1]
            for j in range(1, lb + 1):
                c = 0 if ai == b[j - 1] else 1
                best = prev[j] + 1
                if cur[j - 1] + 1 < best:
                    best = cur[j - 1] + 1
                if prev[j - 1] + c < best:
                    best = prev[j - 1] + c
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        return prev[lb]

    @njit(cache=True)
    def _resample_polyline_nb(pts, k):
        n = pts.shape[0]
        out = np.empty((k, 2), dtype=pts.dtype)
        cum = np.empty(n, dtype=pts.dtype)
        cum[0] = 0.0
        for i in range(1, n):
            dx = pts[i, 0] - pts[i - 1, 0]
            dy = pts[i, 1] - pts[i - 1, 1]
            cum[i] = cum[i - 1] + np.sqrt(dx * dx + dy * dy)
        total = cum[n - 1]
        if total <= 0.0 or k == 1:
            for i in range(k):
                out[i, 0] = pts[0, 0]
                out[i, 1] = pts[0, 1]
            return out
        seg = 0
        for i in range(k):
            target = total * i / (k - 1)
            while seg < n - 2 and cum[seg + 1] < target:
                seg += 1
            span = cum[seg + 1] - cum[seg]
            w = 0.0 if span <= 0.0 else (target - cum[seg]) / span
            out[i, 0] = pts[seg, 0] + w * (pts[seg + 1, 0] - pts[seg, 0])
            out[i, 1] = pts[seg, 1] + w * (pts[seg + 1, 1] - pts[seg, 1])
        out[0] = pts[0]
        out[-1] = pts[-1]
        return out

    def levenshtein_codes(a, b):
        return int(_levenshtein_codes_nb(a, b))

    # Per-kernel selection follows benchmarks/bench_kernels.py: the scalar
    # loops win everywhere except softmax forward and the Adam update, where
    # numpy's vectorized exp/sqrt are faster; those two stay on numpy even
    # when numba is available.
    softmax_rows = softmax_rows_np
    softmax_grad_rows = _softmax_grad_rows_nb
    layer_norm_rows = _layer_norm_rows_nb
    layer_norm_grad_rows = _layer_norm_grad_rows_nb
    adam_step = adam_step_np
    resample_polyline = _resample_polyline_nb
else:
    softmax_rows = softmax_rows_np
    softmax_grad_rows = softmax_grad_rows_np
    layer_norm_rows = layer_norm_rows_np
    layer_norm_grad_rows = layer_norm_grad_rows_np
    adam_step = adam_step_np
    levenshtein_codes = levenshtein_codes_np
    resample_polyline = resample_polyline_np
