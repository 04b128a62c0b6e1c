"""Geometric data model: touches, strokes, glyphs, sequences, and the packing
of strokes into fixed-width encoder token columns with validity masks.

Coordinates are plain panel units until `normalize_sequence` maps a sequence
to unit height with its top-left corner at the origin. A stroke is packed as
interleaved ``[x1, y1, x2, y2, ...]`` zero-padded to the token width; strokes
with more points than fit are resampled uniformly by arc length first.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels

# Input-side sentinel columns. The pad column is all zeros (matching the
# zero-padding of short strokes); begin/end markers are constant vectors
# outside the normalized coordinate range so no real stroke can collide.
BOS_INPUT_VALUE = -1.0
EOS_INPUT_VALUE = 2.0

# Cap on touches per packed token before arc-length resampling kicks in.
MAX_POINTS_PER_TOKEN = 64


@dataclass(frozen=True)
class Touch:
    """One sampled panel contact: position plus optional time and pressure."""

    x: float
    y: float
    t: float | None = None
    p: float | None = None


class Stroke:
    """A pen-down..pen-up run of touches, stored as an (k, 2) float array."""

    __slots__ = ("xy", "t", "p")

    def __init__(self, xy, t=None, p=None):
        xy = np.asarray(xy, dtype=np.float64)
        if xy.ndim != 2 or xy.shape[1] != 2 or xy.shape[0] < 1:
            raise ValueError(f"stroke needs an (k, 2) point array, got shape {xy.shape}")
        if not np.all(np.isfinite(xy)):
            raise ValueError("stroke contains non-finite coordinates")
        self.xy = xy
        self.t = None if t is None else np.asarray(t, dtype=np.float64)
        self.p = None if p is None else np.asarray(p, dtype=np.float64)
        if self.t is not None and np.any(np.diff(self.t) < 0):
            raise ValueError("stroke timestamps must be non-decreasing")

    @classmethod
    def from_touches(cls, touches):
        if not touches:
            raise ValueError("empty stroke")
        xy = [(tc.x, tc.y) for tc in touches]
        t = None if touches[0].t is None else [tc.t for tc in touches]
        p = None if touches[0].p is None else [tc.p for tc in touches]
        return cls(xy, t, p)

    def __len__(self):
        return self.xy.shape[0]

    def transformed(self, fn):
        """New stroke with `fn` applied to the (k, 2) coordinate array."""
        return Stroke(fn(self.xy), self.t, self.p)


@dataclass
class Glyph:
    """Strokes realizing a single symbol."""

    strokes: list
    label: str

    def __post_init__(self):
        if not self.strokes:
            raise ValueError("glyph has no strokes")


@dataclass
class StrokeSequence:
    """Ordered strokes with their reference transcription.

    `glyph_spans` is optional composition metadata: (symbol, first stroke
    index, one-past-last stroke index) per glyph. It is not persisted in the
    JSONL schema and is re-derivable by recomposing the text.
    """

    strokes: list
    text: str
    subject_id: str = ""
    glyph_spans: list | None = field(default=None, compare=False)

    def stroke_count(self):
        return len(self.strokes)

    def points(self):
        """All touch coordinates stacked into one (total, 2) array."""
        return np.concatenate([s.xy for s in self.strokes], axis=0)


@dataclass
class TokenMatrix:
    """Encoder input: token columns (d_f x n) plus the validity mask."""

    data: np.ndarray
    mask: np.ndarray

    @property
    def n(self):
        return self.data.shape[1]

    @property
    def d_f(self):
        return self.data.shape[0]


def special_token_vector(kind, d_f):
    """Constant input column for one of 'bos', 'eos', 'pad'."""
    if kind == "bos":
        return np.full(d_f, BOS_INPUT_VALUE)
    if kind == "eos":
        return np.full(d_f, EOS_INPUT_VALUE)
    if kind == "pad":
        return np.zeros(d_f)
    raise ValueError(f"unknown special input token {kind!r}")


def normalize_sequence(seq):
    """Affinely map a sequence so its bounding box has height 1.0 with the
    top-left corner at the origin (aspect ratio preserved).

    A zero-height box falls back to unit width; a single point just moves to
    the origin.
    """
    pts = seq.points()
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    height = hi[1] - lo[1]
    width = hi[0] - lo[0]
    if height > 0:
        scale = 1.0 / height
    elif width > 0:
        scale = 1.0 / width
    else:
        scale = 1.0
    strokes = [s.transformed(lambda xy: (xy - lo) * scale) for s in seq.strokes]
    return replace(seq, strokes=strokes)


def _channel_block(stroke, channels):
    """Stacked per-point feature rows for the requested channels."""
    cols = []
    k = len(stroke)
    for ch in channels:
        if ch == "x":
            cols.append(stroke.xy[:, 0])
        elif ch == "y":
            cols.append(stroke.xy[:, 1])
        elif ch == "t":
            t = stroke.t if stroke.t is not None else np.linspace(0.0, 1.0, k)
            cols.append(np.asarray(t, dtype=np.float64))
        elif ch == "p":
            p = stroke.p if stroke.p is not None else np.zeros(k)
            cols.append(np.asarray(p, dtype=np.float64))
        else:
            raise ValueError(f"unknown channel {ch!r}")
    return np.stack(cols, axis=1)


def pack_stroke(stroke, d_f, channels="xy"):
    """Pack one stroke into an interleaved vector of length d_f.

    Layout is ``[x1, y1, x2, y2, ...]`` (or the requested channel tuple per
    point) with trailing zeros. Strokes with more points than d_f allows are
    resampled to exactly ``d_f // len(channels)`` points by arc length.
    """
    if stroke is None or len(stroke) == 0:
        raise ValueError("empty stroke")
    nch = len(channels)
    if d_f % nch != 0:
        raise ValueError(f"d_f={d_f} not divisible by {nch} channels")
    cap = min(d_f // nch, MAX_POINTS_PER_TOKEN)
    if len(stroke) > cap:
        xy = kernels.resample_polyline(np.ascontiguousarray(stroke.xy), cap)
        stroke = Stroke(xy)
    block = _channel_block(stroke, channels)
    out = np.zeros(d_f)
    flat = block.reshape(-1)
    out[: flat.size] = flat
    return out


def tokenize_sequence(seq, n, d_f, channels="xy"):
    """Lay a sequence out as encoder token columns.

    Column 0 is the begin marker, then one column per stroke, then the end
    marker; the remainder is all-zero padding with mask False.
    """
    s = seq.stroke_count()
    if s > n - 2:
        raise ValueError(f"sequence exceeds n: {s} strokes > {n - 2} slots")
    data = np.zeros((d_f, n))
    mask = np.zeros(n, dtype=bool)
    data[:, 0] = special_token_vector("bos", d_f)
    for i, stroke in enumerate(seq.strokes):
        data[:, 1 + i] = pack_stroke(stroke, d_f, channels)
    data[:, s + 1] = special_token_vector("eos", d_f)
    mask[: s + 2] = True
    return TokenMatrix(data=data, mask=mask)


@dataclass(frozen=True)
class AffineParams:
    """Bounds for one random affine draw; defaults are the identity map."""

    rotation: tuple = (0.0, 0.0)
    scale: tuple = (1.0, 1.0)
    shear: tuple = (0.0, 0.0)
    translation: tuple = (0.0, 0.0)


def affine_augment(seq, params, rng):
    """Apply one random affine map (within `params` bounds) to every touch.

    The map composes shear, isotropic scale and rotation about the bounding
    box center, then a translation. Stroke structure is untouched.
    """
    if params.scale[0] <= 0.0:
        raise ValueError("degenerate scale: bounds must stay positive")
    theta = rng.uniform(*params.rotation)
    scale = rng.uniform(*params.scale)
    shear = rng.uniform(*params.shear)
    tx = rng.uniform(*params.translation)
    ty = rng.uniform(*params.translation)
    if theta == 0.0 and scale == 1.0 and shear == 0.0 and tx == 0.0 and ty == 0.0:
        return replace(seq, strokes=[st.transformed(np.array) for st in seq.strokes])

    pts = seq.points()
    center = (pts.min(axis=0) + pts.max(axis=0)) / 2.0
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    shear_m = np.array([[1.0, shear], [0.0, 1.0]])
    m = rot @ (scale * shear_m)

    def apply(xy):
        return (xy - center) @ m.T + center + np.array([tx, ty])

    return replace(seq, strokes=[st.transformed(apply) for st in seq.strokes])
