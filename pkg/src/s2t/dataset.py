"""Synthetic glyph dataset: per-subject style variation, corpus-driven
sentence composition, text preprocessing, subject-level splits and JSONL
persistence.

Generation is deterministic end to end: every random draw comes from a
generator seeded by (style seed, symbol, occurrence) or (style seed, text),
so regenerating any example in isolation reproduces it byte for byte.
"""

import json
import unicodedata
import zlib
from dataclasses import dataclass

import numpy as np

from .glyphs import default_bank
from .strokes import Glyph, Stroke, StrokeSequence

# Touch sampling density when densifying template polylines (em units
# between consecutive touches), and the per-token cap-aware point limit.
_TOUCH_SPACING = 0.05
_MAX_TOUCHES = 28


@dataclass(frozen=True)
class SubjectProfile:
    """One writer: a style seed plus slant/size/noise drawn from it."""

    subject_id: str
    style_seed: int
    slant: float
    size_jitter: float
    noise_sigma: float


@dataclass(frozen=True)
class SplitConfig:
    train: float = 0.6
    val: float = 0.2
    test: float = 0.2


@dataclass(frozen=True)
class CorpusSpec:
    language: str
    path: str | None
    max_strokes: int


def canonical_subject():
    """Neutral writer: no slant, unit size, zero point noise."""
    return SubjectProfile(subject_id="canonical", style_seed=0,
                          slant=0.0, size_jitter=1.0, noise_sigma=0.0)


def make_subjects(count, seed, slant_limit=0.3, size_spread=0.15, noise_sigma=0.02):
    """Draw `count` subject profiles deterministically from `seed`."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 701)))
    subjects = []
    for i in range(count):
        subjects.append(SubjectProfile(
            subject_id=f"s{i:04d}",
            style_seed=int(rng.integers(0, 2**31 - 1)),
            slant=float(rng.uniform(-slant_limit, slant_limit)),
            size_jitter=float(rng.uniform(1.0 - size_spread, 1.0 + size_spread)),
            noise_sigma=noise_sigma,
        ))
    return subjects


# Accent folding is NFD decomposition minus combining marks, with the one
# special case that has no single-character base form.
_SPECIAL_FOLD = {"ß": "ss", "ẞ": "SS", "œ": "oe", "Œ": "OE", "æ": "ae", "Æ": "AE"}


def preprocess_text(text, language="en", allowed=None):
    """Fold accents to base characters, drop characters without a glyph, and
    collapse whitespace runs to single spaces. Total on any input.
    """
    if allowed is None:
        allowed = set(default_bank().symbols())
    out = []
    for ch in text:
        if ch.isspace():
            out.append(" ")
            continue
        folded = _SPECIAL_FOLD.get(ch)
        if folded is None:
            folded = "".join(c for c in unicodedata.normalize("NFD", ch)
                             if not unicodedata.combining(c))
        for c in folded:
            if c in allowed:
                out.append(c)
    collapsed = " ".join("".join(out).split())
    return collapsed


def _densify(polyline, spacing=_TOUCH_SPACING, cap=_MAX_TOUCHES):
    from . import kernels

    seg = np.sqrt(np.sum(np.diff(polyline, axis=0) ** 2, axis=1)).sum()
    k = int(np.clip(round(seg / spacing) + 2, 3, cap))
    return kernels.resample_polyline(np.ascontiguousarray(polyline), k)


def generate_glyph(symbol, subject, occurrence, bank=None):
    """Render one glyph for (symbol, subject, occurrence), deterministically.

    Template strokes are densified to touch resolution, slanted and scaled by
    the subject's style, given a small per-occurrence rotation/scale wobble,
    and perturbed with Gaussian point noise.
    """
    if bank is None:
        bank = default_bank()
    try:
        variants = bank.variants(symbol)
    except KeyError:
        raise ValueError(f"no glyph for symbol {symbol!r}") from None
    codes = tuple(ord(c) for c in symbol)
    rng = np.random.default_rng(
        np.random.SeedSequence((subject.style_seed,) + codes + (occurrence,)))
    template = variants[int(rng.integers(0, len(variants)))]

    rot = rng.uniform(-0.05, 0.05)
    wobble = rng.uniform(0.94, 1.06)
    scale = subject.size_jitter * wobble
    shear = np.tan(subject.slant)
    c, s = np.cos(rot), np.sin(rot)
    m = np.array([[c, -s], [s, c]]) @ np.array([[1.0, shear], [0.0, 1.0]]) * scale

    strokes = []
    for polyline in template:
        pts = _densify(polyline) @ m.T
        pts = pts + rng.normal(0.0, subject.noise_sigma, size=pts.shape)
        strokes.append(Stroke(pts))
    return Glyph(strokes=strokes, label=symbol)


def compose_sentence(text, bank, subject, max_strokes=None):
    """Lay glyphs for `text` left to right on a jittered baseline.

    Spaces advance the cursor without emitting strokes. The returned sequence
    stores the transcription verbatim plus per-glyph stroke spans.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence((subject.style_seed, zlib.crc32(text.encode("utf-8")))))
    cursor = 0.0
    occurrences = {}
    strokes = []
    spans = []
    for ch in text:
        if ch == " ":
            cursor += bank.space_advance * subject.size_jitter
            continue
        occ = occurrences.get(ch, 0)
        occurrences[ch] = occ + 1
        glyph = generate_glyph(ch, subject, occ, bank)
        y_off = rng.uniform(-2.0, 2.0) * subject.noise_sigma
        offset = np.array([cursor, y_off])
        start = len(strokes)
        for st in glyph.strokes:
            strokes.append(st.transformed(lambda xy: xy + offset))
        spans.append((ch, start, len(strokes)))
        cursor += bank.advance[ch] * subject.size_jitter
    if not strokes:
        raise ValueError(f"text {text!r} produced no strokes")
    if max_strokes is not None and len(strokes) > max_strokes:
        raise ValueError(
            f"sentence too long: {len(strokes)} strokes > {max_strokes} budget")

    # Uniform synthetic timestamps over the whole sentence, in writing order.
    idx = 0
    timed = []
    for st in strokes:
        k = len(st)
        timed.append(Stroke(st.xy, t=np.arange(idx, idx + k) * 0.01))
        idx += k
    return StrokeSequence(strokes=timed, text=text,
                          subject_id=subject.subject_id, glyph_spans=spans)


def count_glyph_clusters(seq, gap=0.02):
    """Number of groups of strokes whose x-extents overlap (within `gap`)."""
    intervals = sorted((s.xy[:, 0].min(), s.xy[:, 0].max()) for s in seq.strokes)
    count = 0
    reach = -np.inf
    for lo, hi in intervals:
        if lo > reach + gap:
            count += 1
        reach = max(reach, hi)
    return count


def split_subjects(subjects, config, seed):
    """Partition subjects into disjoint train/val/test sets by rounded
    fractions, deterministically in `seed`.
    """
    total = config.train + config.val + config.test
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"split fractions sum to {total}, expected 1")
    if len(subjects) < 5:
        raise ValueError(f"need at least 5 subjects, got {len(subjects)}")
    order = np.random.default_rng(seed).permutation(len(subjects))
    shuffled = [subjects[i] for i in order]
    n = len(subjects)
    n_train = int(round(n * config.train))
    n_val = int(round(n * config.val))
    train = shuffled[:n_train]
    val = shuffled[n_train:n_train + n_val]
    test = shuffled[n_train + n_val:]
    return train, val, test


def build_examples(texts, subjects, bank, max_strokes, sentences_per_subject=None):
    """Compose one example per (text, subject) pairing, texts round-robin."""
    examples = []
    per = len(texts) if sentences_per_subject is None else sentences_per_subject
    i = 0
    for subject in subjects:
        for _ in range(per):
            examples.append(compose_sentence(texts[i % len(texts)], bank, subject,
                                             max_strokes=max_strokes))
            i += 1
    return examples


def save_jsonl(examples, path):
    """Write examples as one {subject_id, text, strokes} object per line."""
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            rec = {
                "subject_id": ex.subject_id,
                "text": ex.text,
                "strokes": [s.xy.tolist() for s in ex.strokes],
            }
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_jsonl(path):
    """Inverse of save_jsonl. Malformed lines report their line number."""
    examples = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                strokes = [Stroke(np.asarray(s, dtype=np.float64))
                           for s in rec["strokes"]]
                examples.append(StrokeSequence(
                    strokes=strokes, text=rec["text"],
                    subject_id=rec["subject_id"]))
            except (ValueError, KeyError, TypeError) as e:
                raise ValueError(f"malformed JSONL at line {lineno}: {e}") from None
    return examples
