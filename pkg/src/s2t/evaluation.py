"""Metrics (XEL, normalized Levenshtein accuracy, CER, WER), the robustness
harness (stroke ablation, deliberate spelling errors in the written input),
and cross-attention export as JSON plus one PGM heatmap per (layer, head).
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import compose_sentence
from .strokes import StrokeSequence


def _codes(a, b):
    """Map two strings (per char) or token lists to int64 code arrays drawn
    from one shared table."""
    if isinstance(a, str) and isinstance(b, str):
        return (np.array([ord(c) for c in a], dtype=np.int64),
                np.array([ord(c) for c in b], dtype=np.int64))
    table = {}

    def enc(seq):
        out = np.empty(len(seq), dtype=np.int64)
        for i, tok in enumerate(seq):
            out[i] = table.setdefault(tok, len(table) + 1)
        return out

    return enc(a), enc(b)


def levenshtein(a, b):
    """Minimum edit distance with unit-cost insert/delete/substitute."""
    ca, cb = _codes(a, b)
    if ca.size == 0:
        return int(cb.size)
    if cb.size == 0:
        return int(ca.size)
    return kernels.levenshtein_codes(ca, cb)


def _check_pairs(refs, hyps):
    if len(refs) != len(hyps):
        raise ValueError(f"got {len(refs)} references but {len(hyps)} hypotheses")
    for i, r in enumerate(refs):
        if len(r) == 0:
            raise ValueError(f"empty reference string at index {i}")


def la(refs, hyps):
    """Mean over examples of 1 - d(ref, hyp) / max(|ref|, |hyp|)."""
    _check_pairs(refs, hyps)
    accs = [1.0 - levenshtein(r, h) / max(len(r), len(h)) for r, h in zip(refs, hyps)]
    return float(np.mean(accs))


def cer(refs, hyps):
    """Micro-averaged character error rate: total edits / total ref chars."""
    _check_pairs(refs, hyps)
    edits = sum(levenshtein(r, h) for r, h in zip(refs, hyps))
    return edits / sum(len(r) for r in refs)


def wer(refs, hyps):
    """Word error rate over whitespace-split tokens."""
    _check_pairs(refs, hyps)
    edits = 0
    words = 0
    for r, h in zip(refs, hyps):
        rw, hw = r.split(), h.split()
        edits += levenshtein(rw, hw)
        words += len(rw)
    return edits / max(words, 1)


@dataclass
class EvalReport:
    xel: float
    la: float
    cer: float
    wer: float
    per_example: list

    def to_dict(self):
        return {"xel": self.xel, "la": self.la, "cer": self.cer, "wer": self.wer,
                "examples": self.per_example}

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=1)


def evaluate(params, config, vocab, examples, dtype=np.float32, batch_size=64):
    """Greedy-decode a split and score it against references; XEL is computed
    teacher-forced on the same split."""
    from .training import dataset_xel, decode_texts

    refs = [ex.text for ex in examples]
    hyps = decode_texts(examples, params, config, vocab, dtype, batch_size)
    per = [{"reference": r, "hypothesis": h, "distance": levenshtein(r, h)}
           for r, h in zip(refs, hyps)]
    return EvalReport(
        xel=dataset_xel(examples, params, config, vocab, dtype, batch_size),
        la=la(refs, hyps), cer=cer(refs, hyps), wer=wer(refs, hyps),
        per_example=per)


@dataclass
class AblationSpec:
    """Input corruption recipe. `spelling_substitution` rewrites the written
    glyphs through the substitution table while the stored reference text is
    left alone; it needs the bank and subject to recompose the input."""

    mode: str
    k: int = 1
    rate: float = 0.1
    table: dict | None = None
    seed: int = 0
    bank: object = None
    subject: object = None


def ablate(seq, spec):
    """Corrupt one sequence's input strokes per `spec`; the reference
    transcription is never modified."""
    if spec.mode == "drop_last_k_strokes":
        if spec.k >= len(seq.strokes):
            raise ValueError(
                f"cannot drop {spec.k} of {len(seq.strokes)} strokes")
        return StrokeSequence(strokes=seq.strokes[: len(seq.strokes) - spec.k],
                              text=seq.text, subject_id=seq.subject_id)
    if spec.mode == "drop_random_strokes":
        rng = np.random.default_rng(spec.seed)
        keep = rng.random(len(seq.strokes)) >= spec.rate
        if not keep.any():
            raise ValueError("random drop removed every stroke")
        kept = [s for s, k in zip(seq.strokes, keep) if k]
        return StrokeSequence(strokes=kept, text=seq.text, subject_id=seq.subject_id)
    if spec.mode == "spelling_substitution":
        if not spec.table:
            raise ValueError("spelling_substitution needs a substitution table")
        if spec.bank is None or spec.subject is None:
            raise ValueError("spelling_substitution needs bank and subject "
                             "to recompose the written input")
        positions = [i for i, ch in enumerate(seq.text) if ch in spec.table]
        if not positions:
            raise ValueError(f"no substitutable character in {seq.text!r}")
        rng = np.random.default_rng(spec.seed)
        pos = positions[int(rng.integers(0, len(positions)))]
        written = seq.text[:pos] + spec.table[seq.text[pos]] + seq.text[pos + 1:]
        wrong = compose_sentence(written, spec.bank, spec.subject)
        return StrokeSequence(strokes=wrong.strokes, text=seq.text,
                              subject_id=seq.subject_id,
                              glyph_spans=wrong.glyph_spans)
    raise ValueError(f"unknown ablation mode {spec.mode!r}")


def elide_final_glyph(seq):
    """Drop the strokes of the last composed glyph (needs glyph spans)."""
    if not seq.glyph_spans:
        raise ValueError("sequence has no glyph spans; recompose it first")
    _, start, end = seq.glyph_spans[-1]
    return ablate(seq, AblationSpec(mode="drop_last_k_strokes", k=end - start))


def write_pgm(path, weights):
    """Binary PGM heatmap: rows = outputs, cols = inputs, weight 1 = black."""
    w = np.asarray(weights, dtype=np.float64)
    pixels = np.round(255.0 * (1.0 - w)).clip(0, 255).astype(np.uint8)
    h, width = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {h}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def read_pgm(path):
    with open(path, "rb") as f:
        if f.readline().strip() != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        width, height = map(int, f.readline().split())
        maxval = int(f.readline())
        if maxval != 255:
            raise ValueError(f"{path}: expected 8-bit PGM")
        data = np.frombuffer(f.read(width * height), dtype=np.uint8)
    return data.reshape(height, width)


def export_attention(record, input_labels, output_tokens, out_dir):
    """Write one decode's cross-attention as attention.json plus a PGM per
    (layer, head). Only unmasked input columns are exported."""
    os.makedirs(out_dir, exist_ok=True)
    kept = record.input_mask
    layers_doc = []
    paths = []
    for li, layer_w in enumerate(record.layers):
        heads_doc = []
        for hi in range(layer_w.shape[0]):
            w = layer_w[hi][:, kept]
            heads_doc.append([[float(v) for v in row] for row in w])
            pgm = os.path.join(out_dir, f"attn_l{li}_h{hi}.pgm")
            write_pgm(pgm, w)
            paths.append(pgm)
        layers_doc.append({"heads": heads_doc})
    doc = {"layers": layers_doc, "input_labels": list(input_labels),
           "output_tokens": list(output_tokens)}
    json_path = os.path.join(out_dir, "attention.json")
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False)
    return json_path, paths


def tracking_monotonicity(records):
    """Per (layer, head): mean fraction of adjacent output tokens whose
    argmax input column does not decrease. Tracking usually concentrates in
    one head, so take the max over (layer, head) as the headline number."""
    n_layers = len(records[0].layers)
    n_heads = records[0].head_count()
    fractions = np.zeros((n_layers, n_heads))
    counted = np.zeros((n_layers, n_heads))
    for rec in records:
        for li, layer_w in enumerate(rec.layers):
            for hi in range(n_heads):
                w = layer_w[hi][:, rec.input_mask]
                if w.shape[0] < 2:
                    continue
                track = np.argmax(w, axis=1)
                frac = float(np.mean(np.diff(track) >= 0))
                fractions[li, hi] += frac
                counted[li, hi] += 1
    return fractions / np.maximum(counted, 1)
