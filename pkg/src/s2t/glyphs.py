"""Built-in parametric letterforms: single/multi-stroke polyline templates.

Template space: baseline at y=0, x-height 0.55, cap height 1.0, descenders
to -0.30, ink starting near x=0. Each symbol carries an advance width; the
apostrophe deliberately overhangs its advance so it clusters with the next
glyph, and 'i', 'j', 't', 'x', '?' and most capitals are multi-stroke.
"""

import numpy as np


def _arc(cx, cy, rx, ry, deg0, deg1, pts=None):
    """Elliptic arc polyline from deg0 to deg1 (signed sweep, degrees)."""
    if pts is None:
        pts = max(4, int(round(abs(deg1 - deg0) / 24.0)) + 1)
    ang = np.radians(np.linspace(deg0, deg1, pts))
    return np.stack([cx + rx * np.cos(ang), cy + ry * np.sin(ang)], axis=1)


def _pts(*xy):
    return np.array(xy, dtype=np.float64)


def _join(*parts):
    return np.concatenate(parts, axis=0)


def _lower():
    t = {}
    t["a"] = 0.56, [_join(_arc(0.20, 0.28, 0.19, 0.26, 45, 315),
                          _pts((0.40, 0.52), (0.40, 0.02)))]
    t["b"] = 0.56, [_join(_pts((0.04, 1.0), (0.04, 0.02)),
                          _arc(0.22, 0.27, 0.19, 0.26, -160, 160))]
    t["c"] = 0.52, [_arc(0.22, 0.28, 0.20, 0.26, 50, 310)]
    t["d"] = 0.56, [_join(_arc(0.20, 0.28, 0.19, 0.26, 45, 315),
                          _pts((0.41, 1.0), (0.41, 0.02)))]
    t["e"] = 0.54, [_join(_pts((0.04, 0.28), (0.40, 0.28)),
                          _arc(0.22, 0.28, 0.185, 0.255, 0, 300))]
    t["f"] = 0.44, [_join(_arc(0.28, 0.84, 0.16, 0.14, 80, 180),
                          _pts((0.12, 0.70), (0.12, 0.0))),
                    _pts((0.0, 0.55), (0.30, 0.55))]
    t["g"] = 0.56, [_join(_arc(0.20, 0.28, 0.19, 0.26, 45, 315),
                          _pts((0.40, 0.52), (0.40, -0.12), (0.30, -0.28),
                               (0.10, -0.28), (0.02, -0.18)))]
    t["h"] = 0.56, [_join(_pts((0.04, 1.0), (0.04, 0.0), (0.04, 0.35)),
                          _arc(0.22, 0.33, 0.185, 0.22, 180, 0),
                          _pts((0.405, 0.0)))]
    t["i"] = 0.24, [_pts((0.10, 0.55), (0.10, 0.0)),
                    _arc(0.10, 0.78, 0.025, 0.025, 0, 360, 6)]
    t["j"] = 0.30, [_pts((0.16, 0.55), (0.16, -0.14), (0.10, -0.28), (0.0, -0.24)),
                    _arc(0.16, 0.78, 0.025, 0.025, 0, 360, 6)]
    t["k"] = 0.52, [_pts((0.04, 1.0), (0.04, 0.0)),
                    _pts((0.36, 0.55), (0.05, 0.25), (0.38, 0.0))]
    t["l"] = 0.26, [_pts((0.10, 1.0), (0.10, 0.05), (0.18, 0.0))]
    t["m"] = 0.64, [_join(_pts((0.03, 0.55), (0.03, 0.0), (0.03, 0.38)),
                          _arc(0.14, 0.36, 0.11, 0.19, 180, 0),
                          _pts((0.25, 0.0), (0.25, 0.38)),
                          _arc(0.36, 0.36, 0.11, 0.19, 180, 0),
                          _pts((0.47, 0.0)))]
    t["n"] = 0.54, [_join(_pts((0.03, 0.55), (0.03, 0.0), (0.03, 0.38)),
                          _arc(0.20, 0.35, 0.17, 0.20, 180, 0),
                          _pts((0.37, 0.0)))]
    t["o"] = 0.54, [_arc(0.21, 0.28, 0.19, 0.26, 90, 450)]
    t["p"] = 0.56, [_pts((0.04, 0.55), (0.04, -0.30)),
                    _arc(0.22, 0.28, 0.18, 0.25, -160, 160)]
    t["q"] = 0.56, [_join(_arc(0.20, 0.28, 0.19, 0.26, 45, 315),
                          _pts((0.40, 0.52), (0.40, -0.28), (0.47, -0.18)))]
    t["r"] = 0.42, [_join(_pts((0.03, 0.55), (0.03, 0.0), (0.03, 0.35)),
                          _arc(0.18, 0.33, 0.15, 0.20, 180, 30))]
    t["s"] = 0.48, [_join(_arc(0.23, 0.42, 0.16, 0.13, 30, 180),
                          _arc(0.20, 0.155, 0.17, 0.145, 90, -130))]
    t["t"] = 0.48, [_pts((0.14, 0.85), (0.14, 0.06), (0.24, 0.0)),
                    _pts((0.0, 0.55), (0.32, 0.55))]
    t["u"] = 0.54, [_join(_pts((0.03, 0.55), (0.03, 0.15)),
                          _arc(0.20, 0.155, 0.17, 0.15, 180, 360),
                          _pts((0.38, 0.55), (0.38, 0.0)))]
    t["v"] = 0.48, [_pts((0.0, 0.55), (0.19, 0.0), (0.38, 0.55))]
    t["w"] = 0.62, [_pts((0.0, 0.55), (0.13, 0.0), (0.25, 0.42), (0.37, 0.0), (0.50, 0.55))]
    t["x"] = 0.48, [_pts((0.0, 0.55), (0.38, 0.0)),
                    _pts((0.38, 0.55), (0.0, 0.0))]
    t["y"] = 0.50, [_pts((0.02, 0.55), (0.20, 0.12)),
                    _pts((0.40, 0.55), (0.02, -0.30))]
    t["z"] = 0.48, [_pts((0.0, 0.55), (0.36, 0.55), (0.0, 0.0), (0.36, 0.0))]
    return t


def _upper():
    t = {}
    t["A"] = 0.68, [_pts((0.0, 0.0), (0.27, 1.0), (0.54, 0.0)),
                    _pts((0.10, 0.38), (0.44, 0.38))]
    t["B"] = 0.62, [_pts((0.04, 1.0), (0.04, 0.0)),
                    _join(_pts((0.04, 1.0)),
                          _arc(0.04, 0.76, 0.32, 0.24, 90, -90),
                          _arc(0.04, 0.26, 0.38, 0.26, 90, -90))]
    t["C"] = 0.66, [_arc(0.32, 0.50, 0.28, 0.48, 55, 305)]
    t["D"] = 0.68, [_pts((0.04, 1.0), (0.04, 0.0)),
                    _join(_pts((0.04, 1.0)), _arc(0.04, 0.50, 0.46, 0.50, 90, -90))]
    t["E"] = 0.58, [_pts((0.42, 1.0), (0.04, 1.0), (0.04, 0.0), (0.42, 0.0)),
                    _pts((0.04, 0.52), (0.34, 0.52))]
    t["F"] = 0.56, [_pts((0.42, 1.0), (0.04, 1.0), (0.04, 0.0)),
                    _pts((0.04, 0.55), (0.34, 0.55))]
    t["G"] = 0.68, [_join(_arc(0.30, 0.50, 0.27, 0.47, 60, 320),
                          _pts((0.52, 0.40), (0.32, 0.40)))]
    t["H"] = 0.68, [_pts((0.04, 1.0), (0.04, 0.0)),
                    _pts((0.52, 1.0), (0.52, 0.0)),
                    _pts((0.04, 0.50), (0.52, 0.50))]
    t["I"] = 0.28, [_pts((0.10, 1.0), (0.10, 0.0))]
    t["J"] = 0.54, [_join(_pts((0.40, 1.0), (0.40, 0.15)),
                          _arc(0.25, 0.15, 0.15, 0.15, 0, -180))]
    t["K"] = 0.64, [_pts((0.04, 1.0), (0.04, 0.0)),
                    _pts((0.48, 1.0), (0.04, 0.45), (0.50, 0.0))]
    t["L"] = 0.56, [_pts((0.06, 1.0), (0.06, 0.0), (0.44, 0.0))]
    t["M"] = 0.70, [_pts((0.03, 0.0), (0.03, 1.0), (0.27, 0.35), (0.51, 1.0), (0.51, 0.0))]
    t["N"] = 0.66, [_pts((0.04, 0.0), (0.04, 1.0), (0.48, 0.0), (0.48, 1.0))]
    t["O"] = 0.70, [_arc(0.28, 0.50, 0.26, 0.48, 90, 450)]
    t["P"] = 0.60, [_pts((0.04, 1.0), (0.04, 0.0)),
                    _join(_pts((0.04, 1.0)), _arc(0.04, 0.74, 0.36, 0.26, 90, -90))]
    t["Q"] = 0.72, [_arc(0.28, 0.52, 0.26, 0.46, 90, 450),
                    _pts((0.34, 0.22), (0.54, -0.05))]
    t["R"] = 0.64, [_pts((0.04, 1.0), (0.04, 0.0)),
                    _join(_pts((0.04, 1.0)),
                          _arc(0.04, 0.75, 0.35, 0.25, 90, -90),
                          _pts((0.46, 0.0)))]
    t["S"] = 0.62, [_join(_arc(0.29, 0.74, 0.24, 0.24, 40, 180),
                          _arc(0.27, 0.25, 0.25, 0.25, 90, -135))]
    t["T"] = 0.62, [_pts((0.0, 1.0), (0.52, 1.0)),
                    _pts((0.26, 1.0), (0.26, 0.0))]
    t["U"] = 0.66, [_join(_pts((0.04, 1.0), (0.04, 0.30)),
                          _arc(0.27, 0.30, 0.23, 0.30, 180, 360),
                          _pts((0.50, 1.0)))]
    t["V"] = 0.62, [_pts((0.0, 1.0), (0.26, 0.0), (0.52, 1.0))]
    t["W"] = 0.74, [_pts((0.0, 1.0), (0.15, 0.0), (0.30, 0.60), (0.45, 0.0), (0.60, 1.0))]
    t["X"] = 0.62, [_pts((0.0, 1.0), (0.50, 0.0)),
                    _pts((0.50, 1.0), (0.0, 0.0))]
    t["Y"] = 0.62, [_pts((0.0, 1.0), (0.25, 0.45)),
                    _pts((0.50, 1.0), (0.25, 0.45), (0.25, 0.0))]
    t["Z"] = 0.60, [_pts((0.0, 1.0), (0.48, 1.0), (0.0, 0.0), (0.48, 0.0))]
    return t


def _punct():
    t = {}
    t["."] = 0.30, [_arc(0.11, 0.03, 0.03, 0.03, 0, 360, 6)]
    t["-"] = 0.44, [_pts((0.02, 0.30), (0.34, 0.30))]
    # Overhangs its advance on purpose: the tick hugs the following glyph.
    t["'"] = 0.14, [_pts((0.08, 1.0), (0.24, 0.70))]
    t["?"] = 0.54, [_join(_arc(0.22, 0.76, 0.18, 0.20, 180, -60),
                          _pts((0.26, 0.34), (0.26, 0.22))),
                    _arc(0.26, 0.03, 0.03, 0.03, 0, 360, 6)]
    return t


class GlyphBank:
    """Symbol -> template variants (lists of polyline strokes) + advances."""

    def __init__(self, templates, space_advance=0.50):
        self.advance = {}
        self.templates = {}
        for sym, (adv, strokes) in templates.items():
            self.advance[sym] = adv
            self.templates[sym] = [strokes]
        self.space_advance = space_advance

    def symbols(self):
        return sorted(self.templates)

    def __contains__(self, sym):
        return sym in self.templates

    def variants(self, sym):
        if sym not in self.templates:
            raise KeyError(f"no glyph for symbol {sym!r}")
        return self.templates[sym]


def default_bank():
    """Bank covering a-z, A-Z and the punctuation {., ?, -, '}."""
    entries = {}
    entries.update(_lower())
    entries.update(_upper())
    entries.update(_punct())
    return GlyphBank(entries)
