"""Serialization: canonical JSON, RFC 4180 CSV, a small SVG line plot, hashed manifests.

Canonical JSON sorts keys, writes floats with ``repr`` (shortest round-trip
form) and encodes non-finite floats as the strings ``"inf"``, ``"-inf"`` and
``"nan"``. Identical data therefore always hashes identically.
"""
import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path

import numpy as np

from .definetti import Mixture
from .measures import DiscreteMeasure, NBodyMeasure, PairMeasure, SupportGrid


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def canonical_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True,
                      allow_nan=False) + "\n"


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


# -- measures -------------------------------------------------------------------


def grid_to_dict(grid):
    d = {"points": grid.points.tolist()}
    if grid.period is not None:
        d["period"] = grid.period.tolist()
    if grid.shape is not None:
        d["shape"] = list(grid.shape)
    return d


def grid_from_dict(d):
    if "torus" in d:
        t = d["torus"]
        return SupportGrid.torus(int(t["M"]), float(t["L"]), int(t.get("d", 1)))
    return SupportGrid(np.asarray(d["points"], dtype=np.float64), d.get("period"),
                       tuple(d["shape"]) if d.get("shape") else None)


def measure_to_dict(x):
    if isinstance(x, DiscreteMeasure):
        return {"kind": "discrete", "grid": grid_to_dict(x.grid), "weights": x.weights.tolist()}
    if isinstance(x, PairMeasure):
        return {"kind": "pair", "grid": grid_to_dict(x.grid), "weights": x.weights.tolist()}
    if isinstance(x, NBodyMeasure):
        return {"kind": "nbody", "grid": grid_to_dict(x.grid), "n": x.n, "mode": x.mode,
                "weights": x.weights.ravel().tolist()}
    if isinstance(x, Mixture):
        return {"kind": "mixture", "grid": grid_to_dict(x.grid), "components": x.components.tolist(),
                "weights": x.weights.tolist()}
    raise TypeError(f"cannot serialize {type(x).__name__}")


def measure_from_dict(d):
    """Inverse of :func:`measure_to_dict`.

    Shorthand accepted for input files: ``{"points": [...], "weights": [...]}``
    is a discrete measure, with a square weight matrix it is a pair measure.
    """
    grid = grid_from_dict(d["grid"] if "grid" in d else d)
    kind = d.get("kind")
    w = np.asarray(d["weights"], dtype=np.float64)
    if kind is None:
        kind = "pair" if w.ndim == 2 else "discrete"
    if kind == "discrete":
        return DiscreteMeasure(grid, w)
    if kind == "pair":
        return PairMeasure(grid, w)
    if kind == "nbody":
        return NBodyMeasure(grid, int(d["n"]), w, mode=d.get("mode", "multiset"))
    if kind == "mixture":
        return Mixture(grid, np.asarray(d["components"], dtype=np.float64), w)
    raise ValueError(f"unknown measure kind {kind!r}")


def load_measure(path):
    with open(path) as fh:
        return measure_from_dict(json.load(fh))


# -- tables and plots -------------------------------------------------------------


def _cell(v):
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _fmt(v):
    return f"{v:.2f}"


def svg_line_plot(series, title="", xlabel="", ylabel="", hlines=(), width=480, height=320):
    """SVG 1.1 polyline plot.

    ``series`` maps a label to ``(xs, ys)``; ``hlines`` is a list of
    ``(label, y)`` drawn dashed. Non-finite points are skipped.
    """
    pad = 50
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys)
           if y is not None and math.isfinite(x) and math.isfinite(y)]
    ys = [p[1] for p in pts] + [y for _, y in hlines if math.isfinite(y)]
    xs = [p[0] for p in pts] or [0.0, 1.0]
    if not ys:
        ys = [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def X(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def Y(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
        f'<text x="12" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 12 {height / 2:.1f})">{_esc(ylabel)}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-size="10">{y0:.4g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-size="10">{y1:.4g}</text>',
        f'<text x="{pad}" y="{height - pad + 14}" text-anchor="middle" font-size="10">{x0:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 14}" text-anchor="middle" font-size="10">{x1:.4g}</text>',
    ]
    for i, (label, y) in enumerate(hlines):
        if not math.isfinite(y):
            continue
        out.append(f'<line x1="{pad}" y1="{_fmt(Y(y))}" x2="{width - pad}" y2="{_fmt(Y(y))}" '
                   f'stroke="gray" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{width - pad}" y="{_fmt(Y(y) - 4)}" text-anchor="end" font-size="10">{_esc(label)}</text>')
    for i, (label, (sx, sy)) in enumerate(series.items()):
        col = colors[i % len(colors)]
        p = [(X(x), Y(y)) for x, y in zip(sx, sy) if y is not None and math.isfinite(y)]
        if p:
            out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="'
                       + " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in p) + '"/>')
            out += [f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.5" fill="{col}"/>' for a, b in p]
        out.append(f'<text x="{pad + 8}" y="{pad + 14 * (i + 1)}" font-size="11" fill="{col}">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# -- persistence ----------------------------------------------------------------


def _write(path, text):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror}") from e


def persist(result, directory):
    """Write ``result.json``, one CSV per table, one SVG per plot, and ``manifest.json``.

    ``result`` provides ``to_dict()``, ``tables()`` (name -> (columns, rows))
    and ``plots()`` (name -> svg text). Wall times live only in
    ``timings.json``, which the manifest lists without a hash, so reruns hash
    identically. Returns the manifest dict.
    """
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {d}: {e.strerror}") from e
    files = {}
    body = canonical_json(result.to_dict())
    _write(d / "result.json", body)
    files["result.json"] = body
    for name, (cols, rows) in sorted(result.tables().items()):
        text = table_csv(cols, rows)
        _write(d / f"{name}.csv", text)
        files[f"{name}.csv"] = text
    for name, svg in sorted(result.plots().items()):
        _write(d / f"{name}.svg", svg)
        files[f"{name}.svg"] = svg
    timings = getattr(result, "timings", None)
    manifest = {
        "files": [{"path": k, "sha256": sha256_bytes(v.encode()), "bytes": len(v.encode())}
                  for k, v in sorted(files.items())],
        "data_files": sum(1 for k in files if k != "result.json"),
    }
    if timings is not None:
        _write(d / "timings.json", canonical_json(timings))
        manifest["unhashed"] = ["timings.json"]
    _write(d / "manifest.json", canonical_json(manifest))
    return manifest


def read_manifest(directory):
    with open(os.path.join(directory, "manifest.json")) as fh:
        return json.load(fh)
