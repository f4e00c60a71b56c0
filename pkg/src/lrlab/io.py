"""CSV export of curves and time series, plus a dependency-free SVG line plot.

CSV layout: ``# key=value`` provenance lines, a ``t_ps,value`` header, then
one row per sample with 17 significant digits, LF line endings.
"""

import math
from pathlib import Path

import numpy as np

from .constants import HBAR


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (tuple, list, np.ndarray)):
        return ",".join(_fmt(x) for x in v)
    return str(v).replace("\n", " ")


def provenance_of(obj):
    meta = {}
    kind = getattr(obj, "kind", None)
    if kind is not None:
        meta["kind"] = kind
        meta["cap"] = obj.cap
        meta.update(obj.params)
    else:
        meta["observable"] = obj.observable
        meta.update(obj.provenance)
    meta["hbar_meV_ps"] = HBAR
    return meta


def emit_csv(obj, path, extra=None):
    """Write a BoundCurve or TimeSeries to ``path``. Returns the path."""
    path = Path(path)
    meta = provenance_of(obj)
    meta.update(extra or {})
    lines = [f"# {k}={_fmt(meta[k])}" for k in sorted(meta)]
    lines.append("t_ps,value")
    lines += ["%.17g,%.17g" % (t, v) for t, v in zip(obj.times, obj.values)]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path):
    """Inverse of ``emit_csv``: (provenance dict of strings, times, values)."""
    meta, times, values = {}, [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, val = line[2:].partition("=")
                meta[key] = val
            elif line == "t_ps,value" or not line:
                continue
            else:
                t, v = line.split(",")
                times.append(float(t))
                values.append(float(v))
    return meta, np.array(times), np.array(values)


def emit_svg(curves, path, title="", width=640, height=400, log_y=False):
    """Minimal SVG line plot of (label, times, values) triples."""
    pad = 50
    colors = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd"]
    ts = np.concatenate([np.asarray(t, float) for _, t, _ in curves])
    vs = np.concatenate([np.asarray(v, float) for _, _, v in curves])
    vs = vs[np.isfinite(vs)]
    if log_y:
        vs = np.log10(vs[vs > 0]) if np.any(vs > 0) else np.array([0.0])
    t0, t1 = float(ts.min()), float(ts.max()) or 1.0
    v0, v1 = float(vs.min()), float(vs.max())
    if v1 == v0:
        v1 = v0 + 1.0

    def xy(t, v):
        x = pad + (t - t0) / (t1 - t0) * (width - 2 * pad)
        y = height - pad - (v - v0) / (v1 - v0) * (height - 2 * pad)
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">t (ps)</text>',
        f'<text x="{pad}" y="{height - pad + 15}" font-size="10">{t0:g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 15}" font-size="10" text-anchor="end">{t1:g}</text>',
    ]
    for k, (label, t, v) in enumerate(curves):
        t = np.asarray(t, float)
        v = np.asarray(v, float)
        if log_y:
            ok = v > 0
            t, v = t[ok], np.log10(v[ok])
        ok = np.isfinite(v)
        pts = " ".join("%.2f,%.2f" % xy(a, b) for a, b in zip(t[ok], v[ok]))
        color = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 5}" y="{pad + 15 * (k + 1)}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


def finite_or_none(x):
    """JSON-friendly float: inf and nan become None."""
    return None if x is None or not math.isfinite(x) else float(x)
