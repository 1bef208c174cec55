"""Trajectory CSV files, SVG line charts and run manifests."""
import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .errors import MalformedCSV

# envelope column paired with each simulated bound; +1 marks a lower bound
ENVELOPE_PAIRS = {
    "scalar_min": ("env_scalar", 1),
    "scalar_max": ("env_scalar_upper", -1),
    "ricci_min": ("env_ricci", 1),
    "holsec_min": ("env_holsec", 1),
}


def fmt(x):
    """17 significant digits: enough to round-trip any double."""
    x = float(x)
    if np.isnan(x):
        return "nan"
    return format(x, ".17g")


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path, columns, rows):
    Path(path).write_text(csv_text(columns, rows))


def json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def read_csv(path):
    """``{column: float array}``; raises MalformedCSV on empty or ragged input."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MalformedCSV(f"{path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise MalformedCSV(f"{path}: no data rows")
    header = rows[0]
    if "t" not in header:
        raise MalformedCSV(f"{path}: missing 't' column")
    data = []
    for k, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise MalformedCSV(f"{path}:{k}: expected {len(header)} fields, got {len(r)}")
        try:
            data.append([float(v) for v in r])
        except ValueError as exc:
            raise MalformedCSV(f"{path}:{k}: {exc}") from exc
    arr = np.array(data)
    return {name: arr[:, i] for i, name in enumerate(header)}


def envelope_violations(table):
    """Worst signed violation per bound (positive = simulated bound crossed its envelope)."""
    out = {}
    for col, (env, sign) in ENVELOPE_PAIRS.items():
        if col not in table or env not in table:
            continue
        gap = sign * (table[env] - table[col])
        gap = gap[np.isfinite(gap)]
        if gap.size:
            out[col] = float(max(gap.max(), 0.0))
    return out


def svg_chart(t, series, title, width=640, height=360):
    """Line chart; ``series`` is a list of ``(label, values, dashed)``."""
    pad_l, pad_r, pad_t, pad_b = 70, 20, 30, 40
    vals = np.concatenate([np.asarray(v)[np.isfinite(v)] for _, v, _ in series] or [[0.0]])
    lo, hi = (float(vals.min()), float(vals.max())) if vals.size else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    t = np.asarray(t, dtype=float)
    t0, t1 = float(t.min()), float(t.max()) if t.max() > t.min() else float(t.min()) + 1.0

    def px(tt):
        return pad_l + (tt - t0) / (t1 - t0) * (width - pad_l - pad_r)

    def py(v):
        return height - pad_b - (v - lo) / (hi - lo) * (height - pad_t - pad_b)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad_l}" y1="{height - pad_b}" x2="{width - pad_r}" y2="{height - pad_b}" stroke="black"/>',
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{height - pad_b}" stroke="black"/>',
    ]
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        tt = t0 + (t1 - t0) * k / 4
        parts.append(
            f'<text x="{pad_l - 6}" y="{py(v) + 4:.1f}" text-anchor="end" font-size="10">{v:.4g}</text>'
        )
        parts.append(
            f'<text x="{px(tt):.1f}" y="{height - pad_b + 16}" text-anchor="middle" font-size="10">{tt:.3g}</text>'
        )
    for i, (label, v, dashed) in enumerate(series):
        v = np.asarray(v, dtype=float)
        ok = np.isfinite(v)
        if not ok.any():
            continue
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(t[ok], v[ok]))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        c = colors[i % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"{dash}/>')
        parts.append(
            f'<text x="{width - pad_r - 4}" y="{pad_t + 14 * (i + 1)}" text-anchor="end" '
            f'font-size="11" fill="{c}">{label}</text>'
        )
    parts.append(f'<text x="{width / 2:.1f}" y="{height - 6}" text-anchor="middle" font-size="11">t</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(csv_paths, out_dir):
    """One SVG per bound and run plus ``summary.txt``; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not csv_paths:
        raise MalformedCSV("no trajectory files given")
    written = []
    lines = ["run\tbound\tworst_violation"]
    for path in csv_paths:
        table = read_csv(path)
        stem = Path(path).stem
        for col, (env, _) in ENVELOPE_PAIRS.items():
            if col not in table:
                continue
            series = [(col, table[col], False)]
            if env in table:
                series.append((env, table[env], True))
            svg = out_dir / f"{stem}_{col}.svg"
            svg.write_text(svg_chart(table["t"], series, f"{stem}: {col}"))
            written.append(svg)
        for col, v in envelope_violations(table).items():
            lines.append(f"{stem}\t{col}\t{fmt(v)}")
    summary = out_dir / "summary.txt"
    summary.write_text("\n".join(lines) + "\n")
    written.append(summary)
    return written


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
