"""Run manifests, table output and minimal SVG line plots."""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    experiment: str
    seed: int
    replications: int | None = None
    n_grid: list = field(default_factory=list)
    scale: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    threads: int = 1
    outputs: list = field(default_factory=list)
    status: str = "running"
    wall_clock_s: float | None = None
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


class RunDirectory:
    """Output directory for one experiment run.

    The manifest is written with ``status = "running"`` as soon as the run
    starts and rewritten with the output list and ``"complete"`` by
    :meth:`finish`, so an interrupted run is recognizable.
    """

    def __init__(self, out_dir, manifest: RunManifest):
        self.path = Path(out_dir)
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        self._t0 = time.perf_counter()
        self._write_manifest()

    def _write_manifest(self):
        text = json.dumps(self.manifest.to_dict(), indent=2, sort_keys=True)
        (self.path / MANIFEST_NAME).write_text(text + "\n")

    def file(self, name: str) -> Path:
        if name not in self.manifest.outputs:
            self.manifest.outputs.append(name)
        return self.path / name

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        p = self.file(name)
        write_csv(p, header, rows)
        return p

    def write_json(self, name: str, payload) -> Path:
        p = self.file(name)
        p.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
        return p

    def write_svg(self, name: str, series: Mapping[str, tuple], **kw) -> Path:
        p = self.file(name)
        p.write_text(svg_line_plot(series, **kw))
        return p

    def finish(self) -> None:
        self.manifest.status = "complete"
        self.manifest.wall_clock_s = round(time.perf_counter() - self._t0, 3)
        self._write_manifest()


def open_run(out_dir, manifest: RunManifest) -> RunDirectory | None:
    return None if out_dir is None else RunDirectory(out_dir, manifest)


def format_cell(v) -> str:
    """Floats use ``repr`` (shortest round-trip form), so equal values give equal bytes."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_cell(v) for v in row])


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def svg_line_plot(
    series: Mapping[str, tuple],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    log_x: bool = False,
    diagonal: bool = False,
    width: int = 480,
    height: int = 360,
) -> str:
    """Plain SVG with one polyline per ``name -> (x, y)`` entry."""
    pad_l, pad_r, pad_t, pad_b = 60, 130, 30, 45
    xs, ys = [], []
    for x, y in series.values():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y) & ((x > 0) if log_x else True)
        xs.append(np.log10(x[keep]) if log_x else x[keep])
        ys.append(y[keep])
    allx = np.concatenate(xs) if xs else np.array([0.0, 1.0])
    ally = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    x0, x1 = (float(allx.min()), float(allx.max())) if allx.size else (0.0, 1.0)
    y0, y1 = (float(ally.min()), float(ally.max())) if ally.size else (0.0, 1.0)
    if diagonal:
        lo, hi = min(x0, y0), max(x1, y1)
        x0, x1, y0, y1 = lo, hi, lo, hi
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def sx(v):
        return pad_l + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return pad_t + ph - (v - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>',
        f'<text x="{pad_l + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{_esc(xlabel)}</text>',
        f'<text x="14" y="{pad_t + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {pad_t + ph / 2:.1f})">{_esc(ylabel)}</text>',
    ]
    for v, anchor_y in ((y0, sy(y0)), (y1, sy(y1))):
        parts.append(f'<text x="{pad_l - 4}" y="{anchor_y + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    for v in (x0, x1):
        label = f"1e{v:.2g}" if log_x else f"{v:.3g}"
        parts.append(f'<text x="{sx(v):.1f}" y="{pad_t + ph + 14}" text-anchor="middle">{label}</text>')
    if diagonal:
        parts.append(
            f'<line x1="{sx(x0):.1f}" y1="{sy(x0):.1f}" x2="{sx(x1):.1f}" y2="{sy(x1):.1f}" stroke="#999" stroke-dasharray="3,3"/>'
        )
    for i, (name, x, y) in enumerate(zip(series.keys(), xs, ys)):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = pad_t + 12 + 14 * i
        parts.append(f'<line x1="{width - pad_r + 8}" y1="{ly - 4}" x2="{width - pad_r + 24}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{width - pad_r + 28}" y="{ly}">{_esc(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
