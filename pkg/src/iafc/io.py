"""CSV and figure emission with reproducible headers.

Every CSV starts with '# key = value' comment lines carrying the tool
version, the configuration hash, every parameter the run used
(including defaulted ones) and, unless suppressed, a timestamp.  Writes
are atomic: a temporary file is renamed into place only once complete.
"""

from __future__ import annotations

import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

__version__ = "0.1.0"


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def header_lines(meta: dict, timestamp: bool = True) -> list[str]:
    lines = [f"# version = {__version__}"]
    if timestamp:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        lines.append(f"# timestamp = {stamp}")
    for key, value in meta.items():
        lines.append(f"# {key} = {_format_value(value)}")
    return lines


def write_csv(path: Path, columns: list[str], rows: list[dict], meta: dict,
              timestamp: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = header_lines(meta, timestamp)
    body.append(",".join(columns))
    for row in rows:
        body.append(",".join(_format_value(row[c]) for c in columns))
    _atomic_write(path, "\n".join(body) + "\n")
    return path


def write_time_trace(path: Path, pulse, meta: dict,
                     timestamp: bool = True) -> Path:
    """Time trace columns: t_ns, re, im, intensity."""
    rows = [
        dict(t_ns=t * 1e9, re=s.real, im=s.imag, intensity=abs(s) ** 2)
        for t, s in zip(pulse.times(), pulse.samples)
    ]
    return write_csv(path, ["t_ns", "re", "im", "intensity"], rows, meta,
                     timestamp)


def write_transverse_frame(path: Path, field, meta: dict,
                           timestamp: bool = True) -> Path:
    """Grid dump with geometry header: rows of ix, iy, re, im."""
    geom = dict(meta)
    geom.update(nx=field.nx, ny=field.ny, dx=field.dx, dy=field.dy, z=field.z)
    body = header_lines(geom, timestamp)
    body.append("ix,iy,re,im")
    samples = field.samples
    for iy in range(field.ny):
        for ix in range(field.nx):
            s = samples[iy, ix]
            body.append(f"{ix},{iy},{s.real:.9g},{s.imag:.9g}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(path, "\n".join(body) + "\n")
    return path


def _atomic_write(path: Path, text: str):
    handle, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-",
                                   suffix=path.suffix)
    try:
        with os.fdopen(handle, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_intensity_png(path: Path, field, dpi: int = 120):
    """Convenience |E|^2 image of a transverse frame (plots are optional;
    the CSV is the contract)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    extent_x = field.nx * field.dx * 1e3 / 2
    extent_y = field.ny * field.dy * 1e3 / 2
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(np.abs(field.samples) ** 2, origin="lower",
              extent=[-extent_x, extent_x, -extent_y, extent_y],
              cmap="inferno")
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm)")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return Path(path)


def save_line_plot(path: Path, xs, series: dict, xlabel: str, ylabel: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.2))
    for label, ys in series.items():
        ax.plot(xs, ys, marker="o", markersize=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)
