"""Deterministic CSV/JSON output and figure rendering.

Every file embeds the resolved job configuration (as a hash plus the config
itself in JSON summaries) so a result can always be traced back to the exact
invocation.  Identical config and seed produce byte-identical CSV bytes:
floats are formatted with repr-faithful %.17g, keys are sorted, newlines are
LF.
"""

from __future__ import annotations

import hashlib
import json
from importlib import metadata
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


def code_version() -> str:
    try:
        return metadata.version("kirp")
    except metadata.PackageNotFoundError:
        return "unknown"


def _canon(obj):
    if isinstance(obj, Mapping):
        return {str(k): _canon(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return [_canon(v) for v in obj.tolist()]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def config_hash(cfg: Mapping) -> str:
    blob = json.dumps(_canon(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fmt(x) -> str:
    """Locale-free scalar formatting; '.' decimal, full float precision."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def provenance(cfg: Mapping, seed: int | None = None) -> dict:
    out = {"config_hash": config_hash(cfg), "version": code_version()}
    if seed is not None:
        out["seed"] = seed
    return out


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence],
              cfg: Mapping, seed: int | None = None) -> Path:
    """Comma-separated, LF newlines, leading '#' provenance lines, header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}={v}" for k, v in provenance(cfg, seed).items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def write_json(path: str | Path, payload: Mapping, cfg: Mapping,
               seed: int | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"provenance": provenance(cfg, seed), "config": _canon(cfg)}
    doc.update(_canon(payload))
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", newline="\n")
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_spectrum(path: str | Path, eigenvalues: np.ndarray,
                    r_in: float | None = None, r_out: float | None = None,
                    title: str = "") -> Path:
    """Eigenvalue cloud in the complex plane with the predicted annulus."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    ev = np.asarray(eigenvalues)
    ax.plot(ev.real, ev.imag, ".", ms=2.5, color="tab:blue")
    th = np.linspace(0, 2 * np.pi, 400)
    for rad, style in ((r_in, "--"), (r_out, "-")):
        if rad:
            ax.plot(rad * np.cos(th), rad * np.sin(th), style, color="tab:red", lw=1)
    ax.plot(np.cos(th), np.sin(th), ":", color="gray", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("Re $\\lambda$")
    ax.set_ylabel("Im $\\lambda$")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def render_series(path: str | Path, times: Sequence[float], values: Sequence,
                  label: str = "C(t)", logy: bool = True,
                  overlays: Sequence[tuple[str, Sequence[float], Sequence[float]]] = ()) -> Path:
    """Correlation series on a log (or linear) scale plus optional fit lines."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    vals = np.abs(np.asarray(values, dtype=complex))
    ax.plot(times, vals, ".-", ms=3, lw=0.8, label=label)
    for name, xs, ys in overlays:
        ax.plot(xs, np.abs(ys), "--", lw=1.2, label=name)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("|C(t)|")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_scan(path: str | Path, xs: Sequence[float], groups: Mapping[str, Sequence[float]],
                xlabel: str, real_marks: Mapping[str, Sequence[bool]] | None = None) -> Path:
    """|lambda_1| against k or tau, one curve per group label."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, ys in groups.items():
        line, = ax.plot(xs, ys, "-", lw=1.2, label=name)
        if real_marks and name in real_marks:
            mask = np.asarray(real_marks[name], dtype=bool)
            ax.plot(np.asarray(xs)[mask], np.asarray(ys)[mask], "o", ms=3,
                    color=line.get_color())
    ax.set_xlabel(xlabel)
    ax.set_ylabel("$|\\lambda_1|$")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_bch(path: str | Path, norms_sq: Sequence[float],
               overlaps: Mapping[str, Sequence[float]] | None = None) -> Path:
    """Term norms |H_p|^2 against order p, with overlap errors when given."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ps = np.arange(1, len(norms_sq) + 1)
    ax.semilogy(ps, norms_sq, "o-", ms=3, lw=1.0, label="$|H_p|^2$")
    if overlaps:
        for name, errs in overlaps.items():
            ax.semilogy(np.arange(1, len(errs) + 1), np.maximum(errs, 1e-17),
                        "s--", ms=3, lw=1.0, label=name)
    ax.set_xlabel("p")
    ax.legend(fontsize=8)
    return _save(fig, path)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path
