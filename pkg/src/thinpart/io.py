"""File formats: CSV grids, PGM label images, edge lists, configs and manifests.

Grid CSVs have one row per transverse index and one column per angular
index, no header.  Config files are YAML mappings with the keys listed in
:data:`CONFIG_KEYS`; profiles ``h1``/``h2`` are Fourier coefficient lists
``[c0, a1, b1, a2, b2, ...]``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np
import yaml

from .discretization import DomainSpec
from .errors import InvalidArgument

CONFIG_KEYS = {
    "kind", "b", "degree", "ntheta", "nt", "bc_bottom", "bc_top", "h1", "h2",
    "k", "restarts", "seed", "tol", "count", "index", "init", "max_sweeps", "jobs",
}


def _open_for_write(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_grid_csv(path, values, fmt="%.17g"):
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise InvalidArgument("grid CSV needs a 2D array (nt, ntheta)")
    if np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool:
        fmt = "%d"
        arr = arr.astype(int)
    with _open_for_write(path) as fh:
        np.savetxt(fh, arr, fmt=fmt, delimiter=",")
    return Path(path)


def read_grid_csv(path, dtype=float):
    arr = np.loadtxt(path, delimiter=",", dtype=dtype, ndmin=2)
    return arr


def write_rows_csv(path, rows):
    with _open_for_write(path) as fh:
        csv.writer(fh).writerows(rows)
    return Path(path)


def write_label_pgm(path, labels):
    """Plain (P2) portable graymap with one evenly spaced shade per label."""
    labels = np.asarray(labels, dtype=int)
    ids = np.unique(labels)
    shades = np.linspace(0, 255, ids.size).round().astype(int) if ids.size > 1 else np.array([128])
    img = shades[np.searchsorted(ids, labels)]
    nt, nth = img.shape
    with _open_for_write(path) as fh:
        fh.write(f"P2\n{nth} {nt}\n255\n")
        # top row of the image is the top of the strip
        for row in img[::-1]:
            fh.write(" ".join(map(str, row)) + "\n")
    return Path(path)


def read_pgm(path):
    tokens = [t for line in Path(path).read_text().splitlines()
              if not line.startswith("#") for t in line.split()]
    if tokens[0] != "P2":
        raise InvalidArgument("only plain P2 graymaps are supported")
    w, h, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    return np.array(tokens[4:4 + w * h], dtype=int).reshape(h, w)[::-1]


def write_edge_list(path, graph):
    with _open_for_write(path) as fh:
        fh.write(graph.edge_list_text())
    return Path(path)


def load_config(path):
    """Read a YAML config mapping and reject unknown keys."""
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except OSError as exc:
        raise InvalidArgument(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidArgument("config must be a mapping")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
    return data


def domain_from_config(cfg):
    kind = cfg.get("kind", "strip")
    kw = dict(kind=kind, b=float(cfg.get("b", 0.2)), degree=int(cfg.get("degree", 1)),
              bc_bottom=str(cfg.get("bc_bottom", "N")).upper()[0],
              bc_top=str(cfg.get("bc_top", "N")).upper()[0])
    if kind == "annulus":
        kw["h1"] = tuple(cfg.get("h1", [0.0]))
        kw["h2"] = tuple(cfg.get("h2", [1.0]))
    return DomainSpec(**kw)


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, paths, name="manifest.json"):
    """List artifacts (relative to ``out_dir``) with their SHA-256 checksums."""
    out_dir = Path(out_dir)
    entries = []
    for p in sorted({Path(p) for p in paths}):
        entries.append({"path": os.path.relpath(p, out_dir), "sha256": sha256(p),
                        "bytes": p.stat().st_size})
    target = out_dir / name
    target.write_text(json.dumps({"artifacts": entries}, indent=2) + "\n")
    return target


def to_jsonable(obj):
    """Best-effort conversion of numpy / Fraction values for ``json.dumps``."""
    from fractions import Fraction

    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def export_plot_data(obj, path):
    """Write plot-ready data for a grid function, label field or spectrum.

    Float arrays become a CSV grid; integer label fields additionally get a
    ``.pgm`` graymap next to the CSV; spectra (cylinder or annulus) become
    CSV tables.  Returns the list of written paths.
    """
    from .catalog import AnnulusMode, Spectrum, annulus_rows, spectrum_rows

    path = Path(path)
    if isinstance(obj, Spectrum):
        return [write_rows_csv(path, spectrum_rows(obj))]
    if isinstance(obj, (list, tuple)) and obj and all(isinstance(m, AnnulusMode) for m in obj):
        return [write_rows_csv(path, annulus_rows(obj))]
    arr = np.asarray(obj)
    if arr.ndim != 2:
        raise InvalidArgument("expected a 2D grid function, a label field or a spectrum")
    if np.issubdtype(arr.dtype, np.integer):
        return [write_grid_csv(path, arr), write_label_pgm(path.with_suffix(".pgm"), arr)]
    return [write_grid_csv(path, arr)]
