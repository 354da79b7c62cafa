"""Trace CSV files, legacy ASCII VTK snapshots and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

TRACE_COLUMNS = (
    "step", "t", "mass", "energy", "energy_projected", "energy_bdf2",
    "diss_residual", "condition_margin", "linsolve_iters", "wall_ms",
)


@dataclass
class TraceRow:
    step: int
    t: float
    mass: float
    energy: float
    energy_projected: float | None = None
    energy_bdf2: float | None = None
    diss_residual: float = 0.0
    condition_margin: float | None = None
    linsolve_iters: int = 0
    wall_ms: float = 0.0


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def write_csv(path, rows):
    """Write trace rows (TraceRow or mappings) with 17 significant digits."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for r in rows:
                d = asdict(r) if isinstance(r, TraceRow) else r
                w.writerow([_fmt(d.get(c)) for c in TRACE_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write trace {path}: {exc.strerror}") from exc


def read_csv(path):
    """Parse a trace written by :func:`write_csv` back into dicts."""
    ints = {"step", "linsolve_iters"}
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for k, v in rec.items():
                if v == "":
                    row[k] = None
                elif k in ints:
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            out.append(row)
    return out


def write_vtk(path, mesh, fields, title="ieqfem snapshot"):
    """Legacy ASCII VTK unstructured grid of triangles.

    ``fields`` maps names to nodal vectors. Vectors longer than the vertex
    count (P2) are truncated to their vertex values, which come first.
    """
    nv = mesh.n_vertices
    nt = mesh.n_triangles
    lines = [
        "# vtk DataFile Version 2.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    if fields:
        lines.append(f"POINT_DATA {nv}")
        for name, vals in fields.items():
            vals = np.asarray(vals, dtype=float)
            if len(vals) < nv:
                raise ValueError(f"field {name!r} has {len(vals)} values for {nv} vertices")
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines += [f"{v:.17g}" for v in vals[:nv]]
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc.strerror}") from exc


def config_hash(cfg_dict):
    """SHA-256 of the canonical JSON form of a config mapping."""
    blob = json.dumps(cfg_dict, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path, cfg_dict, extra=None):
    doc = {"config": cfg_dict, "config_sha256": config_hash(cfg_dict)}
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return doc

