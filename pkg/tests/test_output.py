import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ieqfem.mesh import build_rect_mesh
from ieqfem.output import TRACE_COLUMNS, TraceRow, config_hash, read_csv, write_csv, write_manifest, write_vtk


def test_empty_trace(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, [])
    assert p.read_text().splitlines() == [",".join(TRACE_COLUMNS)]


def test_one_row(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, [TraceRow(0, 0.0, 1.0, 2.0)])
    assert len(p.read_text().splitlines()) == 2


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=30, deadline=None)
@given(vals=st.lists(st.tuples(finite, finite, finite, st.none() | finite), min_size=1, max_size=5))
def test_round_trip_bit_exact(tmp_path_factory, vals):
    p = tmp_path_factory.mktemp("rt") / "t.csv"
    rows = [TraceRow(k, a, b, c, energy_projected=d, linsolve_iters=k * 3) for k, (a, b, c, d) in enumerate(vals)]
    write_csv(p, rows)
    back = read_csv(p)
    for r, b in zip(rows, back):
        assert b["step"] == r.step and b["linsolve_iters"] == r.linsolve_iters
        for k in ("t", "mass", "energy", "energy_projected"):
            assert b[k] == getattr(r, k)


def test_csv_io_error_names_path(tmp_path):
    bad = tmp_path / "missing" / "t.csv"
    with pytest.raises(OSError, match="missing"):
        write_csv(bad, [])


def parse_vtk(text):
    """Minimal independent reader for the legacy ASCII unstructured grid."""
    tok = text.split("\n")
    i = tok.index("DATASET UNSTRUCTURED_GRID")
    words = " ".join(tok[i + 1:]).split()
    out = {"fields": {}}
    k = 0
    while k < len(words):
        w = words[k]
        if w == "POINTS":
            n = int(words[k + 1])
            out["points"] = np.array(words[k + 3:k + 3 + 3 * n], dtype=float).reshape(n, 3)
            k += 3 + 3 * n
        elif w == "CELLS":
            n = int(words[k + 1])
            out["cells"] = np.array(words[k + 3:k + 3 + 4 * n], dtype=int).reshape(n, 4)
            k += 3 + 4 * n
        elif w == "CELL_TYPES":
            n = int(words[k + 1])
            out["types"] = np.array(words[k + 2:k + 2 + n], dtype=int)
            k += 2 + n
        elif w == "POINT_DATA":
            out["npd"] = int(words[k + 1])
            k += 2
        elif w == "SCALARS":
            name = words[k + 1]
            n = out["npd"]
            out["fields"][name] = np.array(words[k + 6:k + 6 + n], dtype=float)
            k += 6 + n
        else:
            raise AssertionError(f"unexpected token {w}")
    return out


def test_vtk_two_triangles(tmp_path):
    m = build_rect_mesh((0, 1, 0, 1), 1, 1)
    p = tmp_path / "s.vtk"
    write_vtk(p, m, {"u": np.ones(4)})
    d = parse_vtk(p.read_text())
    assert d["points"].shape == (4, 3) and d["cells"].shape == (2, 4)
    np.testing.assert_array_equal(d["fields"]["u"], np.ones(4))
    assert np.all(d["types"] == 5)


def test_vtk_round_trip(tmp_path):
    m = build_rect_mesh((-np.pi, 2.5, 0.1, 1.7), 5, 3)
    u = np.random.default_rng(0).normal(size=m.n_vertices + 40)
    p = tmp_path / "s.vtk"
    write_vtk(p, m, {"u": u, "w": u[: m.n_vertices] * 2})
    d = parse_vtk(p.read_text())
    np.testing.assert_allclose(d["points"][:, :2], m.vertices, atol=1e-12)
    cells = d["cells"]
    assert np.all(cells[:, 0] == 3)
    assert cells[:, 1:].min() >= 0 and cells[:, 1:].max() < m.n_vertices
    np.testing.assert_array_equal(cells[:, 1:], m.triangles)
    np.testing.assert_array_equal(d["fields"]["u"], u[: m.n_vertices])


def test_vtk_short_field(tmp_path):
    m = build_rect_mesh((0, 1, 0, 1), 1, 1)
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "s.vtk", m, {"u": np.ones(3)})


def test_manifest(tmp_path):
    cfg = {"b": 1, "a": [1.0, 2.0]}
    doc = write_manifest(tmp_path / "m.json", cfg, {"steps": 3})
    back = json.loads((tmp_path / "m.json").read_text())
    assert back["config"] == cfg and back["steps"] == 3
    assert doc["config_sha256"] == config_hash({"a": [1.0, 2.0], "b": 1})
