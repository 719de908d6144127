from __future__ import annotations

import numpy as np
import pytest

from polarlets.errors import DataError, DomainError
from polarlets.frame3d import FrameAtom3D, FrameSpec3D, psi_spatial_3d, warm_up_3d
from polarlets.manifold import (
    TriMesh,
    VolumeExpansion,
    eval_on_mesh,
    inside_domain,
    load_obj,
    make_phantom,
    plane_mesh,
    write_obj,
    write_vertex_values_csv,
)
from polarlets.transform import CoefficientSet, analyze

SPEC = FrameSpec3D.isotropic(2)
GEOM = ((16, 16, 16), 0.5, (-4.0, -4.0, -4.0))


@pytest.fixture(scope="module", autouse=True)
def _tables():
    warm_up_3d(SPEC, 40)


def _write(tmp_path, text, name="m.obj"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_obj_subset(tmp_path):
    text = """# tetra
o thing
v 0 0 0
v 1 0 0
v 0 1 0 1.0
vn 0 0 1
v 0 0 1
f 1 2 3
f 1/1/1 2//1 -1
g grp
s off
"""
    m = load_obj(_write(tmp_path, text))
    assert m.vertices.shape == (4, 3)
    assert m.faces.tolist() == [[0, 1, 2], [0, 1, 3]]
    assert m.record()["bbox_max"] == [1.0, 1.0, 1.0]


@pytest.mark.parametrize("body, exc", [
    ("v 0 0\n", DataError),
    ("v 0 0 x\n", DataError),
    ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", DataError),
    ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n", DataError),
    ("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n", DomainError),
    ("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n", DomainError),
    ("v 0 0 0\ncurv 1 2\n", DataError),
])
def test_obj_errors(tmp_path, body, exc):
    with pytest.raises(exc):
        load_obj(_write(tmp_path, body))


def test_obj_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_obj(tmp_path / "absent.obj")


def test_obj_round_trip_with_values(tmp_path):
    m = plane_mesh((0, 0, 0), (1, 0, 0), (0, 2, 0), 3, 4)
    vals = np.arange(len(m.vertices)) * 0.5
    write_obj(tmp_path / "o.obj", m, vals)
    back = load_obj(tmp_path / "o.obj")
    np.testing.assert_array_equal(back.vertices, m.vertices)
    np.testing.assert_array_equal(back.faces, m.faces)
    lines = [l for l in (tmp_path / "o.obj").read_text().splitlines() if l.startswith("#value")]
    assert [float(l.split()[2]) for l in lines] == vals.tolist()


def test_plane_mesh_counts_and_errors():
    m = plane_mesh((0, 0, 0), (1, 0, 0), (0, 1, 0), 5, 7)
    assert len(m.vertices) == 35 and len(m.faces) == 2 * 4 * 6
    with pytest.raises(DomainError):
        plane_mesh((0, 0, 0), (1, 0, 0), (0, 1, 0), 1, 7)


def test_phantom_geometry():
    ph = make_phantom(resolution=32)
    g = ph.signal
    assert g.shape == (32, 32, 32) and g.spacing == 0.5
    assert ph.analytic([0.0, 0.0, 0.0]) == 0.0
    assert ph.analytic([2.0, 0.0, 0.0]) == 1.0
    assert ph.analytic([2.0, 0.0, 3.5]) == 0.0


def test_phantom_volume():
    # smoothing preserves the integral; the ring volume is pi (ro^2 - ri^2) 2 H
    ph = make_phantom(resolution=64)
    exact = np.pi * (3.0 ** 2 - 1.5 ** 2) * 6.0
    total = ph.signal.values.sum() * ph.signal.spacing ** 3
    assert abs(total - exact) < 0.02 * exact


@pytest.mark.parametrize("kw", [dict(kind="sphere"), dict(resolution=48),
                                dict(r_inner=3.0, r_outer=2.0), dict(sigma=0.0)])
def test_phantom_errors(kw):
    with pytest.raises(DomainError):
        make_phantom(**kw)


def _expansion(mapping):
    return VolumeExpansion(SPEC, CoefficientSet.from_mapping(SPEC, mapping, GEOM))


def test_zero_expansion_is_zero():
    pts = np.random.default_rng(0).uniform(-3, 3, (50, 3))
    assert np.all(eval_on_mesh(_expansion({}), pts) == 0)


def test_single_atom_matches_direct_evaluation():
    a = FrameAtom3D(1, (1, -2, 0))
    pts = np.random.default_rng(1).uniform(-3, 3, (80, 3))
    got = eval_on_mesh(_expansion({a: 0.7}), pts)
    ref = 0.7 * psi_spatial_3d(SPEC, a, pts)
    np.testing.assert_allclose(got, ref.real, atol=1e-12)


def test_evaluation_is_linear():
    rng = np.random.default_rng(2)
    atoms = [FrameAtom3D(j, tuple(int(v) for v in rng.integers(-3, 4, 3))) for j in (0, 1, 1, 0)]
    c1, c2 = rng.standard_normal(4), rng.standard_normal(4)
    pts = rng.uniform(-3, 3, (40, 3))
    e1 = eval_on_mesh(_expansion(dict(zip(atoms, c1))), pts)
    e2 = eval_on_mesh(_expansion(dict(zip(atoms, c2))), pts)
    e12 = eval_on_mesh(_expansion(dict(zip(atoms, 2 * c1 - c2))), pts)
    np.testing.assert_allclose(e12, 2 * e1 - e2, atol=1e-12)


def test_outside_points_are_nan():
    exp = _expansion({FrameAtom3D(0, (0, 0, 0)): 1.0})
    pts = np.array([[0.0, 0.0, 0.0], [3.5, 3.5, 3.5], [3.6, 0.0, 0.0], [0.0, -4.2, 0.0]])
    assert inside_domain(exp, pts).tolist() == [True, True, False, False]
    vals = eval_on_mesh(exp, pts)
    assert np.isfinite(vals[:2]).all() and np.isnan(vals[2:]).all()


def test_expansion_frame_mismatch():
    with pytest.raises(DomainError):
        VolumeExpansion(FrameSpec3D.isotropic(3), CoefficientSet.from_mapping(SPEC, {}))


def test_slice_of_analyzed_volume_matches_grid():
    # on grid vertices the direct sum must reproduce the synthesized volume
    ph = make_phantom(resolution=32)
    exp = VolumeExpansion(SPEC, analyze(SPEC, ph.signal))
    h = ph.signal.spacing
    mesh = plane_mesh((-4.0, -4.0, 0.0), (8.0, 0, 0), (0, 8.0, 0), 17, 17)
    got = eval_on_mesh(exp, mesh)
    idx = np.rint((mesh.vertices - np.asarray(ph.signal.origin)) / h).astype(int)
    from polarlets.transform import synthesize
    vol = synthesize(SPEC, exp.coeffs, real=True).values
    ref = vol[idx[:, 0], idx[:, 1], idx[:, 2]]
    assert np.max(np.abs(got - ref)) < 0.05


def test_vertex_csv(tmp_path):
    m = plane_mesh((0, 0, 0), (1, 0, 0), (0, 1, 0), 2, 2)
    write_vertex_values_csv(tmp_path / "v.csv", m, [1.0, 2.0, 3.0, 4.0])
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "vertex,x,y,z,value" and len(lines) == 5
