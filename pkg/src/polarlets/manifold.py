"""Direct evaluation of a 3D frame expansion on triangle-mesh vertices.

Also holds the small amount of mesh plumbing this needs (an OBJ subset
reader/writer and a planar slice generator) and the nested-cylinder phantom.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import ndtr
from scipy.stats import ncx2

from .errors import DataError, DomainError
from .formats import fmt, write_csv
from .frame3d import FrameSpec3D, _spatial_from_local, warm_up_3d
from .transform import CoefficientSet, GridSignal, synthesize

__all__ = [
    "TriMesh",
    "load_obj",
    "write_obj",
    "plane_mesh",
    "Phantom",
    "make_phantom",
    "VolumeExpansion",
    "inside_domain",
    "eval_on_mesh",
    "trilinear_oracle",
    "write_vertex_values_csv",
]


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangle mesh with 0-based face indices."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise DataError("mesh vertices must be finite")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise DataError("face index out of range")
        if f.size:
            a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
            area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
            scale = max(float(np.ptp(v, axis=0).max()), 1e-300) ** 2
            bad = np.nonzero(area2 <= 1e-14 * scale)[0]
            if bad.size:
                raise DomainError(f"degenerate (zero-area) face {int(bad[0])}")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def record(self) -> dict:
        lo, hi = self.bounding_box
        return {"vertices": len(self.vertices), "faces": len(self.faces),
                "bbox_min": lo.tolist(), "bbox_max": hi.tolist()}


_IGNORED = {"vn", "vt", "vp", "o", "g", "s", "usemtl", "mtllib", "l"}


def _face_index(tok: str, n_vertices: int, lineno: int) -> int:
    try:
        i = int(tok.split("/")[0])
    except ValueError:
        raise DataError(f"bad face index {tok!r}", line=lineno) from None
    if i == 0:
        raise DataError("OBJ indices are 1-based; got 0", line=lineno)
    return i - 1 if i > 0 else n_vertices + i


def load_obj(path) -> TriMesh:
    """Read the ``v``/``f`` subset of Wavefront OBJ (triangles only).

    Negative (relative) indices and ``v/vt/vn`` face tokens are accepted;
    normals, texture coordinates and grouping statements are skipped.
    """
    verts, faces = [], []
    try:
        fh = open(path)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            tag, args = parts[0], parts[1:]
            if tag == "v":
                if len(args) not in (3, 4, 6, 7):
                    raise DataError(f"{path}: vertex needs 3 coordinates", line=lineno)
                try:
                    verts.append([float(a) for a in args[:3]])
                except ValueError:
                    raise DataError(f"{path}: bad vertex coordinate", line=lineno) from None
            elif tag == "f":
                if len(args) != 3:
                    raise DomainError(f"{path}: line {lineno}: only triangle faces are supported "
                                      f"(got {len(args)} vertices)")
                faces.append([_face_index(a, len(verts), lineno) for a in args])
            elif tag not in _IGNORED:
                raise DataError(f"{path}: unknown OBJ statement {tag!r}", line=lineno)
    for lineno_face, f in enumerate(faces):
        if min(f) < 0 or max(f) >= len(verts):
            raise DataError(f"{path}: face {lineno_face} references a missing vertex")
    return TriMesh(np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3))


def write_obj(path, mesh: TriMesh, values=None) -> None:
    """Write an OBJ file; per-vertex ``values`` go in ``#value`` comment lines."""
    with open(path, "w") as fh:
        for i, p in enumerate(mesh.vertices):
            fh.write(f"v {fmt(p[0])} {fmt(p[1])} {fmt(p[2])}\n")
            if values is not None:
                fh.write(f"#value {i} {fmt(values[i])}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def plane_mesh(origin, u, v, n_u: int, n_v: int) -> TriMesh:
    """Regular triangulation of the parallelogram origin + s u + t v, s, t in [0, 1]."""
    if n_u < 2 or n_v < 2:
        raise DomainError("a slice mesh needs at least 2 x 2 vertices")
    origin, u, v = (np.asarray(a, dtype=float) for a in (origin, u, v))
    s = np.linspace(0.0, 1.0, n_u)
    t = np.linspace(0.0, 1.0, n_v)
    S, T = np.meshgrid(s, t, indexing="ij")
    pts = origin + S[..., None] * u + T[..., None] * v
    idx = np.arange(n_u * n_v).reshape(n_u, n_v)
    a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return TriMesh(pts.reshape(-1, 3), faces)


# ---------------------------------------------------------------------------
# Phantom
# ---------------------------------------------------------------------------

PHANTOM_EXTENT = 16.0


@dataclass
class Phantom:
    """Nested coaxial cylinders (axis z): 1 between the radii, |z| <= half_height."""

    signal: GridSignal
    r_inner: float
    r_outer: float
    half_height: float
    sigma: float
    params: dict = field(default_factory=dict)

    def analytic(self, x) -> np.ndarray:
        """Indicator before smoothing."""
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        inside = (r >= self.r_inner) & (r <= self.r_outer) & (np.abs(x[..., 2]) <= self.half_height)
        return inside.astype(float)

    def smoothed(self, x) -> np.ndarray:
        """Indicator convolved with an isotropic Gaussian (exact, separable)."""
        x = np.asarray(x, dtype=float)
        s = self.sigma
        r2 = (x[..., 0] ** 2 + x[..., 1] ** 2) / s ** 2
        ring = ncx2.cdf((self.r_outer / s) ** 2, 2, r2) - ncx2.cdf((self.r_inner / s) ** 2, 2, r2)
        z = x[..., 2]
        slab = ndtr((self.half_height - z) / s) - ndtr((-self.half_height - z) / s)
        return ring * slab


def make_phantom(kind: str = "nested-cylinders", resolution: int = 64, r_inner: float = 1.5,
                 r_outer: float = 3.0, half_height: float = 3.0, sigma: float = 1.0) -> Phantom:
    """Sample the smoothed nested-cylinder phantom on ``resolution``^3 voxels.

    The grid always covers [-8, 8)^3, so the spacing is 16 / resolution.
    The defaults keep the object well inside the box: frame atoms decay only
    algebraically, so coefficients of an object touching the box edge wrap
    around and a non-periodic direct sum no longer matches the grid.
    """
    if kind != "nested-cylinders":
        raise DomainError(f"unknown phantom kind {kind!r}")
    if resolution not in (32, 64, 128):
        raise DomainError("phantom resolution must be 32, 64 or 128")
    if not 0 < r_inner < r_outer or half_height <= 0 or sigma <= 0:
        raise DomainError("phantom needs 0 < r_inner < r_outer, half_height > 0, sigma > 0")
    h = PHANTOM_EXTENT / resolution
    params = {"kind": kind, "resolution": resolution, "spacing": h, "r_inner": r_inner,
              "r_outer": r_outer, "half_height": half_height, "sigma": sigma, "axis": "z"}
    grid = GridSignal.zeros((resolution,) * 3, h)
    ph = Phantom(grid, r_inner, r_outer, half_height, sigma, params)
    ph.signal = grid.with_values(ph.smoothed(grid.points()))
    return ph


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass
class VolumeExpansion:
    """A 3D coefficient set together with its frame."""

    spec: FrameSpec3D
    coeffs: CoefficientSet

    def __post_init__(self):
        if self.spec.dimension != 3:
            raise DomainError("volume expansions need a 3D frame")
        if self.coeffs.spec is not self.spec and self.coeffs.spec.to_dict() != self.spec.to_dict():
            raise DomainError("coefficients belong to a different frame")

    @property
    def geometry(self):
        return self.coeffs.geometry


def inside_domain(exp: VolumeExpansion, points) -> np.ndarray:
    """True where a point lies in the grid box the coefficients were computed on."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if exp.geometry is None:
        return np.ones(len(pts), dtype=bool)
    shape, h, origin = exp.geometry
    lo = np.asarray(origin)
    hi = lo + h * (np.asarray(shape) - 1)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(hi))))
    return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)


def eval_on_mesh(exp: VolumeExpansion, mesh, chunk: int = 1 << 20) -> np.ndarray:
    """Evaluate sum c * psi at every vertex by direct summation.

    ``mesh`` may be a :class:`TriMesh` or an (n, 3) array. Vertices outside
    the expansion's grid box get NaN; the rest are evaluated. The result is
    real when the imaginary part is at roundoff level.
    """
    pts = mesh.vertices if isinstance(mesh, TriMesh) else np.asarray(mesh, dtype=float).reshape(-1, 3)
    inside = inside_domain(exp, pts)
    q = pts[inside]
    acc = np.zeros(len(q), dtype=complex)
    if len(q):
        r_max = 0.0
        groups = []
        for (kind, j, t), band in exp.coeffs.bands.items():
            idx = np.nonzero(band.active() & (band.values != 0))
            if not idx[0].size:
                continue
            ks = np.stack([i + k0 for i, k0 in zip(idx, band.k0)], axis=1).astype(float)
            y_lo = 2.0 ** j * q.min(axis=0)
            y_hi = 2.0 ** j * q.max(axis=0)
            far = np.maximum(np.abs(ks - y_lo), np.abs(ks - y_hi))
            r_max = max(r_max, float(np.linalg.norm(far, axis=1).max()))
            groups.append((kind, j, t, ks, band.values[idx]))
        warm_up_3d(exp.spec, r_max + 1.0)
        for kind, j, t, ks, cs in groups:
            step = max(1, chunk // len(ks))
            for lo in range(0, len(q), step):
                y = 2.0 ** j * q[lo:lo + step, None, :] - ks[None, :, :]
                acc[lo:lo + step] += _spatial_from_local(exp.spec, kind, j, t, y) @ cs
    out = np.full(len(pts), np.nan, dtype=complex)
    out[inside] = acc
    scale = np.max(np.abs(acc.real), initial=0.0)
    if np.max(np.abs(acc.imag), initial=0.0) <= 1e-9 * max(scale, 1e-300):
        return out.real
    return out


def trilinear_oracle(exp: VolumeExpansion, points) -> np.ndarray:
    """Trilinear interpolation of the synthesized volume (reference for eval_on_mesh)."""
    vol = synthesize(exp.spec, exp.coeffs, real=True)
    axes = [o + vol.spacing * np.arange(n) for o, n in zip(vol.origin, vol.shape)]
    interp = RegularGridInterpolator(axes, vol.values, method="linear",
                                     bounds_error=False, fill_value=np.nan)
    return interp(np.asarray(points, dtype=float).reshape(-1, 3))


def write_vertex_values_csv(path, mesh: TriMesh, values) -> None:
    rows = ((i, p[0], p[1], p[2], float(np.real(v)))
            for i, (p, v) in enumerate(zip(mesh.vertices, values)))
    write_csv(path, ["vertex", "x", "y", "z", "value"], rows)
