"""Three-dimensional polar wavelets.

Frequency domain::

    psi_hat(xi) = (2 pi)^(-3/2) 2^(-3j/2) sqrt(4 pi) gamma_t(xi/|xi|) hhat(2^-j |xi|) e^{-i xi . 2^-j k}

with sum_t |gamma_t|^2 = 1/(4 pi) for admissible windows. Space domain,
with y = 2^j x - k::

    psi(x) = 2^(3j/2) pi^(-3/2) sum_lm i^l kappa^t_lm y_lm(y/|y|) h_l(|y|)
    h_l(r) = int hhat(rho) j_l(rho r) rho^2 d rho

The lowpass uses ghat and the constant window 1/sqrt(4 pi).
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import DomainError, NumericError
from .specfun import sph_bessel_j, sph_harm_all, sph_index
from .windows import (
    AdmissibilityReport,
    AngularWindow3D,
    RadialWindow,
    _directions_to_angles,
    check_angular_3d,
    check_calderon,
)

__all__ = [
    "FrameAtom3D",
    "FrameSpec3D",
    "psi_hat_3d",
    "psi_spatial_3d",
    "radial_profile_hl",
    "radial_profile_hl_quadrature",
    "atom_values_3d",
    "warm_up_3d",
]

_PS = RadialWindow()
_SQRT4PI = math.sqrt(4.0 * math.pi)
_L_MAX = 32


@dataclass(frozen=True, order=True)
class FrameAtom3D:
    j: int
    k: tuple[int, int, int]
    t: int = 0
    kind: str = "wavelet"

    def __post_init__(self):
        if self.kind not in ("wavelet", "scaling"):
            raise DomainError(f"unknown atom kind {self.kind!r}")
        if self.kind == "scaling" and self.t != 0:
            raise DomainError("scaling atoms have t = 0")
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if len(self.k) != 3:
            raise DomainError("3D atoms need an integer triple")

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.k, dtype=float) * 2.0 ** -self.j


@dataclass(frozen=True, eq=False)
class FrameSpec3D:
    """Layout of a 3D frame. ``angular[i]`` is the window family at level j_min + i."""

    angular: tuple[AngularWindow3D, ...]
    radial: RadialWindow = field(default_factory=RadialWindow)
    j_min: int = 0
    include_scaling: bool = True
    check: bool = True

    def __post_init__(self):
        object.__setattr__(self, "angular", tuple(self.angular))
        if not self.angular:
            raise DomainError("need at least one wavelet level")
        if self.check:
            rep = self.admissibility()
            if not rep.passed:
                raise DomainError("3D frame spec is not admissible:\n" + rep.to_lines())

    dimension = 3

    @classmethod
    def isotropic(cls, levels: int, **kw) -> "FrameSpec3D":
        return cls(tuple(AngularWindow3D.isotropic() for _ in range(levels)), **kw)

    @classmethod
    def default(cls, **kw) -> "FrameSpec3D":
        """Isotropic coarse level, icosahedral anisotropic finer level."""
        aniso = AngularWindow3D.anisotropic({0: 1.0, 2: 0.5, -2: 0.5}, [0.0, 0.0, 1.0])
        return cls((AngularWindow3D.isotropic(), aniso), **kw)

    @property
    def levels(self) -> range:
        return range(self.j_min, self.j_min + len(self.angular))

    @property
    def j_max(self) -> int:
        return self.j_min + len(self.angular) - 1

    def window(self, j: int) -> AngularWindow3D:
        if j not in self.levels:
            raise DomainError(f"level {j} not in frame")
        return self.angular[j - self.j_min]

    def orientations(self, j: int) -> int:
        return self.window(j).orientations

    def bands(self):
        out = []
        if self.include_scaling:
            out.append(("scaling", self.j_min, 0))
        for j in self.levels:
            out.extend(("wavelet", j, t) for t in range(self.orientations(j)))
        return out

    def validate_atom(self, atom: FrameAtom3D) -> None:
        if atom.kind == "scaling":
            if not self.include_scaling or atom.j != self.j_min:
                raise DomainError(f"{atom} is not a scaling atom of this frame")
            return
        if atom.j not in self.levels or not 0 <= atom.t < self.orientations(atom.j):
            raise DomainError(f"{atom} is not an atom of this frame")

    def admissibility(self, n_grid: int = 4096) -> AdmissibilityReport:
        cover = 2.0 ** self.j_max * 0.5 * math.pi
        grid = np.geomspace(cover * 2.0 ** -(len(self.angular) + 4), cover, n_grid)
        cal = check_calderon(self.radial, self.j_min, self.j_max, grid)
        rep = AdmissibilityReport.merge([check_angular_3d(w) for w in self.angular])
        rep.max_calderon_deviation = cal
        rep.passed = rep.passed and cal <= 1e-12
        return rep

    def window_hat(self, kind: str, j: int, t: int, xi):
        """sqrt(4 pi) gamma_t(xi_bar) hhat(2^-j |xi|); ghat for the lowpass."""
        xi = np.asarray(xi, dtype=float)
        rho = np.linalg.norm(xi, axis=-1)
        if kind == "scaling":
            return np.asarray(self.radial.ghat(rho * 2.0 ** -j), dtype=complex)
        radial = np.asarray(self.radial.hhat(rho * 2.0 ** -j))
        out = np.zeros(rho.shape, dtype=complex)
        live = radial > 0
        if np.any(live):
            out[live] = _SQRT4PI * self.window(j)(xi[live], t) * radial[live]
        return out

    def to_dict(self) -> dict:
        return {
            "dimension": 3,
            "radial": self.radial.kind,
            "j_min": self.j_min,
            "include_scaling": self.include_scaling,
            "levels": [w.to_dict() for w in self.angular],
        }

    @classmethod
    def from_dict(cls, d: dict, check: bool = True) -> "FrameSpec3D":
        allowed = {"dimension", "radial", "j_min", "include_scaling", "levels"}
        extra = set(d) - allowed
        if extra:
            raise DomainError(f"unknown spec keys: {sorted(extra)}")
        if d.get("dimension") != 3:
            raise DomainError("not a 3D frame spec")
        return cls(
            tuple(AngularWindow3D.from_dict(w) for w in d["levels"]),
            RadialWindow(d.get("radial", "portilla-simoncelli")),
            int(d.get("j_min", 0)),
            bool(d.get("include_scaling", True)),
            check=check,
        )

    def digest(self) -> bytes:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).digest()


def psi_hat_3d(spec: FrameSpec3D, atom: FrameAtom3D, xi):
    spec.validate_atom(atom)
    xi = np.asarray(xi, dtype=float)
    j = atom.j
    phase = np.exp(-1j * 2.0 ** -j * (xi @ np.asarray(atom.k, dtype=float)))
    pref = 2.0 ** (-1.5 * j) * (2.0 * math.pi) ** -1.5
    return pref * spec.window_hat(atom.kind, j, atom.t, xi) * phase


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------

def _profile_weight(key):
    if key == "scaling":
        return _PS.ghat, 0, (0.0, 0.25 * math.pi, 0.5 * math.pi)
    return _PS.hhat, int(key), (0.25 * math.pi, math.pi)


def radial_profile_hl_quadrature(l, r, epsabs: float = 1e-12):
    """Adaptive quadrature of int hhat(rho) j_l(rho r) rho^2 d rho over (pi/4, pi)."""
    if int(l) != l or not 0 <= l <= _L_MAX:
        raise DomainError(f"degree must be an integer in [0, {_L_MAX}]")
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(rr < 0) or not np.all(np.isfinite(rr)):
        raise DomainError("radius must be finite and non-negative")
    out = np.empty_like(rr)
    lo, hi = _PS.support
    for i, ri in enumerate(rr):
        def f(rho, ri=ri):
            return _PS.hhat(rho) * float(sph_bessel_j(int(l), rho * ri)) * rho * rho

        val, err, *info = quad(f, lo, hi, epsabs=epsabs, epsrel=1e-13,
                               limit=200 + int(4 * ri), full_output=1)
        if len(info) > 1 and err > 1e3 * epsabs:
            raise NumericError(f"3D Hankel quadrature failed at r={ri}", partial=val)
        out[i] = val
    return float(out[0]) if np.ndim(r) == 0 else out.reshape(np.shape(r))


def _gauss_legendre_profile(key, r):
    weight, l, breaks = _profile_weight(key)
    r = np.asarray(r, dtype=float)
    total = np.zeros_like(r)
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        for s in range(0, r.size, 2048):
            rc = r[s:s + 2048]
            nodes = int(40 + 0.5 * (hi - lo) * rc.max())
            x, w = np.polynomial.legendre.leggauss(nodes)
            rho = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * w * weight(rho) * rho * rho
            total[s:s + 2048] += sph_bessel_j(l, rho[None, :] * rc[:, None]) @ w
    return total


class _Tables3D:
    """Spline tables of h_l and the lowpass profile, grown on demand."""

    step = 0.004
    block = 16.0

    def __init__(self):
        self._lock = threading.Lock()
        self._splines: dict = {}
        self._rmax: dict = {}

    def ensure(self, keys, r_max):
        with self._lock:
            for key in keys:
                have = self._rmax.get(key, -1.0)
                if have >= r_max:
                    continue
                top = math.ceil(max(r_max, 1.5 * have) / self.block) * self.block
                grid = np.arange(0.0, top + 2 * self.step, self.step)
                self._splines[key] = CubicSpline(grid, _gauss_legendre_profile(key, grid))
                self._rmax[key] = grid[-1]

    def __call__(self, key, r):
        r = np.asarray(r, dtype=float)
        self.ensure([key], float(r.max()) if r.size else 0.0)
        return self._splines[key](r)


PROFILE_TABLES_3D = _Tables3D()


def radial_profile_hl(l, r):
    """Tabulated h_l(r) (cubic spline over a 0.004 grid, error below 1e-9)."""
    if int(l) != l or not 0 <= l <= _L_MAX:
        raise DomainError(f"degree must be an integer in [0, {_L_MAX}]")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise DomainError("radius must be finite and non-negative")
    out = PROFILE_TABLES_3D(int(l), r)
    return float(out) if out.ndim == 0 else out


def warm_up_3d(spec: FrameSpec3D, r_max: float) -> None:
    """Build every radial table the spec needs up to ``r_max`` (single-threaded)."""
    keys = ["scaling"] if spec.include_scaling else []
    for j in spec.levels:
        keys.extend(sorted(set(range(spec.window(j).degree + 1))))
    PROFILE_TABLES_3D.ensure(sorted(set(keys), key=str), r_max)


def _spatial_from_local(spec: FrameSpec3D, kind: str, j: int, t: int, y):
    pref = 2.0 ** (1.5 * j) * math.pi ** -1.5
    r = np.linalg.norm(y, axis=-1)
    if kind == "scaling":
        return (pref / _SQRT4PI) * PROFILE_TABLES_3D("scaling", r).astype(complex)
    win = spec.window(j)
    kappa = win.coeffs[t]
    L = win.degree
    theta, phi = _directions_to_angles(y)
    if L == 0:
        ang = np.full(r.shape, kappa[0] / _SQRT4PI)
        return pref * ang * PROFILE_TABLES_3D(0, r)
    harm = sph_harm_all(L, theta, phi)
    out = np.zeros(r.shape, dtype=complex)
    for l in range(L + 1):
        sl = slice(sph_index(l, -l), sph_index(l, l) + 1)
        if not np.any(kappa[sl]):
            continue
        out += (1j ** l) * (harm[..., sl] @ kappa[sl]) * PROFILE_TABLES_3D(l, r)
    return pref * out


def psi_spatial_3d(spec: FrameSpec3D, atom: FrameAtom3D, x):
    """Spatial value of a 3D atom at points ``x`` (..., 3)."""
    spec.validate_atom(atom)
    x = np.asarray(x, dtype=float)
    y = 2.0 ** atom.j * x - np.asarray(atom.k, dtype=float)
    return _spatial_from_local(spec, atom.kind, atom.j, atom.t, y)


def atom_values_3d(spec: FrameSpec3D, atoms, points) -> np.ndarray:
    """Matrix of atom values, rows = points, columns = atoms."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    atoms = list(atoms)
    out = np.zeros((points.shape[0], len(atoms)), dtype=complex)
    groups: dict = {}
    for col, a in enumerate(atoms):
        spec.validate_atom(a)
        groups.setdefault((a.kind, a.j, a.t), []).append(col)
    for (kind, j, t), cols in groups.items():
        ks = np.array([atoms[c].k for c in cols], dtype=float)
        for lo in range(0, points.shape[0], 256):
            p = points[lo:lo + 256]
            y = 2.0 ** j * p[:, None, :] - ks[None, :, :]
            out[lo:lo + 256, cols] = _spatial_from_local(spec, kind, j, t, y)
    return out
