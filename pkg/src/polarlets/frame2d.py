"""
Two-dimensional polar wavelet frames.

Atoms are psi_{jkt}(x) = 2^j / (2 pi) psi_t(2^j x - k) where psi_t is the
inverse Fourier transform of gamma_t(theta) hhat(|xi|). In space

    psi_t(y) = sum_n i^n beta^t_n e^{i n theta_y} h_n(|y|),
    h_n(r)   = int hhat(rho) J_n(rho r) rho d rho,

and for the Portilla-Simoncelli window h_n has a closed form in terms of
the regularized hypergeometric function 1F~2 (see
:func:`radial_profile_hn_closed`). Scaling atoms use the lowpass window and
no angular factor.

Orientation is carried by the angular coefficients only, so every
orientation at level j shares the lattice 2^-j Z^2.
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
from .specfun import bessel_j, gamma_complex, hyp1f2_regularized_many
from .windows import (
    AdmissibilityReport,
    AngularWindow2D,
    RadialWindow,
    check_angular_2d,
    check_calderon,
)

__all__ = [
    "FrameAtom2D",
    "FrameSpec2D",
    "psi_hat_2d",
    "psi_spatial_2d",
    "radial_profile_hn_closed",
    "radial_profile_hn_quadrature",
    "radial_profile_scaling",
    "atom_matrix_2d",
    "CLOSED_FORM_R_MAX",
]

CLOSED_FORM_N_MAX = 32
CLOSED_FORM_R_MAX = 512.0
_KAPPA = math.pi / math.log(4.0)
_PS = RadialWindow()


@dataclass(frozen=True, order=True)
class FrameAtom2D:
    """Index of one frame function: level, translation, orientation, kind."""

    j: int
    k: tuple[int, int]
    t: int = 0
    kind: str = "wavelet"

    def __post_init__(self):
        if self.kind not in ("wavelet", "scaling"):
            raise DomainError(f"unknown atom kind {self.kind!r}")
        if self.kind == "scaling" and self.t != 0:
            raise DomainError("scaling atoms have t = 0")
        object.__setattr__(self, "k", (int(self.k[0]), int(self.k[1])))

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.k, dtype=float) * 2.0 ** -self.j


@dataclass(frozen=True, eq=False)
class FrameSpec2D:
    """Layout of a 2D frame: wavelet levels j_min..j_min+J-1 plus a lowpass.

    ``angular[i]`` is the angular window at level ``j_min + i``.
    """

    angular: tuple[AngularWindow2D, ...]
    radial: RadialWindow = field(default_factory=RadialWindow)
    j_min: int = 0
    include_scaling: bool = True
    lattice_step: float = 1.0
    check: bool = True

    dimension = 2

    def __post_init__(self):
        object.__setattr__(self, "angular", tuple(self.angular))
        if not self.angular:
            raise DomainError("need at least one wavelet level")
        if self.lattice_step != 1.0:
            raise DomainError("only the unit lattice is supported")
        if self.check:
            rep = self.admissibility()
            if not rep.passed:
                raise DomainError("frame spec is not admissible:\n" + rep.to_lines())

    @classmethod
    def default(cls, bands=(0, 2, 4), **kw) -> "FrameSpec2D":
        """Isotropic coarse level, increasingly directional finer levels."""
        return cls(tuple(AngularWindow2D.shannon(b) for b in bands), **kw)

    @classmethod
    def isotropic(cls, levels: int, **kw) -> "FrameSpec2D":
        return cls(tuple(AngularWindow2D.isotropic() for _ in range(levels)), **kw)

    @property
    def levels(self) -> range:
        return range(self.j_min, self.j_min + len(self.angular))

    @property
    def j_max(self) -> int:
        return self.j_min + len(self.angular) - 1

    def window(self, j: int) -> AngularWindow2D:
        if j not in self.levels:
            raise DomainError(f"level {j} not in frame")
        return self.angular[j - self.j_min]

    def orientations(self, j: int) -> int:
        return self.window(j).orientations

    def bands(self):
        """(kind, j, t) for every band, lowpass first."""
        out = []
        if self.include_scaling:
            out.append(("scaling", self.j_min, 0))
        for j in self.levels:
            out.extend(("wavelet", j, t) for t in range(self.orientations(j)))
        return out

    def validate_atom(self, atom: FrameAtom2D) -> None:
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
        reps = [check_angular_2d(w) for w in self.angular]
        rep = AdmissibilityReport.merge(reps)
        rep.max_calderon_deviation = cal
        rep.passed = rep.passed and cal <= 1e-12
        return rep

    def window_hat(self, kind: str, j: int, t: int, xi):
        """Un-normalized frequency window gamma_t(theta) hhat(2^-j |xi|)."""
        xi = np.asarray(xi, dtype=float)
        rho = np.hypot(xi[..., 0], xi[..., 1])
        if kind == "scaling":
            return np.asarray(self.radial.ghat(rho * 2.0 ** -j), dtype=complex)
        theta = np.arctan2(xi[..., 1], xi[..., 0])
        return self.window(j)(theta, t) * self.radial.hhat(rho * 2.0 ** -j)

    def to_dict(self) -> dict:
        return {
            "dimension": 2,
            "radial": self.radial.kind,
            "j_min": self.j_min,
            "include_scaling": self.include_scaling,
            "levels": [w.to_dict() for w in self.angular],
        }

    @classmethod
    def from_dict(cls, d: dict, check: bool = True) -> "FrameSpec2D":
        allowed = {"dimension", "radial", "j_min", "include_scaling", "levels"}
        extra = set(d) - allowed
        if extra:
            raise DomainError(f"unknown spec keys: {sorted(extra)}")
        if d.get("dimension", 2) != 2:
            raise DomainError("not a 2D frame spec")
        return cls(
            tuple(AngularWindow2D.from_dict(w) for w in d["levels"]),
            RadialWindow(d.get("radial", "portilla-simoncelli")),
            int(d.get("j_min", 0)),
            bool(d.get("include_scaling", True)),
            check=check,
        )

    def digest(self) -> bytes:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).digest()


# ---------------------------------------------------------------------------
# Frequency domain
# ---------------------------------------------------------------------------

def psi_hat_2d(spec: FrameSpec2D, atom: FrameAtom2D, xi):
    """Fourier transform of the atom at frequencies ``xi`` (..., 2)."""
    spec.validate_atom(atom)
    xi = np.asarray(xi, dtype=float)
    j = atom.j
    phase = np.exp(-1j * 2.0 ** -j * (xi[..., 0] * atom.k[0] + xi[..., 1] * atom.k[1]))
    w = spec.window_hat(atom.kind, j, atom.t, xi)
    return (2.0 ** -j / (2.0 * math.pi)) * w * phase


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------

def _closed_form(ns, r):
    """h_n(r) for every n in ``ns`` (non-negative), shape (len(ns),) + r.shape."""
    r = np.asarray(r, dtype=float)
    params = []
    for n in ns:
        for sign in (-1, +1):
            c2 = 0.5 * (2 + n + sign * 1j * _KAPPA)
            c4 = 0.5 * (4 + n + sign * 1j * _KAPPA)
            params.append((c2, n + 1, c4))
    g4 = hyp1f2_regularized_many(params, -(math.pi ** 2) * r * r / 4.0)
    g64 = hyp1f2_regularized_many(params, -(math.pi ** 2) * r * r / 64.0)
    out = np.empty((len(ns),) + r.shape, dtype=complex)
    for i, n in enumerate(ns):
        im, ip = 2 * i, 2 * i + 1
        gm = gamma_complex(params[im][0])
        gp = gamma_complex(params[ip][0])
        pref = -1j * 8.0 ** (-2 - n) * math.pi ** (2 + n) * r ** n
        out[i] = pref * (gm * (4.0 ** (n + 2) * g4[im] + g64[im])
                         - gp * (4.0 ** (n + 2) * g4[ip] + g64[ip]))
    return out


def _check_profile_args(n, r):
    if int(n) != n or abs(n) > CLOSED_FORM_N_MAX:
        raise DomainError(f"|n| must be an integer <= {CLOSED_FORM_N_MAX}")
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        raise DomainError("radius must be finite and non-negative")
    return int(n), r


def radial_profile_hn_closed(n: int, r):
    """Closed-form radial profile h_n(r) of the Portilla-Simoncelli window.

    h_n(r) = -i 8^(-2-n) pi^(2+n) r^n [ G(c2-) (4^(n+2) F4- + F64-)
                                       - G(c2+) (4^(n+2) F4+ + F64+) ]

    with c_b = (b + n +- i pi / ln 4) / 2 and
    Fc = 1F~2(c2; n+1, c4; -pi^2 r^2 / c). The value is real up to roundoff
    but is returned as complex. Negative n use h_{-n} = (-1)^n h_n.

    Valid for |n| <= 32 and r <= CLOSED_FORM_R_MAX.
    """
    n, r = _check_profile_args(n, r)
    if np.any(r > CLOSED_FORM_R_MAX):
        raise DomainError(f"closed form is evaluated for r <= {CLOSED_FORM_R_MAX:g}")
    val = _closed_form([abs(n)], np.atleast_1d(r))[0]
    if n < 0 and n % 2:
        val = -val
    return complex(val[0]) if r.ndim == 0 else val.reshape(r.shape)


def radial_profile_hn_quadrature(n: int, r, epsabs: float = 1e-13,
                                 epsrel: float = 1e-13) -> float | np.ndarray:
    """Adaptive Gauss-Kronrod evaluation of int hhat(rho) J_n(rho r) rho d rho.

    This is the independent reference for :func:`radial_profile_hn_closed`.
    """
    if int(n) != n:
        raise DomainError("order must be an integer")
    n = int(n)
    m = abs(n)
    sign = -1.0 if (n < 0 and m % 2) else 1.0
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(rr < 0) or not np.all(np.isfinite(rr)):
        raise DomainError("radius must be finite and non-negative")
    out = np.empty_like(rr)
    lo, hi = _PS.support
    for i, ri in enumerate(rr):
        def f(rho, ri=ri):
            return _PS.hhat(rho) * float(bessel_j(m, rho * ri)) * rho

        limit = 200 + int(4 * ri)
        val, err, *info = quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel,
                               limit=limit, full_output=1)
        if len(info) > 1 and err > 1e3 * max(epsabs, epsrel * abs(val)):
            raise NumericError(f"Hankel quadrature did not converge at r={ri}",
                               partial=val)
        out[i] = sign * val
    return float(out[0]) if np.ndim(r) == 0 else out.reshape(np.shape(r))


def _gauss_legendre_hankel(weight, order_fn, lo, hi, r, power=1):
    """int_lo^hi weight(rho) K(rho r) rho^power d rho on an array of r.

    Gauss-Legendre with a node count that tracks the number of
    oscillations; r is processed in chunks of similar magnitude.
    """
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    order = np.argsort(r)
    rs = r[order]
    res = np.empty_like(rs)
    chunk = 4096
    for s in range(0, rs.size, chunk):
        rc = rs[s:s + chunk]
        nodes = int(40 + 0.5 * (hi - lo) * rc.max())
        x, w = np.polynomial.legendre.leggauss(nodes)
        rho = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * w * weight(rho) * rho ** power
        res[s:s + chunk] = order_fn(rho[None, :] * rc[:, None]) @ w
    out[order] = res
    return out


def radial_profile_scaling(r):
    """Spatial radial profile of the lowpass: int ghat(rho) J_0(rho r) rho d rho."""
    r = np.asarray(r, dtype=float)
    flat = np.atleast_1d(r).ravel()
    a = _gauss_legendre_hankel(lambda p: np.ones_like(p), lambda z: bessel_j(0, z),
                               0.0, 0.25 * math.pi, flat)
    b = _gauss_legendre_hankel(_PS.ghat, lambda z: bessel_j(0, z),
                               0.25 * math.pi, 0.5 * math.pi, flat)
    out = (a + b).reshape(np.shape(r))
    return float(out) if np.ndim(r) == 0 else out


class _ProfileTables:
    """Memoized cubic-spline tables of h_n(r) (closed form) and the lowpass profile.

    Tables grow on demand in blocks; building is serialized by a lock, reads
    afterwards are lock-free.
    """

    step = 0.01
    block = 32.0

    def __init__(self):
        self._lock = threading.Lock()
        self._splines: dict = {}
        self._rmax: dict = {}

    def _build(self, key, r_max):
        r_max = min(math.ceil(r_max / self.block) * self.block, CLOSED_FORM_R_MAX)
        grid = np.arange(0.0, r_max + 2 * self.step, self.step)
        if key == "scaling":
            vals = radial_profile_scaling(grid)
        else:
            vals = _closed_form([key], grid)[0].real
        self._splines[key] = CubicSpline(grid, vals)
        self._rmax[key] = grid[-1]

    def ensure(self, keys, r_max):
        with self._lock:
            for key in keys:
                if self._rmax.get(key, -1.0) < r_max:
                    self._build(key, max(r_max, 2 * self._rmax.get(key, 0.0)))

    def __call__(self, key, r):
        r = np.asarray(r, dtype=float)
        hi = float(r.max()) if r.size else 0.0
        if hi > CLOSED_FORM_R_MAX:
            return self._with_fallback(key, r)
        self.ensure([key], hi)
        return self._splines[key](r)

    def _with_fallback(self, key, r):
        out = np.empty_like(r)
        inner = r <= CLOSED_FORM_R_MAX
        self.ensure([key], CLOSED_FORM_R_MAX)
        out[inner] = self._splines[key](r[inner])
        far = r[~inner]
        if key == "scaling":
            out[~inner] = radial_profile_scaling(far)
        else:
            out[~inner] = radial_profile_hn_quadrature(key, far)
        return out


PROFILE_TABLES = _ProfileTables()


def _spatial_from_local(spec: FrameSpec2D, kind: str, j: int, t: int, y):
    """Atom value given local coordinates y = 2^j x - k, shape (..., 2)."""
    r = np.hypot(y[..., 0], y[..., 1])
    pref = 2.0 ** j / (2.0 * math.pi)
    if kind == "scaling":
        return pref * PROFILE_TABLES("scaling", r).astype(complex)
    theta = np.arctan2(y[..., 1], y[..., 0])
    ns, beta = spec.window(j).coefficients(t)
    out = np.zeros(r.shape, dtype=complex)
    cache = {}
    for n, b in zip(ns, beta):
        if b == 0:
            continue
        m = abs(int(n))
        if m not in cache:
            cache[m] = PROFILE_TABLES(m, r)
        h = cache[m] * (-1.0 if (n < 0 and m % 2) else 1.0)
        out += (1j ** (int(n) % 4)) * b * np.exp(1j * n * theta) * h
    return pref * out


def psi_spatial_2d(spec: FrameSpec2D, atom: FrameAtom2D, x, exact: bool = False):
    """Spatial value of the atom at points ``x`` (..., 2).

    By default the radial profiles come from memoized spline tables of the
    closed form (interpolation error ~1e-10). ``exact=True`` evaluates the
    closed form at each point instead, with adaptive quadrature beyond its
    validity radius.
    """
    spec.validate_atom(atom)
    x = np.asarray(x, dtype=float)
    y = 2.0 ** atom.j * x - np.asarray(atom.k, dtype=float)
    if not exact:
        return _spatial_from_local(spec, atom.kind, atom.j, atom.t, y)
    r = np.hypot(y[..., 0], y[..., 1])
    pref = 2.0 ** atom.j / (2.0 * math.pi)
    if atom.kind == "scaling":
        return pref * np.asarray(radial_profile_scaling(r), dtype=complex)
    theta = np.arctan2(y[..., 1], y[..., 0])
    ns, beta = spec.window(atom.j).coefficients(atom.t)
    flat = np.atleast_1d(r).ravel()
    inner = flat <= CLOSED_FORM_R_MAX
    out = np.zeros(np.shape(r), dtype=complex)
    for n, b in zip(ns, beta):
        h = np.empty(flat.shape)
        if np.any(inner):
            h[inner] = radial_profile_hn_closed(abs(int(n)), flat[inner]).real
        if np.any(~inner):
            h[~inner] = radial_profile_hn_quadrature(abs(int(n)), flat[~inner])
        if n < 0 and n % 2:
            h = -h
        out = out + (1j ** (int(n) % 4)) * b * np.exp(1j * n * theta) * h.reshape(np.shape(r))
    return pref * out


def atom_matrix_2d(spec: FrameSpec2D, atoms, points) -> np.ndarray:
    """Matrix of atom values, rows = points, columns = atoms (in given order)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    atoms = list(atoms)
    out = np.zeros((points.shape[0], len(atoms)), dtype=complex)
    groups: dict = {}
    for col, a in enumerate(atoms):
        spec.validate_atom(a)
        groups.setdefault((a.kind, a.j, a.t), []).append(col)
    for (kind, j, t), cols in groups.items():
        ks = np.array([atoms[c].k for c in cols], dtype=float)
        for lo in range(0, points.shape[0], 1024):
            p = points[lo:lo + 1024]
            y = 2.0 ** j * p[:, None, :] - ks[None, :, :]
            out[lo:lo + 1024, cols] = _spatial_from_local(spec, kind, j, t, y)
    return out
