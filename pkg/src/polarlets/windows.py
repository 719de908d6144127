"""
Radial and angular localization windows and their admissibility checks.

The radial window is the Portilla-Simoncelli log-cosine bandpass on
(pi/4, pi) together with its lowpass complement. Angular windows are finite
Fourier series on the circle (2D) or finite spherical-harmonic expansions
on the sphere (3D); a family of rotated copies is admissible when the sum
of their squared magnitudes is constant over all directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .specfun import lebedev_grid, sph_harm_all, sph_index

__all__ = [
    "RadialWindow",
    "AngularWindow2D",
    "AngularWindow3D",
    "AdmissibilityReport",
    "radial_hhat",
    "radial_ghat",
    "check_calderon",
    "check_angular_2d",
    "check_angular_3d",
    "icosahedral_rotations",
    "ANALYTIC_TOL",
    "QUADRATURE_TOL",
]

ANALYTIC_TOL = 1e-12
QUADRATURE_TOL = 1e-8

_LO = 0.25 * math.pi
_HI = math.pi


@dataclass(frozen=True)
class RadialWindow:
    """Portilla-Simoncelli radial window (the only kind supported)."""

    kind: str = "portilla-simoncelli"

    def __post_init__(self):
        if self.kind != "portilla-simoncelli":
            raise DomainError(f"unsupported radial window {self.kind!r}")

    @property
    def support(self) -> tuple[float, float]:
        return (_LO, _HI)

    @property
    def lowpass_cutoff(self) -> float:
        return _LO

    def hhat(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r > _LO) & (r < _HI)
        safe = np.where(inside, r, 0.5 * math.pi)
        val = np.cos(0.5 * math.pi * np.log2(2.0 * safe / math.pi))
        out = np.where(inside, val, 0.0)
        return float(out) if out.ndim == 0 else out

    def ghat(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r <= _LO, 1.0, 0.0)
        band = (r > _LO) & (r < 0.5 * math.pi)
        out = np.where(band, self.hhat(2.0 * np.where(band, r, 0.0)), out)
        return float(out) if out.ndim == 0 else out

    def partition(self, r, j_min: int, j_max: int):
        """ghat(2^-j_min r)^2 + sum_{j=j_min}^{j_max} hhat(2^-j r)^2."""
        r = np.asarray(r, dtype=float)
        total = self.ghat(r * 2.0 ** -j_min) ** 2
        for j in range(j_min, j_max + 1):
            total = total + self.hhat(r * 2.0 ** -j) ** 2
        return total


def radial_hhat(w: RadialWindow, r):
    """Bandpass window value at radius ``r`` (0 outside (pi/4, pi))."""
    return w.hhat(r)


def radial_ghat(w: RadialWindow, r):
    """Lowpass (scaling) window: 1 below pi/4, hhat(2r) up to pi/2, then 0."""
    return w.ghat(r)


def check_calderon(w: RadialWindow, j_min: int, j_max: int, grid) -> float:
    """Maximum deviation of the discrete partition of unity from 1.

    ``grid`` holds radii |xi| in [0, 2^j_max pi / 2], the range fully
    covered by the lowpass at ``j_min`` and bandpass levels j_min..j_max.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise DomainError("empty grid")
    if j_max < j_min:
        raise DomainError("j_max must be >= j_min")
    cover = 2.0 ** j_max * 0.5 * math.pi
    if np.any(grid < 0) or np.any(grid > cover * (1 + 1e-15)):
        raise DomainError(f"grid must lie in [0, {cover:g}]")
    return float(np.max(np.abs(w.partition(grid, j_min, j_max) - 1.0)))


@dataclass
class AdmissibilityReport:
    max_calderon_deviation: float = float("nan")
    angular_diag_trace: float = float("nan")
    max_offdiag: float = float("nan")
    sphere_partition_deviation: float = float("nan")
    passed: bool = False

    def to_lines(self) -> str:
        rows = [
            ("max_calderon_deviation", self.max_calderon_deviation),
            ("angular_diag_trace", self.angular_diag_trace),
            ("max_offdiag", self.max_offdiag),
            ("sphere_partition_deviation", self.sphere_partition_deviation),
        ]
        lines = [f"{k}={v:.17g}" for k, v in rows]
        lines.append(f"passed={'true' if self.passed else 'false'}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def merge(reports) -> "AdmissibilityReport":
        """Worst-case combination of several per-level reports."""
        out = AdmissibilityReport(passed=True)
        for rep in reports:
            for name in ("max_calderon_deviation", "max_offdiag",
                         "sphere_partition_deviation"):
                v = getattr(rep, name)
                if not math.isnan(v):
                    cur = getattr(out, name)
                    setattr(out, name, v if math.isnan(cur) else max(cur, v))
            tr = rep.angular_diag_trace
            if not math.isnan(tr):
                cur = out.angular_diag_trace
                if math.isnan(cur) or abs(tr - 1) > abs(cur - 1):
                    out.angular_diag_trace = tr
            out.passed = out.passed and rep.passed
        return out


# ---------------------------------------------------------------------------
# 2D angular windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AngularWindow2D:
    """Finite Fourier series sum_n beta_n e^{i n theta} with M rotated copies.

    Copy ``t`` has coefficients beta_n e^{i n t 2 pi / M}, i.e. it is the
    base window evaluated at theta + 2 pi t / M.
    """

    n: tuple[int, ...]
    beta: tuple[complex, ...]
    orientations: int
    parity: str = "general"

    def __post_init__(self):
        if len(self.n) != len(self.beta):
            raise DomainError("n and beta must have equal length")
        if self.orientations < 1:
            raise DomainError("need at least one orientation")
        if len(set(self.n)) != len(self.n):
            raise DomainError("duplicate harmonic index")
        if self.parity not in ("even-only", "general"):
            raise DomainError(f"unknown parity {self.parity!r}")
        if self.parity == "even-only" and any(
                k % 2 and b != 0 for k, b in zip(self.n, self.beta)):
            raise DomainError("even-only window has odd harmonics")

    @classmethod
    def shannon(cls, band: int) -> "AngularWindow2D":
        """Default band-limited window: equal weights on even |n| <= band.

        Uses M = 2 band + 1 rotations and the unique positive weight making
        the rotated family tight.
        """
        if band < 0:
            raise DomainError("band must be non-negative")
        ns = tuple(k for k in range(-band, band + 1) if k % 2 == 0)
        m = 2 * band + 1
        c = 1.0 / math.sqrt(m * len(ns))
        return cls(ns, tuple(complex(c) for _ in ns), m, "even-only")

    @classmethod
    def isotropic(cls) -> "AngularWindow2D":
        return cls.shannon(0)

    @property
    def band(self) -> int:
        return max(abs(k) for k in self.n)

    @property
    def is_isotropic(self) -> bool:
        return all(k == 0 or b == 0 for k, b in zip(self.n, self.beta))

    def coefficients(self, t: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """(n, beta^t) for orientation ``t``."""
        if not 0 <= t < self.orientations:
            raise DomainError(f"orientation {t} out of range")
        ns = np.asarray(self.n, dtype=int)
        beta = np.asarray(self.beta, dtype=complex)
        return ns, beta * np.exp(1j * ns * t * 2.0 * math.pi / self.orientations)

    def __call__(self, theta, t: int = 0):
        ns, beta = self.coefficients(t)
        theta = np.asarray(theta, dtype=float)
        return np.tensordot(np.exp(1j * theta[..., None] * ns), beta, axes=(-1, 0))

    def peak_angle(self, t: int = 0) -> float:
        """Frequency direction where copy ``t`` is largest (mod pi if even)."""
        grid = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
        theta0 = grid[int(np.argmax(np.abs(self(grid, 0))))]
        ang = theta0 - 2.0 * math.pi * t / self.orientations
        period = math.pi if self.parity == "even-only" else 2.0 * math.pi
        return ang % period

    def gram(self) -> np.ndarray:
        """U^H U with rows of U indexed by orientation, columns by harmonic."""
        u = np.stack([self.coefficients(t)[1] for t in range(self.orientations)])
        return u.conj().T @ u

    def scaled(self, factor: complex) -> "AngularWindow2D":
        return AngularWindow2D(self.n, tuple(b * factor for b in self.beta),
                               self.orientations, self.parity)

    def to_dict(self) -> dict:
        return {
            "band": self.band,
            "orientations": self.orientations,
            "parity": self.parity,
            "coeffs": [[int(k), float(b.real), float(b.imag)]
                       for k, b in zip(self.n, self.beta)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AngularWindow2D":
        if "coeffs" not in d:
            return cls.shannon(int(d["band"]))
        ns = tuple(int(row[0]) for row in d["coeffs"])
        beta = tuple(complex(row[1], row[2] if len(row) > 2 else 0.0)
                     for row in d["coeffs"])
        return cls(ns, beta, int(d["orientations"]), d.get("parity", "general"))


def check_angular_2d(aw: AngularWindow2D, tol: float = ANALYTIC_TOL) -> AdmissibilityReport:
    g = aw.gram()
    off = g - np.diag(np.diag(g))
    trace = float(np.trace(g).real)
    max_off = float(np.max(np.abs(off))) if off.size > 1 else 0.0
    return AdmissibilityReport(
        angular_diag_trace=trace,
        max_offdiag=max_off,
        passed=abs(trace - 1.0) <= tol and max_off <= tol,
    )


# ---------------------------------------------------------------------------
# 3D angular windows
# ---------------------------------------------------------------------------

def _directions_to_angles(d):
    d = np.asarray(d, dtype=float)
    norm = np.linalg.norm(d, axis=-1)
    safe = np.where(norm > 0, norm, 1.0)
    z = np.clip(d[..., 2] / safe, -1.0, 1.0)
    return np.arccos(z), np.arctan2(d[..., 1], d[..., 0])


def icosahedral_rotations() -> np.ndarray:
    """The 60 proper rotations of the icosahedral group, shape (60, 3, 3)."""
    from scipy.spatial.transform import Rotation

    return Rotation.create_group("I").as_matrix()


@dataclass(frozen=True, eq=False)
class AngularWindow3D:
    """Spherical-harmonic windows gamma_t = sum_lm kappa^t_lm y_lm, t < T.

    ``coeffs`` has shape (T, (L+1)^2) in :func:`sph_index` order. Admissible
    families satisfy sum_t |gamma_t|^2 = 1 / (4 pi) on the whole sphere.
    """

    coeffs: np.ndarray
    kind: str = "isotropic"
    axes: np.ndarray | None = field(default=None)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        size = c.shape[1]
        L = int(round(math.sqrt(size))) - 1
        if (L + 1) ** 2 != size:
            raise DomainError("coefficient length must be (L+1)^2")
        if self.kind not in ("isotropic", "zonal", "anisotropic"):
            raise DomainError(f"unknown 3D window kind {self.kind!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return int(round(math.sqrt(self.coeffs.shape[1]))) - 1

    @property
    def orientations(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def isotropic(cls) -> "AngularWindow3D":
        return cls(np.ones((1, 1), dtype=complex), "isotropic")

    @classmethod
    def zonal(cls, axes, kbar, normalize: bool = True) -> "AngularWindow3D":
        """Windows rotationally symmetric about each axis eta_t.

        kappa^t_lm = kbar_l conj(y_lm(eta_t)).
        """
        axes = np.atleast_2d(np.asarray(axes, dtype=float))
        axes = axes / np.linalg.norm(axes, axis=1, keepdims=True)
        kbar = np.asarray(kbar, dtype=complex)
        L = kbar.size - 1
        theta, phi = _directions_to_angles(axes)
        y = sph_harm_all(L, theta, phi)
        scale = np.array([kbar[l] for l in range(L + 1) for _ in range(2 * l + 1)])
        win = cls(np.conj(y) * scale[None, :], "zonal", axes)
        return win.normalized() if normalize else win

    @classmethod
    def anisotropic(cls, beta, kbar, rotations=None,
                    normalize: bool = True) -> "AngularWindow3D":
        """Product windows kappa_lm = beta_m kbar_l and rotated copies.

        ``beta`` maps m to a coefficient; ``rotations`` (T, 3, 3) are applied
        as gamma_t(xi) = gamma_0(R_t^T xi). Defaults to the icosahedral group,
        which makes any window of degree <= 2 admissible.
        """
        kbar = np.asarray(kbar, dtype=complex)
        L = kbar.size - 1
        base = np.zeros((L + 1) ** 2, dtype=complex)
        for l in range(L + 1):
            for m, b in beta.items():
                if abs(m) <= l:
                    base[sph_index(l, m)] = b * kbar[l]
        if rotations is None:
            rotations = icosahedral_rotations()
        rotations = np.asarray(rotations, dtype=float).reshape(-1, 3, 3)
        pts, w = lebedev_grid(2 * L + 2)
        theta, phi = _directions_to_angles(pts)
        y = sph_harm_all(L, theta, phi)
        rows = []
        for rot in rotations:
            src = pts @ rot          # rows are R^T x
            th, ph = _directions_to_angles(src)
            vals = sph_harm_all(L, th, ph) @ base
            rows.append((w * vals) @ np.conj(y))
        win = cls(np.array(rows), "anisotropic")
        return win.normalized() if normalize else win

    def __call__(self, directions, t: int | None = None):
        """gamma_t at unit directions (..., 3); all t stacked last if None."""
        theta, phi = _directions_to_angles(directions)
        y = sph_harm_all(self.degree, theta, phi)
        if t is None:
            return y @ self.coeffs.T
        return y @ self.coeffs[t]

    def energy(self, directions):
        return np.sum(np.abs(self(directions)) ** 2, axis=-1)

    def normalized(self) -> "AngularWindow3D":
        """Rescale so the direction average of sum_t |gamma_t|^2 is 1/(4 pi)."""
        # sphere integral of sum_t |gamma_t|^2 is sum |kappa|^2 by orthonormality
        total = float(np.sum(np.abs(self.coeffs) ** 2))
        if total == 0:
            raise DomainError("window is identically zero")
        return AngularWindow3D(self.coeffs / math.sqrt(total), self.kind, self.axes)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "degree": self.degree,
            "coeffs": [[[float(v.real), float(v.imag)] for v in row]
                       for row in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AngularWindow3D":
        rows = np.array([[complex(a, b) for a, b in row] for row in d["coeffs"]])
        return cls(rows, d.get("kind", "anisotropic"))


def check_angular_3d(aw: AngularWindow3D, degree: int | None = None,
                     tol: float = QUADRATURE_TOL) -> AdmissibilityReport:
    """Direction-space admissibility test for a 3D window family.

    Evaluates S = sum_t |gamma_t|^2 on a Lebedev grid; S is a polynomial of
    degree 2L, so constancy at the nodes of a rule exact to degree 4L is
    equivalent to constancy everywhere (all non-constant harmonic moments of
    S vanish). Reports max |S - c| over the nodes with c the sphere average,
    and |4 pi c - 1|.
    """
    L = aw.degree
    if degree is None:
        degree = 4 * L + 3
    if degree < 2 * L:
        raise DomainError(f"grid degree {degree} too low for window degree {L}")
    pts, w = lebedev_grid(degree)
    s = aw.energy(pts)
    c = float(np.sum(w * s) / (4.0 * math.pi))
    dev = float(np.max(np.abs(s - c)))
    # harmonic moments of S beyond l = 0 (exact when degree >= 4L)
    if degree >= 4 * L and L > 0:
        theta, phi = _directions_to_angles(pts)
        y = sph_harm_all(2 * L, theta, phi)
        moments = (w * s) @ np.conj(y)
        dev = max(dev, float(np.max(np.abs(moments[1:]))))
    norm_dev = abs(4.0 * math.pi * c - 1.0)
    return AdmissibilityReport(
        angular_diag_trace=4.0 * math.pi * c,
        max_offdiag=norm_dev,
        sphere_partition_deviation=dev,
        passed=dev <= tol and norm_dev <= tol,
    )
