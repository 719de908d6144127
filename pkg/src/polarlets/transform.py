"""FFT-based analysis and synthesis on periodic grids, filter taps, coefficient I/O.

Grid conventions: array axis a is coordinate axis a (x, y[, z]); point p sits
at ``origin + spacing * p``; the spacing is a power of two. The L2 norm of a
grid signal is ``spacing^d * sum |f|^2``.

For a band with window W (see ``spec.window_hat``) the coefficients at level
j are ``2^(-jd/2) * G`` sampled at the lattice 2^-j Z^d, where
``G = IFFT(FFT(f) * conj(W))``. Synthesis is the adjoint.
"""

from __future__ import annotations

import functools
import math
import struct
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import DataError, DomainError, NumericError
from .formats import write_csv
from .frame2d import FrameAtom2D, FrameSpec2D
from .frame3d import FrameAtom3D, FrameSpec3D
from .specfun import bessel_j

__all__ = [
    "GridSignal",
    "CoefficientSet",
    "frequency_grid",
    "bandlimit",
    "covered_mask",
    "random_bandlimited",
    "analyze",
    "synthesize",
    "render_atom",
    "filter_tap_beta",
    "filter_tap_alpha",
    "write_pwlc",
    "read_pwlc",
    "write_coefficients_csv",
]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class GridSignal:
    """Samples of a function on a periodic grid (2D or 3D)."""

    values: np.ndarray
    spacing: float = 1.0
    origin: tuple = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim not in (2, 3):
            raise DomainError("grid signals are 2D or 3D")
        for n in v.shape:
            if n < 8 or not _is_pow2(n):
                raise DomainError(f"grid dimensions must be powers of two >= 8, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid values must be finite")
        m = -math.log2(self.spacing)
        if abs(m - round(m)) > 1e-12:
            raise DomainError("grid spacing must be a power of two")
        origin = self.origin
        if origin is None:
            origin = tuple(-0.5 * n * self.spacing for n in v.shape)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", tuple(float(o) for o in origin))

    @classmethod
    def zeros(cls, shape, spacing=1.0, origin=None) -> "GridSignal":
        return cls(np.zeros(shape), spacing, origin)

    @property
    def shape(self):
        return self.values.shape

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def width(self) -> int:
        return self.shape[0]

    @property
    def height(self) -> int:
        return self.shape[1]

    def points(self) -> np.ndarray:
        """Coordinates of every sample, shape ``shape + (d,)``."""
        axes = [o + self.spacing * np.arange(n) for o, n in zip(self.origin, self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def norm(self) -> float:
        return math.sqrt(self.spacing ** self.dimension * float(np.sum(np.abs(self.values) ** 2)))

    def with_values(self, values) -> "GridSignal":
        return GridSignal(values, self.spacing, self.origin)

    def geometry(self):
        return self.shape, self.spacing, self.origin


def frequency_grid(shape, spacing) -> np.ndarray:
    """Angular frequencies of the DFT bins, shape ``shape + (d,)``."""
    axes = [2.0 * math.pi * np.fft.fftfreq(n, spacing) for n in shape]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def covered_mask(spec, shape, spacing) -> np.ndarray:
    """Indicator of the frequencies on which the finite frame is tight."""
    xi = frequency_grid(shape, spacing)
    rho = np.linalg.norm(xi, axis=-1)
    return rho <= 2.0 ** spec.j_max * 0.5 * math.pi * (1 + 1e-12)


def bandlimit(spec, f: GridSignal) -> GridSignal:
    """Project onto the band where the partition of unity equals one."""
    spec_f = np.fft.fftn(f.values) * covered_mask(spec, f.shape, f.spacing)
    out = np.fft.ifftn(spec_f)
    if np.isrealobj(f.values):
        out = out.real
    return f.with_values(out)


def random_bandlimited(spec, shape, spacing, rng) -> GridSignal:
    """Real white noise projected onto the covered band, unit L2 norm."""
    g = GridSignal(rng.standard_normal(shape), spacing)
    g = bandlimit(spec, g)
    return g.with_values(g.values / g.norm())


def _atom_type(spec):
    return FrameAtom3D if spec.dimension == 3 else FrameAtom2D


def _check_grid(spec, shape, spacing, origin, levels=None):
    """The grid must resolve the finest level and hold the coarsest lattice."""
    d = len(shape)
    if d != spec.dimension:
        raise DomainError(f"{spec.dimension}D frame cannot act on a {d}D grid")
    levels = list(spec.levels) if levels is None else list(levels)
    if not levels:
        return
    j_lo, j_hi = min(levels), max(levels)
    m = int(round(-math.log2(spacing)))
    if m < j_hi:
        raise DomainError(f"grid spacing 2^{-m} too coarse for level {j_hi}")
    for n in shape:
        if n * spacing < 2.0 ** -j_lo:
            raise DomainError("grid smaller than one coarse lattice cell")
    for o in origin:
        v = o * 2.0 ** j_lo
        if abs(v - round(v)) > 1e-9:
            raise DomainError("grid origin must lie on the coarsest lattice")


def _lattice(j, shape, spacing, origin):
    """(stride, k0, lattice shape) of level j on the grid."""
    stride = int(round(2.0 ** -j / spacing))
    k0 = tuple(int(round(o * 2.0 ** j)) for o in origin)
    return stride, k0, tuple(n // stride for n in shape)


@dataclass
class Band:
    """Coefficients of one (kind, j, t) band on a rectangular lattice patch."""

    k0: tuple
    values: np.ndarray
    mask: np.ndarray | None = None

    def active(self) -> np.ndarray:
        return np.ones(self.values.shape, bool) if self.mask is None else self.mask


@dataclass(eq=False)
class CoefficientSet(Mapping):
    """Frame coefficients keyed by atom, stored band by band.

    Behaves as a read-only mapping atom -> complex. ``geometry`` records the
    grid a dense analysis came from, so synthesis can default to it.
    """

    spec: object
    bands: dict = field(default_factory=dict)
    geometry: tuple | None = None

    def __post_init__(self):
        allowed = set(self.spec.bands())
        for key in self.bands:
            if key not in allowed:
                raise DomainError(f"band {key} does not belong to the spec")

    # Mapping protocol
    def _locate(self, atom):
        if not isinstance(atom, _atom_type(self.spec)):
            raise KeyError(atom)
        band = self.bands.get((atom.kind, atom.j, atom.t))
        if band is None:
            raise KeyError(atom)
        idx = tuple(k - k0 for k, k0 in zip(atom.k, band.k0))
        if any(i < 0 or i >= n for i, n in zip(idx, band.values.shape)):
            raise KeyError(atom)
        if band.mask is not None and not band.mask[idx]:
            raise KeyError(atom)
        return band, idx

    def __getitem__(self, atom):
        band, idx = self._locate(atom)
        return complex(band.values[idx])

    def __iter__(self):
        cls = _atom_type(self.spec)
        for (kind, j, t), band in self.bands.items():
            for idx in zip(*np.nonzero(band.active())):
                k = tuple(int(a + b) for a, b in zip(idx, band.k0))
                yield cls(j, k, t, kind)

    def __len__(self):
        return int(sum(np.count_nonzero(b.active()) for b in self.bands.values()))

    # numerics
    def energy(self) -> float:
        return float(sum(np.sum(np.abs(b.values[b.active()]) ** 2) for b in self.bands.values()))

    def norm(self) -> float:
        return math.sqrt(self.energy())

    def band(self, kind, j, t=0) -> Band:
        return self.bands[(kind, j, t)]

    def vector(self):
        """(atoms, values) in iteration order."""
        atoms = list(self)
        return atoms, np.array([self[a] for a in atoms], dtype=complex)

    def map_values(self, fn) -> "CoefficientSet":
        bands = {key: Band(b.k0, fn(b.values), None if b.mask is None else b.mask.copy())
                 for key, b in self.bands.items()}
        return CoefficientSet(self.spec, bands, self.geometry)

    def __mul__(self, a):
        return self.map_values(lambda v: a * v)

    __rmul__ = __mul__

    def __add__(self, other: "CoefficientSet") -> "CoefficientSet":
        if other.spec is not self.spec or set(other.bands) != set(self.bands):
            raise DomainError("coefficient sets have different layouts")
        bands = {}
        for key, b in self.bands.items():
            o = other.bands[key]
            if o.k0 != b.k0 or o.values.shape != b.values.shape:
                raise DomainError("coefficient sets have different layouts")
            mask = None if b.mask is None and o.mask is None else (b.active() | o.active())
            bands[key] = Band(b.k0, b.values + o.values, mask)
        return CoefficientSet(self.spec, bands, self.geometry)

    @classmethod
    def from_mapping(cls, spec, entries, geometry=None) -> "CoefficientSet":
        """Sparse set from ``{atom: value}``; each band covers its atoms' bounding box."""
        grouped: dict = {}
        for atom, val in dict(entries).items():
            spec.validate_atom(atom)
            grouped.setdefault((atom.kind, atom.j, atom.t), []).append((atom.k, val))
        bands = {}
        for key, items in grouped.items():
            ks = np.array([k for k, _ in items])
            lo = ks.min(axis=0)
            shape = tuple(ks.max(axis=0) - lo + 1)
            values = np.zeros(shape, dtype=complex)
            mask = np.zeros(shape, dtype=bool)
            for k, v in items:
                idx = tuple(np.asarray(k) - lo)
                values[idx] = v
                mask[idx] = True
            bands[key] = Band(tuple(int(v) for v in lo), values, mask)
        return cls(spec, bands, geometry)


def _band_norm(spec, j):
    return 2.0 ** (-0.5 * j * spec.dimension)


def analyze(spec, f: GridSignal) -> CoefficientSet:
    """Frame coefficients <f, psi> for every atom whose center lies on the grid."""
    _check_grid(spec, f.shape, f.spacing, f.origin)
    F = np.fft.fftn(f.values)
    xi = frequency_grid(f.shape, f.spacing)
    bands = {}
    for kind, j, t in spec.bands():
        w = spec.window_hat(kind, j, t, xi)
        g = np.fft.ifftn(F * np.conj(w))
        stride, k0, _ = _lattice(j, f.shape, f.spacing, f.origin)
        sl = tuple(slice(None, None, stride) for _ in f.shape)
        bands[(kind, j, t)] = Band(k0, _band_norm(spec, j) * g[sl])
    return CoefficientSet(spec, bands, f.geometry())


def synthesize(spec, c: CoefficientSet, geometry=None, real: bool | None = None) -> GridSignal:
    """sum_atoms c * psi on a periodic grid (defaults to the analysis grid).

    The result is real when every band is conjugate-paired, which holds for
    the even-parity windows; ``real=None`` keeps the real part whenever the
    imaginary part is at roundoff level.
    """
    if c.spec is not spec and c.spec.to_dict() != spec.to_dict():
        raise DomainError("coefficient set belongs to a different spec")
    geometry = geometry or c.geometry
    if geometry is None:
        raise DomainError("synthesis needs a target grid geometry")
    shape, spacing, origin = geometry
    shape = tuple(shape)
    _check_grid(spec, shape, spacing, origin, {j for _, j, _ in c.bands})
    xi = frequency_grid(shape, spacing)
    acc = np.zeros(shape, dtype=complex)
    for (kind, j, t), band in c.bands.items():
        stride, k0, _ = _lattice(j, shape, spacing, origin)
        up = np.zeros(shape, dtype=complex)
        idx = np.nonzero(band.active())
        pos = tuple(((np.asarray(i) + b0 - g0) * stride) % n
                    for i, b0, g0, n in zip(idx, band.k0, k0, shape))
        np.add.at(up, pos, band.values[idx])
        w = spec.window_hat(kind, j, t, xi)
        acc += _band_norm(spec, j) * np.fft.fftn(up) * w
    out = np.fft.ifftn(acc) / spacing ** len(shape)
    if real is None:
        real = np.max(np.abs(out.imag), initial=0.0) <= 1e-9 * max(np.max(np.abs(out.real), initial=0.0), 1e-300)
    return GridSignal(out.real if real else out, spacing, origin)


def render_atom(spec, atom, geometry) -> GridSignal:
    """Sample one atom on a periodic grid by inverse FFT (the dense oracle)."""
    c = CoefficientSet.from_mapping(spec, {atom: 1.0})
    return synthesize(spec, c, geometry, real=False)


# ---------------------------------------------------------------------------
# Filter taps
# ---------------------------------------------------------------------------

def _tap_levels(spec, j):
    if spec.dimension != 2:
        raise DomainError("filter taps are defined for 2D frames")
    if j not in spec.levels or (j + 1) not in spec.levels:
        raise DomainError(f"levels {j} and {j + 1} must both be in the frame")


@functools.lru_cache(maxsize=4096)
def _radial_tap(radial, first: str, j, n, dist):
    """int W(2^-j rho) ghat(2^-j-1 rho) J_n(rho dist) rho d rho, W = hhat or ghat."""
    a = 2.0 ** j
    if first == "hhat":
        win, lo, hi = radial.hhat, 0.25 * math.pi * a, math.pi * a
    else:
        win, lo, hi = radial.ghat, 0.0, 0.5 * math.pi * a
    pts = [p for p in (0.25 * math.pi * a, 0.5 * math.pi * a) if lo < p < hi]

    def f(rho):
        return win(rho / a) * radial.ghat(0.5 * rho / a) * float(bessel_j(n, rho * dist)) * rho

    val, err, *info = quad(f, lo, hi, points=pts or None, epsabs=1e-13, epsrel=1e-12,
                           limit=400, full_output=1)
    if len(info) > 1 and err > 1e-9:
        raise NumericError("filter-tap quadrature did not converge", partial=val)
    return val


def filter_tap_beta(spec: FrameSpec2D, j: int, k, t: int) -> complex:
    """<psi_{j,0,t}, phi_{j+1,k}> by radial quadrature.

    = 2^(-2j-1)/(2 pi) * sum_n i^n beta^t_n e^{i n theta_k} B_n(|k|), with
    B_n = int hhat(2^-j rho) ghat(2^-j-1 rho) J_n(rho 2^-j-1 |k|) rho d rho.
    """
    _tap_levels(spec, j)
    kx, ky = (int(v) for v in k)
    dist = 2.0 ** (-j - 1) * math.hypot(kx, ky)
    theta = math.atan2(ky, kx)
    ns, beta = spec.window(j).coefficients(t)
    radial = spec.radial
    total = 0j
    cache = {}
    for n, b in zip(ns, beta):
        if b == 0:
            continue
        m = abs(int(n))
        if m not in cache:
            cache[m] = 0.0 if (dist == 0 and m > 0) else _radial_tap(radial, "hhat", j, m, dist)
        bn = cache[m] * (-1.0 if (n < 0 and m % 2) else 1.0)
        total += (1j ** (int(n) % 4)) * b * np.exp(1j * n * theta) * bn
    return complex(2.0 ** (-2 * j - 1) / (2.0 * math.pi) * total)


def filter_tap_alpha(spec: FrameSpec2D, j: int, k) -> float:
    """<phi_{j,0}, phi_{j+1,k}> = 2^(-2j-1)/(2 pi) int ghat ghat J_0 rho d rho."""
    _tap_levels(spec, j)
    dist = 2.0 ** (-j - 1) * math.hypot(*(float(v) for v in k))
    return 2.0 ** (-2 * j - 1) / (2.0 * math.pi) * _radial_tap(spec.radial, "ghat", j, 0, dist)


# ---------------------------------------------------------------------------
# Coefficient containers
# ---------------------------------------------------------------------------

PWLC_MAGIC = b"PWLC"
PWLC_VERSION = 1
_HEADER = struct.Struct("<4sHBB32sQ")
_KIND = {"scaling": 0, "wavelet": 1}
_KIND_INV = {v: k for k, v in _KIND.items()}


def _record(dim):
    return struct.Struct("<bii" + ("i" if dim == 3 else "") + "hbdd")


def write_pwlc(path, c: CoefficientSet) -> None:
    """Binary container: header (magic, version, dimension, spec hash, count), then records.

    2D record: j int8, kx int32, ky int32, t int16, kind int8, re float64, im float64.
    3D records insert kz int32 after ky.
    """
    dim = c.spec.dimension
    rec = _record(dim)
    atoms, vals = c.vector()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(PWLC_MAGIC, PWLC_VERSION, dim, 0, c.spec.digest(), len(atoms)))
        for a, v in zip(atoms, vals):
            fh.write(rec.pack(a.j, *a.k, a.t, _KIND[a.kind], v.real, v.imag))


def read_pwlc(path, spec) -> CoefficientSet:
    """Read a PWLC container written for ``spec`` (hash must match)."""
    try:
        raw = open(path, "rb").read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated PWLC header")
    magic, version, dim, _, digest, count = _HEADER.unpack_from(raw, 0)
    if magic != PWLC_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != PWLC_VERSION:
        raise DataError(f"{path}: unsupported PWLC version {version}")
    if dim != spec.dimension:
        raise DataError(f"{path}: container is {dim}D, spec is {spec.dimension}D")
    if digest != spec.digest():
        raise DataError(f"{path}: spec hash mismatch")
    rec = _record(dim)
    if len(raw) != _HEADER.size + count * rec.size:
        raise DataError(f"{path}: record count does not match file size")
    cls = _atom_type(spec)
    entries = {}
    for i in range(count):
        fields = rec.unpack_from(raw, _HEADER.size + i * rec.size)
        j, k, (t, kind, re, im) = fields[0], fields[1:1 + dim], fields[1 + dim:]
        if kind not in _KIND_INV:
            raise DataError(f"{path}: record {i} has unknown kind {kind}")
        try:
            atom = cls(j, tuple(k), t, _KIND_INV[kind])
            spec.validate_atom(atom)
        except DomainError as exc:
            raise DataError(f"{path}: record {i}: {exc}") from None
        entries[atom] = complex(re, im)
    return CoefficientSet.from_mapping(spec, entries)


def write_coefficients_csv(path, c: CoefficientSet) -> None:
    dim = c.spec.dimension
    kcols = ["kx", "ky", "kz"][:dim]
    atoms, vals = c.vector()
    write_csv(path, ["kind", "j", *kcols, "t", "re", "im"],
              ([a.kind, a.j, *a.k, a.t, v.real, v.imag] for a, v in zip(atoms, vals)))
