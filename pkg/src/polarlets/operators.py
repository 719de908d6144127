"""Galerkin matrix of the Laplacian on isotropic 2D atoms.

For isotropic atoms s, r with radial windows W_s, W_r::

    <Delta psi_s, psi_r> = -(2^(-j_s - j_r) / (2 pi)) beta_s conj(beta_r)
                           * int W_s(rho) W_r(rho) J_0(rho |c_s - c_r|) rho^3 d rho

where c = 2^-j k is the atom center and W is hhat(2^-j rho) (or ghat for the
lowpass). Only the relative displacement of the two centers enters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad

from .errors import DomainError, NumericError
from .formats import fmt
from .frame2d import FrameAtom2D, FrameSpec2D
from .specfun import bessel_j

__all__ = ["laplace_entry", "assemble_laplacian", "GalerkinMatrix", "DEFAULT_CUTOFF"]

DEFAULT_CUTOFF = 1e-10
_ROW_BLOCK = 256


def _radial_part(spec: FrameSpec2D, atom: FrameAtom2D):
    """(window function of rho, support (lo, hi), kinks, beta_0) for an isotropic atom."""
    spec.validate_atom(atom)
    a = 2.0 ** atom.j
    w = spec.radial
    if atom.kind == "scaling":
        return (lambda rho: w.ghat(rho / a)), (0.0, 0.5 * math.pi * a), (0.25 * math.pi * a,), 1.0
    win = spec.window(atom.j)
    if not win.is_isotropic:
        raise DomainError(f"Laplacian entries need isotropic atoms; level {atom.j} is directional")
    ns, beta = win.coefficients(atom.t)
    b0 = complex(beta[list(ns).index(0)])
    return (lambda rho: w.hhat(rho / a)), (0.25 * math.pi * a, math.pi * a), (0.5 * math.pi * a,), b0


def _pair_setup(spec, s, r):
    fs, (lo_s, hi_s), ks, bs = _radial_part(spec, s)
    fr, (lo_r, hi_r), kr, br = _radial_part(spec, r)
    lo, hi = max(lo_s, lo_r), min(hi_s, hi_r)
    pref = -(2.0 ** (-s.j - r.j)) / (2.0 * math.pi) * bs * np.conj(br)
    d = np.asarray(s.center) - np.asarray(r.center)
    breaks = sorted({lo, hi, *(p for p in ks + kr if lo < p < hi)})
    return fs, fr, lo, hi, breaks, pref, float(np.hypot(d[0], d[1]))


def laplace_entry(spec: FrameSpec2D, s: FrameAtom2D, r: FrameAtom2D) -> float:
    """v_sr = <Delta psi_s, psi_r> by adaptive quadrature (absolute tolerance 1e-12)."""
    fs, fr, lo, hi, breaks, pref, dist = _pair_setup(spec, s, r)
    if lo >= hi:
        return 0.0

    def f(rho):
        return fs(rho) * fr(rho) * float(bessel_j(0, rho * dist)) * rho ** 3

    val, err, *info = quad(f, lo, hi, points=breaks[1:-1] or None, epsabs=1e-12,
                           epsrel=1e-13, limit=400 + int(hi * dist), full_output=1)
    if len(info) > 1 and err > 1e-9:
        raise NumericError("Laplacian quadrature did not converge", partial=val)
    out = pref * val
    return float(out.real)


def _batched_entries(fs, fr, breaks, dists):
    """Piecewise Gauss-Legendre of fs fr J_0(rho d) rho^3 for many distances."""
    dists = np.asarray(dists, dtype=float)
    out = np.zeros(dists.size)
    order = np.argsort(dists)
    ds = dists[order]
    res = np.zeros(ds.size)
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        for start in range(0, ds.size, 1024):
            dc = ds[start:start + 1024]
            nodes = int(48 + 0.5 * (hi - lo) * dc.max())
            x, w = np.polynomial.legendre.leggauss(nodes)
            rho = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * w * fs(rho) * fr(rho) * rho ** 3
            res[start:start + 1024] += bessel_j(0, dc[:, None] * rho[None, :]) @ w
    out[order] = res
    return out


@dataclass
class GalerkinMatrix:
    """Sparse symmetric Laplacian matrix indexed by ``atoms``."""

    atoms: list
    matrix: sp.csr_matrix
    cutoff: float
    max_dropped: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def export(self, path) -> None:
        """Coordinate text (row col value) plus ``<path>.json`` describing the atoms."""
        coo = sp.triu(self.matrix).tocoo()
        with open(path, "w") as fh:
            for i, j, v in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
                fh.write(f"{i} {j} {fmt(v)}\n")
        header = {
            "shape": list(self.shape),
            "storage": "upper-triangle, symmetric",
            "cutoff": self.cutoff,
            "max_dropped": self.max_dropped,
            "atoms": [{"index": i, "kind": a.kind, "j": a.j, "k": list(a.k), "t": a.t}
                      for i, a in enumerate(self.atoms)],
        }
        with open(str(path) + ".json", "w") as fh:
            json.dump(header, fh, indent=1)


def assemble_laplacian(spec: FrameSpec2D, atoms, cutoff: float = DEFAULT_CUTOFF) -> GalerkinMatrix:
    """Symmetric sparse Galerkin matrix; entries with |v| < cutoff are dropped.

    Each unordered pair is computed once (batched Gauss-Legendre per level
    pair, grouped by center distance) and mirrored.
    """
    atoms = list(atoms)
    n = len(atoms)
    for a in atoms:
        _radial_part(spec, a)
    groups: dict = {}
    for idx, a in enumerate(atoms):
        groups.setdefault((a.kind, a.j), []).append(idx)
    rows, cols, vals = [], [], []
    max_dropped = 0.0
    keys = sorted(groups)
    for gi, ka in enumerate(keys):
        for kb in keys[gi:]:
            ia = np.array(groups[ka])
            ib = np.array(groups[kb])
            fs, fr, lo, hi, breaks, pref, _ = _pair_setup(spec, atoms[ia[0]], atoms[ib[0]])
            if lo >= hi:
                continue
            ca = np.array([atoms[i].center for i in ia])
            cb = np.array([atoms[i].center for i in ib])
            # row blocks bound the memory of the pair arrays
            for start in range(0, ia.size, _ROW_BLOCK):
                A, B = np.meshgrid(np.arange(start, min(start + _ROW_BLOCK, ia.size)),
                                   np.arange(ib.size), indexing="ij")
                if ka == kb:
                    keep = A <= B
                    A, B = A[keep], B[keep]
                else:
                    A, B = A.ravel(), B.ravel()
                d = np.hypot(*(ca[A] - cb[B]).T)
                # one quadrature per distinct distance
                uniq, inv = np.unique(np.round(d, 12), return_inverse=True)
                v = (pref * _batched_entries(fs, fr, breaks, uniq)).real[inv]
                small = np.abs(v) < cutoff
                if np.any(small):
                    max_dropped = max(max_dropped, float(np.max(np.abs(v[small]))))
                r_idx, c_idx, v = ia[A[~small]], ib[B[~small]], v[~small]
                off = r_idx != c_idx
                rows.extend([r_idx, c_idx[off]])
                cols.extend([c_idx, r_idx[off]])
                vals.extend([v, v[off]])
    if rows:
        mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(n, n))
    else:
        mat = sp.csr_matrix((n, n))
    return GalerkinMatrix(atoms, mat, cutoff, max_dropped)
