"""Independent reference computations shared by the test modules."""

from __future__ import annotations

import math

import numpy as np


def ifft_atom_2d(hat_fn, n: int, h: float):
    """Inverse FT of a frequency-domain function sampled on an n x n DFT grid.

    Returns (points, values) on the centered spatial grid with spacing h.
    Uses psi(x) = (1/2pi) int psi_hat(xi) e^{i xi.x} dxi; the result is the
    periodization of psi with period n h.
    """
    origin = -0.5 * n * h
    f = 2.0 * math.pi * np.fft.fftfreq(n, h)
    xi = np.stack(np.meshgrid(f, f, indexing="ij"), -1)
    hat = hat_fn(xi) * np.exp(1j * origin * (xi[..., 0] + xi[..., 1]))
    vals = np.fft.ifft2(hat) * n * n * (2.0 * math.pi / (n * h)) ** 2 / (2.0 * math.pi)
    ax = origin + h * np.arange(n)
    return np.stack(np.meshgrid(ax, ax, indexing="ij"), -1), vals


def ifft_atom_3d(hat_fn, n: int, h: float):
    """3D analogue of :func:`ifft_atom_2d` with the (2 pi)^(-3/2) convention."""
    origin = -0.5 * n * h
    f = 2.0 * math.pi * np.fft.fftfreq(n, h)
    xi = np.stack(np.meshgrid(f, f, f, indexing="ij"), -1)
    hat = hat_fn(xi) * np.exp(1j * origin * xi.sum(-1))
    vals = np.fft.ifftn(hat) * n ** 3 * (2.0 * math.pi / (n * h)) ** 3 / (2.0 * math.pi) ** 1.5
    ax = origin + h * np.arange(n)
    return np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1), vals


def central(points, half_width):
    return np.max(np.abs(points), axis=-1) <= half_width


def lattice_inner_products(hat_a, hat_b0, shifts, n: int, h: float):
    """<a, b_k> = int hat_a conj(hat_b_k) dxi by a Riemann sum on the n x n DFT lattice.

    ``hat_b0`` is the unshifted second function; ``shifts`` are spatial
    displacements d with hat_b_d(xi) = hat_b0(xi) e^{-i xi.d}.
    """
    f = 2.0 * math.pi * np.fft.fftfreq(n, h)
    xi = np.stack(np.meshgrid(f, f, indexing="ij"), -1)
    prod = hat_a(xi) * np.conj(hat_b0(xi))
    live = prod != 0
    p, x = prod[live], xi[live]
    dxi2 = (2.0 * math.pi / (n * h)) ** 2
    shifts = np.asarray(shifts, dtype=float).reshape(-1, 2)
    return np.array([np.sum(p * np.exp(1j * (x @ d))) * dxi2 for d in shifts])


def lattice_correlation(hat_a, hat_b0, n: int, h: float, radius: int):
    """:func:`lattice_inner_products` for every shift h m, |m_x|, |m_y| <= radius, via one FFT.

    On the DFT lattice xi.(h m) = 2 pi q.m / n, so the Riemann sum over all
    lattice shifts is n^2 ifft2(prod). Returns an array indexed [m_x + radius, m_y + radius].
    """
    f = 2.0 * math.pi * np.fft.fftfreq(n, h)
    xi = np.stack(np.meshgrid(f, f, indexing="ij"), -1)
    prod = hat_a(xi) * np.conj(hat_b0(xi))
    corr = np.fft.ifft2(prod) * n * n * (2.0 * math.pi / (n * h)) ** 2
    m = np.arange(-radius, radius + 1) % n
    return corr[np.ix_(m, m)]


def laplacian_lattice_oracle(spec, pairs, k_max: int = 8192):
    """<Delta psi_s, psi_r> for isotropic 2D atom pairs as dense lattice sums.

    The Parseval integral of -|xi|^2 psi_hat_s conj(psi_hat_r) is replaced by
    its Riemann sum on the lattice xi = (2 pi / P) m, which is exactly what a
    DFT of period P computes; its error is the periodization of the spatial
    correlation at distance P. The product W_s W_r is radial and vanishes
    beyond 2^min(j) pi, so the sum is taken over one quadrant with
    k_max + 1 nodes per axis and evaluated at arbitrary displacements d as
    c_x^T G c_y with c = w_m cos(xi_m d).
    """
    out = np.empty(len(pairs))
    groups: dict = {}
    for i, (s, r) in enumerate(pairs):
        key = tuple(sorted([(s.kind, s.j), (r.kind, r.j)]))
        groups.setdefault(key, []).append(i)

    def window(kind, j, rho):
        if kind == "scaling":
            return spec.radial.ghat(rho * 2.0 ** -j)
        return spec.window(j).beta[0].real * spec.radial.hhat(rho * 2.0 ** -j)

    m = np.arange(k_max + 1)
    weights = np.where(m == 0, 1.0, 2.0)
    for (ka, kb), idx in groups.items():
        top = 2.0 ** min(ka[1], kb[1]) * math.pi
        dxi = top / k_max
        xi = dxi * m
        rho = np.hypot(xi[:, None], xi[None, :])
        g = -(rho ** 2) * window(*ka, rho) * window(*kb, rho)
        del rho
        g *= 2.0 ** -(ka[1] + kb[1]) / (2.0 * math.pi) ** 2 * dxi * dxi
        g *= weights[:, None] * weights[None, :]
        for i in idx:
            s, r = pairs[i]
            d = s.center - r.center
            out[i] = np.cos(xi * d[0]) @ (g @ np.cos(xi * d[1]))
        del g
    return out
