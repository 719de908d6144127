"""Polar wavelet frames in two and three dimensions.

Submodules
----------
specfun      Bessel, Gamma, regularized 1F2, spherical harmonics, Lebedev grids.
windows      Radial and angular windows and admissibility checks.
frame2d      2D atoms in frequency and space (closed-form radial profiles).
frame3d      3D atoms in frequency and space.
transform    FFT analysis/synthesis, filter taps, coefficient containers.
operators    Galerkin matrix of the Laplacian on isotropic atoms.
reconstruct  Scattered-sample reconstruction with predicted support.
manifold     Evaluation of 3D expansions on mesh vertices.
cli          Command-line entry point.
"""

from __future__ import annotations

from .errors import DataError, DomainError, NumericError, PolarletError
from .frame2d import FrameAtom2D, FrameSpec2D, psi_hat_2d, psi_spatial_2d
from .frame3d import FrameAtom3D, FrameSpec3D, psi_hat_3d, psi_spatial_3d
from .transform import CoefficientSet, GridSignal, analyze, synthesize
from .windows import AdmissibilityReport, AngularWindow2D, AngularWindow3D, RadialWindow

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport",
    "AngularWindow2D",
    "AngularWindow3D",
    "CoefficientSet",
    "DataError",
    "DomainError",
    "FrameAtom2D",
    "FrameAtom3D",
    "FrameSpec2D",
    "FrameSpec3D",
    "GridSignal",
    "NumericError",
    "PolarletError",
    "RadialWindow",
    "analyze",
    "psi_hat_2d",
    "psi_hat_3d",
    "psi_spatial_2d",
    "psi_spatial_3d",
    "synthesize",
    "__version__",
]
