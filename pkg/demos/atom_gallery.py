"""Render every orientation of the default 2D frame in space and frequency.

Writes one PGM per atom (spatial real part and frequency magnitude) and a
CSV of the radial profiles h_0..h_6, into the directory given as the first
argument (default ``demo_out``).
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from polarlets.formats import write_csv, write_pgm
from polarlets.frame2d import FrameAtom2D, FrameSpec2D, psi_hat_2d, psi_spatial_2d, radial_profile_hn_closed


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    spec = FrameSpec2D.default()
    ax = np.linspace(-3.0, 3.0, 193)
    x = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1)
    fa = np.linspace(-2 * np.pi * 2 ** spec.j_max, 2 * np.pi * 2 ** spec.j_max, 193)
    xi = np.stack(np.meshgrid(fa, fa, indexing="ij"), -1)
    for j in spec.levels:
        for t in range(spec.orientations(j)):
            atom = FrameAtom2D(j, (0, 0), t)
            space = psi_spatial_2d(spec, atom, x).real
            freq = np.abs(psi_hat_2d(spec, atom, xi))
            lim = np.max(np.abs(space))
            write_pgm(out / f"atom_j{j}_t{t}_space.pgm", 0.5 + 0.5 * space / lim, vmax=1.0)
            write_pgm(out / f"atom_j{j}_t{t}_freq.pgm", freq, vmax=float(freq.max()))
    r = np.arange(0.0, 16.0 + 1e-9, 0.05)
    profiles = np.array([radial_profile_hn_closed(n, r).real for n in range(7)])
    write_csv(out / "profiles.csv", ["r"] + [f"h{n}" for n in range(7)],
              [[ri, *profiles[:, i]] for i, ri in enumerate(r)])
    print(f"wrote {len(list(out.glob('*.pgm')))} images and profiles.csv to {out}")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out"))
