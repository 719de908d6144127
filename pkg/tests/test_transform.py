from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarlets.errors import DataError, DomainError
from polarlets.frame2d import FrameAtom2D, FrameSpec2D, psi_hat_2d, psi_spatial_2d
from polarlets.transform import (
    CoefficientSet,
    GridSignal,
    analyze,
    bandlimit,
    filter_tap_alpha,
    filter_tap_beta,
    random_bandlimited,
    read_pwlc,
    render_atom,
    synthesize,
    write_coefficients_csv,
    write_pwlc,
)
from polarlets.windows import AngularWindow2D

from oracles import central, lattice_inner_products

SPEC = FrameSpec2D.default()
H = 2.0 ** -SPEC.j_max


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_zero_signal_gives_zero_coefficients():
    c = analyze(SPEC, GridSignal.zeros((32, 32), H))
    assert c.energy() == 0.0
    assert np.all(synthesize(SPEC, c).values == 0)


@pytest.mark.parametrize("seed", range(3))
def test_parseval_and_round_trip(seed):
    f = random_bandlimited(SPEC, (128, 128), H, np.random.default_rng(seed))
    c = analyze(SPEC, f)
    assert abs(c.energy() / f.norm() ** 2 - 1) < 1e-10
    g = synthesize(SPEC, c)
    assert _rel(g.values, f.values) < 1e-10


def test_analysis_is_idempotent_through_synthesis(rng):
    f = random_bandlimited(SPEC, (64, 64), H, rng)
    c = analyze(SPEC, f)
    c2 = analyze(SPEC, synthesize(SPEC, c))
    _, v1 = c.vector()
    _, v2 = c2.vector()
    assert np.max(np.abs(v1 - v2)) < 1e-6 * np.max(np.abs(v1))


def test_single_atom_energy_concentrates():
    atom = FrameAtom2D(1, (3, -2), 2)
    f = render_atom(SPEC, atom, ((128, 128), H, (-16.0, -16.0)))
    c = analyze(SPEC, f)
    assert abs(c.energy() - f.norm() ** 2) < 1e-6
    atoms, vals = c.vector()
    assert atoms[int(np.argmax(np.abs(vals)))] == atom


@pytest.mark.parametrize("atom", [FrameAtom2D(0, (0, 0), 0, "scaling"), FrameAtom2D(0, (0, 0)),
                                  FrameAtom2D(2, (0, 0), 3)], ids=str)
def test_unit_coefficient_renders_the_atom(atom):
    h = 2.0 ** -atom.j
    g = render_atom(SPEC, atom, ((512, 512), h, (-256 * h, -256 * h)))
    pts = g.points()
    mask = central(pts, 128 * h)
    assert np.max(np.abs(g.values[mask] - psi_spatial_2d(SPEC, atom, pts[mask]))) < 1e-6


def test_grid_validation():
    with pytest.raises(DomainError):
        GridSignal(np.zeros((12, 16)))
    with pytest.raises(DomainError):
        GridSignal(np.zeros((4, 4)))
    with pytest.raises(DomainError):
        GridSignal(np.full((8, 8), np.nan))
    with pytest.raises(DomainError):
        GridSignal(np.zeros((8, 8)), spacing=0.3)
    with pytest.raises(DomainError):
        analyze(SPEC, GridSignal.zeros((32, 32), 0.5))


def test_spec_mismatch():
    c = analyze(SPEC, GridSignal.zeros((32, 32), H))
    with pytest.raises(DomainError):
        synthesize(FrameSpec2D.isotropic(3), c)


def _gaussians(points, angle=0.0):
    rot = np.array([[math.cos(angle), math.sin(angle)], [-math.sin(angle), math.cos(angle)]])
    y = points @ rot.T          # R^-1 x
    out = np.zeros(points.shape[:-1])
    for (cx, cy), sx, sy, a in [((1.0, 0.5), 1.6, 2.4, 1.0), ((-2.0, 1.5), 2.0, 1.5, -0.7),
                                ((0.5, -2.5), 1.5, 1.5, 0.4)]:
        out += a * np.exp(-((y[..., 0] - cx) / sx) ** 2 / 2 - ((y[..., 1] - cy) / sy) ** 2 / 2)
    return out


@pytest.mark.parametrize("j", [1, 2])
def test_steering_of_coefficients(j):
    grid = GridSignal.zeros((128, 128), H)
    pts = grid.points()
    m = SPEC.orientations(j)
    f = grid.with_values(_gaussians(pts))
    scale = 1.0 / f.norm()
    c = analyze(SPEC, f.with_values(scale * f.values))
    c_rot = analyze(SPEC, grid.with_values(scale * _gaussians(pts, 2 * math.pi / m)))
    a = np.array([c[FrameAtom2D(j, (0, 0), t)] for t in range(m)])
    b = np.array([c_rot[FrameAtom2D(j, (0, 0), t)] for t in range(m)])
    # unit-norm input; rotating by one orientation step shifts t by one
    assert np.max(np.abs(b - np.roll(a, -1))) < 1e-3
    assert np.max(np.abs(b - a)) > 1e-2 * np.max(np.abs(a))


# --- filter taps ------------------------------------------------------------

@pytest.mark.parametrize("t", [0, 3])
def test_beta_taps_match_lattice_oracle(t):
    j = 1
    aux = FrameSpec2D(SPEC.angular[j + 1 - SPEC.j_min:], j_min=j + 1, check=False)
    ks = [(0, 0), (1, 0), (2, -3), (-5, 4), (8, 0), (0, -7)]
    shifts = [2.0 ** (-j - 1) * np.array(k) for k in ks]
    oracle = lattice_inner_products(
        lambda xi: psi_hat_2d(SPEC, FrameAtom2D(j, (0, 0), t), xi),
        lambda xi: psi_hat_2d(aux, FrameAtom2D(j + 1, (0, 0), 0, "scaling"), xi),
        shifts, 1024, 2.0 ** (-j - 1))
    taps = np.array([filter_tap_beta(SPEC, j, k, t) for k in ks])
    assert np.max(np.abs(taps - oracle)) < 1e-6


def test_alpha_taps_match_lattice_oracle():
    j = 0
    aux = FrameSpec2D(SPEC.angular[1:], j_min=1, check=False)
    ks = [(0, 0), (1, 1), (3, -4), (8, 0)]
    oracle = lattice_inner_products(
        lambda xi: psi_hat_2d(SPEC, FrameAtom2D(0, (0, 0), 0, "scaling"), xi),
        lambda xi: psi_hat_2d(aux, FrameAtom2D(1, (0, 0), 0, "scaling"), xi),
        [0.5 * np.array(k) for k in ks], 1024, 0.5)
    taps = np.array([filter_tap_alpha(SPEC, j, k) for k in ks])
    assert np.max(np.abs(taps - oracle)) < 1e-6


def test_isotropic_tap_at_origin_is_real():
    assert filter_tap_beta(SPEC, 0, (0, 0), 0).imag == 0.0


@given(st.integers(-8, 8), st.integers(-8, 8), st.integers(0, 4))
@settings(max_examples=25)
def test_even_window_taps_symmetric_in_k(kx, ky, t):
    assert abs(filter_tap_beta(SPEC, 1, (kx, ky), t) - filter_tap_beta(SPEC, 1, (-kx, -ky), t)) < 1e-15


def test_odd_harmonic_taps_flip_sign():
    odd = AngularWindow2D((1,), (1.0,), 1)
    spec = FrameSpec2D((odd, AngularWindow2D.isotropic()), check=False)
    for k in [(1, 0), (2, 3), (-4, 1)]:
        a = filter_tap_beta(spec, 0, k, 0)
        b = filter_tap_beta(spec, 0, (-k[0], -k[1]), 0)
        assert abs(a + b) < 1e-15 and abs(a) > 1e-6


def test_alpha_radial_symmetry_and_decay():
    assert filter_tap_alpha(SPEC, 0, (3, 4)) == pytest.approx(filter_tap_alpha(SPEC, 0, (5, 0)), abs=1e-16)
    assert filter_tap_alpha(SPEC, 0, (0, -5)) == pytest.approx(filter_tap_alpha(SPEC, 0, (5, 0)), abs=1e-16)
    assert abs(filter_tap_alpha(SPEC, 0, (8, 0))) < abs(filter_tap_alpha(SPEC, 0, (1, 0)))


def test_taps_need_adjacent_levels():
    with pytest.raises(DomainError):
        filter_tap_beta(SPEC, 2, (0, 0), 0)


# --- coefficient containers --------------------------------------------------

def test_coefficient_set_algebra(rng):
    f = random_bandlimited(SPEC, (32, 32), H, rng)
    c = analyze(SPEC, f)
    d = 2.0 * c + c
    _, v = c.vector()
    _, w = d.vector()
    np.testing.assert_allclose(w, 3 * v)
    with pytest.raises(KeyError):
        c[FrameAtom2D(0, (1000, 0))]


def test_pwlc_round_trip(tmp_path, rng):
    c = analyze(SPEC, random_bandlimited(SPEC, (32, 32), H, rng))
    write_pwlc(tmp_path / "c.pwlc", c)
    back = read_pwlc(tmp_path / "c.pwlc", SPEC)
    atoms, vals = c.vector()
    assert len(back) == len(atoms)
    assert all(back[a] == v for a, v in zip(atoms, vals))


def test_pwlc_errors(tmp_path, rng):
    c = CoefficientSet.from_mapping(SPEC, {FrameAtom2D(1, (2, 3), 4): 1 + 2j})
    p = tmp_path / "c.pwlc"
    write_pwlc(p, c)
    with pytest.raises(DataError):
        read_pwlc(p, FrameSpec2D.isotropic(3))
    raw = p.read_bytes()
    (tmp_path / "m.pwlc").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(DataError):
        read_pwlc(tmp_path / "m.pwlc", SPEC)
    (tmp_path / "t.pwlc").write_bytes(raw[:-3])
    with pytest.raises(DataError):
        read_pwlc(tmp_path / "t.pwlc", SPEC)
    with pytest.raises(DataError):
        read_pwlc(tmp_path / "missing.pwlc", SPEC)


def test_coefficient_csv(tmp_path):
    c = CoefficientSet.from_mapping(SPEC, {FrameAtom2D(1, (2, 3), 4): 1 + 2j})
    write_coefficients_csv(tmp_path / "c.csv", c)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines == ["kind,j,kx,ky,t,re,im", "wavelet,1,2,3,4,1,2"]


def test_bandlimit_is_a_projection(rng):
    f = GridSignal(rng.normal(size=(32, 32)), H)
    g = bandlimit(SPEC, f)
    assert _rel(bandlimit(SPEC, g).values, g.values) < 1e-14
