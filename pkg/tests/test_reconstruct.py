from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import qmc

from polarlets.errors import DomainError, NumericError
from polarlets.frame2d import FrameAtom2D, FrameSpec2D, psi_spatial_2d
from polarlets.reconstruct import (
    Circle,
    Rectangle,
    SampleSet,
    SupportPredictor,
    boundary_samples,
    build_system,
    default_lambda,
    dense_atoms,
    disk_image,
    halton_samples,
    predict_support,
    reconstruction_error,
    smoothed_disk,
    solve_system,
    support_similarity,
)
from polarlets.transform import CoefficientSet, analyze, synthesize

SPEC = FrameSpec2D.default()
UNIT = Rectangle((0.0, 0.0), (1.0, 1.0))


def test_halton_first_points():
    p = halton_samples(3, UNIT)
    np.testing.assert_allclose(p, [[0.5, 1 / 3], [0.25, 2 / 3], [0.75, 1 / 9]], atol=1e-15)


def test_halton_is_deterministic_and_in_domain():
    a, b = halton_samples(500), halton_samples(500)
    assert np.array_equal(a, b)
    assert np.all(Rectangle().contains(a))


def test_halton_discrepancy_beats_random():
    p = halton_samples(1024, UNIT)
    rnd = np.random.default_rng(0).random((1024, 2))
    assert qmc.discrepancy(p) < 0.1 * qmc.discrepancy(rnd)


def test_boundary_jitter_vanishes():
    c = Circle((0.5, -0.25), 1.5)
    p = boundary_samples(200, c, 1e-12, seed=1)
    assert np.max(c.distance(p)) < 1e-11


def test_boundary_jitter_half_normal_mean():
    c, sigma = Circle(), 0.2
    d = c.distance(boundary_samples(20000, c, sigma, seed=2))
    assert abs(d.mean() - sigma * math.sqrt(2 / math.pi)) < 0.1 * sigma * math.sqrt(2 / math.pi)


def test_boundary_sample_errors():
    with pytest.raises(DomainError):
        boundary_samples(0, Circle(), 0.1)
    with pytest.raises(DomainError):
        boundary_samples(10, Circle(), 0.0)


def test_geometry_errors():
    with pytest.raises(DomainError):
        Rectangle((0, 0), (0, 1))
    with pytest.raises(DomainError):
        Circle(radius=0.0)
    with pytest.raises(DomainError):
        SampleSet(np.zeros((3, 2)), np.zeros(2))


def test_smoothed_disk_limits():
    c = Circle()
    assert smoothed_disk([[0.0, 0.0]], c, 0.25)[0] == pytest.approx(1.0, abs=1e-12)
    assert smoothed_disk([[4.0, 4.0]], c, 0.25)[0] == pytest.approx(0.0, abs=1e-12)
    # sharp limit
    assert smoothed_disk([[2.4, 0.0]], c, 1e-4)[0] == pytest.approx(1.0)
    assert smoothed_disk([[2.6, 0.0]], c, 1e-4)[0] == pytest.approx(0.0)


def test_smoothed_disk_matches_monte_carlo():
    rng = np.random.default_rng(3)
    x = np.array([2.3, 0.7])
    z = x + 0.25 * rng.standard_normal((400000, 2))
    mc = np.mean(np.hypot(z[:, 0], z[:, 1]) <= 2.5)
    assert smoothed_disk(x, Circle(), 0.25) == pytest.approx(mc, abs=4e-3)


def test_zero_bands_keep_only_coarse_atoms():
    bands = {j: 0.0 for j in SPEC.levels if not SPEC.window(j).is_isotropic}
    pred = SupportPredictor(Circle(), bands, {})
    active = predict_support(SPEC, pred)
    coarse = [a for a in dense_atoms(SPEC) if a.kind == "scaling" or SPEC.window(a.j).is_isotropic]
    # a zero band can only hit centers exactly on the circle
    extra = [a for a in active if a not in set(coarse)]
    assert all(abs(Circle().distance(np.array(a.center))) < 1e-12 for a in extra)
    assert set(coarse) <= set(active)


def test_predicted_atoms_respect_band_and_orientation():
    pred = SupportPredictor.default(SPEC)
    for a in predict_support(SPEC, pred):
        if a.kind == "scaling" or SPEC.window(a.j).is_isotropic:
            continue
        assert pred.boundary.distance(np.array(a.center)) <= pred.distance_band[a.j] + 1e-12


def test_orientation_tolerance_validated():
    j = next(j for j in SPEC.levels if not SPEC.window(j).is_isotropic)
    bad = SupportPredictor(Circle(), {j: 1.0}, {j: 2 * math.pi})
    with pytest.raises(DomainError):
        predict_support(SPEC, bad)
    with pytest.raises(DomainError):
        predict_support(SPEC, SupportPredictor(Circle(), {j: -1.0}, {}))


def test_empty_active_set():
    samples = SampleSet(halton_samples(10), np.ones(10))
    system = build_system(SPEC, [], samples)
    assert system.shape == (10, 0)
    assert len(solve_system(SPEC, system)) == 0


def test_system_entry_is_atom_value():
    a = FrameAtom2D(0, (1, -2), 0, "scaling")
    x = np.array(a.center)
    system = build_system(SPEC, [a], SampleSet(x[None, :], [0.0]))
    assert system.matrix[0, 0] == pytest.approx(psi_spatial_2d(SPEC, a, x[None, :])[0].real, rel=1e-12)


def _small_problem(seed=0, n_atoms=30, n_samples=200):
    rng = np.random.default_rng(seed)
    atoms = [FrameAtom2D(0, (int(a), int(b)), 0, "scaling") for a, b in rng.integers(-3, 4, (60, 2))]
    atoms = list(dict.fromkeys(atoms))[:n_atoms]
    dom = Rectangle((-3.5, -3.5), (3.5, 3.5))
    x = halton_samples(n_samples, dom)
    return atoms, x, rng


def test_inverse_crime_recovers_coefficients():
    atoms, x, rng = _small_problem()
    c = rng.standard_normal(len(atoms))
    from polarlets.frame2d import atom_matrix_2d
    b = (atom_matrix_2d(SPEC, atoms, x) @ c).real
    sol = solve_system(SPEC, build_system(SPEC, atoms, SampleSet(x, b)))
    got = np.array([sol[a] for a in atoms]).real
    np.testing.assert_allclose(got, c, atol=1e-8)


def test_zero_rhs_gives_zero_solution():
    atoms, x, _ = _small_problem(1)
    for lam in (0.0, 1e-6):
        sol = solve_system(SPEC, build_system(SPEC, atoms, SampleSet(x, np.zeros(len(x))), lam))
        assert all(sol[a] == 0 for a in atoms)


@pytest.mark.parametrize("lam", [1e-10, 1e-4, 1.0])
def test_ridge_matches_augmented_least_squares(lam):
    atoms, x, rng = _small_problem(2)
    b = rng.standard_normal(len(x))
    system = build_system(SPEC, atoms, SampleSet(x, b), lam)
    K = system.matrix
    aug = np.vstack([K, math.sqrt(lam) * np.eye(K.shape[1])])
    ref = np.linalg.lstsq(aug, np.concatenate([b, np.zeros(K.shape[1])]), rcond=None)[0]
    sol = solve_system(SPEC, system)
    got = np.array([sol[a] for a in atoms]).real
    assert np.linalg.norm(K @ got - K @ ref) <= 1e-6 * np.linalg.norm(b)


def test_rank_deficiency_detected():
    atoms, x, _ = _small_problem(3)
    atoms = atoms + [atoms[0]]
    system = build_system(SPEC, atoms, SampleSet(x, np.ones(len(x))))
    with pytest.raises(NumericError):
        solve_system(SPEC, system)


def test_underdetermined_requires_ridge():
    atoms, x, _ = _small_problem(4, n_samples=10)
    with pytest.warns(UserWarning):
        system = build_system(SPEC, atoms, SampleSet(x, np.ones(10)))
    with pytest.raises(NumericError):
        solve_system(SPEC, system)
    system.lam = default_lambda(system.matrix)
    solve_system(SPEC, system)


def test_negative_ridge_rejected():
    with pytest.raises(DomainError):
        build_system(SPEC, [], SampleSet(np.zeros((1, 2)), [0.0]), -1.0)


@settings(max_examples=20)
@given(st.floats(1e-3, 1e3))
def test_default_lambda_scales_quadratically(s):
    K = np.random.default_rng(5).standard_normal((20, 7))
    assert default_lambda(s * K) == pytest.approx(s * s * default_lambda(K), rel=1e-12)


@pytest.fixture(scope="module")
def reference():
    return disk_image(64)


def test_error_of_projection_is_zero(reference):
    dense = analyze(SPEC, reference)
    err = reconstruction_error(SPEC, dense, reference)
    assert err["masked_linf"] < 1e-10
    assert err["raw_linf"] < 1e-1


def test_error_of_empty_expansion(reference):
    err = reconstruction_error(SPEC, CoefficientSet.from_mapping(SPEC, {}), reference)
    assert err["raw_rel_l2"] == pytest.approx(1.0)
    assert err["raw_linf"] == pytest.approx(np.max(reference.values))


def test_similarity_of_thresholded_support_is_perfect(reference):
    from polarlets.reconstruct import threshold_support
    dense = analyze(SPEC, reference)
    counts = {j: 40 for j in SPEC.levels if not SPEC.window(j).is_isotropic}
    top = threshold_support(dense, counts)
    sim = support_similarity(SPEC, top, dense)
    assert sim["jaccard"] == 1.0 and sim["recall_top_decile"] == 1.0
