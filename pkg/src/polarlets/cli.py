"""Command-line entry point: ``polarlets <subcommand> [options]``.

Every subcommand writes its artifacts into ``--out-dir`` and a JSON (or
key=value) report. Options may also come from ``--config file.json`` whose
keys are the long option names (dashes or underscores); unknown keys are a
configuration error. Explicit command-line flags win over the config file.

Exit codes: 0 success, 1 check failed, 2 configuration error, 3 numeric
error, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__
from .errors import DataError, DomainError, NumericError
from .formats import fmt, read_pgm, read_samples_csv, read_volume, write_csv, write_pgm, \
    write_samples_csv, write_volume
from .frame2d import FrameAtom2D, FrameSpec2D, psi_hat_2d, psi_spatial_2d, radial_profile_hn_closed
from .frame3d import FrameAtom3D, FrameSpec3D, psi_hat_3d, psi_spatial_3d
from .windows import AdmissibilityReport, RadialWindow, check_calderon

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DATA = 0, 1, 2, 3, 4

log = logging.getLogger("polarlets")


class ConfigError(Exception):
    """Invalid command-line or config-file input (exit code 2)."""


class CheckFailed(Exception):
    """A verification ran to completion and did not pass (exit code 1)."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _versions() -> dict:
    return {"polarlets": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _write_json_report(args, name: str, payload: dict) -> Path:
    path = Path(args.report) if args.report else Path(args.out_dir) / f"{name}_report.json"
    inputs = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    body = {"command": args.command, "inputs": inputs, "versions": _versions(), **payload}
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")
    log.info("report: %s", path)
    return path


def _out(args, name: str) -> Path:
    return Path(args.out_dir) / name


def _load_spec(path, dimension: int | None = None, check: bool = True):
    """Frame spec from a JSON file; ``None`` gives the default 2D (or 3D) frame."""
    if path is None:
        return FrameSpec3D.default(check=check) if dimension == 3 else FrameSpec2D.default(check=check)
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"spec {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"spec {path} must hold a JSON object")
    dim = data.get("dimension", 2)
    if dimension is not None and dim != dimension:
        raise ConfigError(f"spec {path} is {dim}D; this command needs {dimension}D")
    try:
        cls = FrameSpec3D if dim == 3 else FrameSpec2D
        return cls.from_dict(data, check=check)
    except DomainError as exc:
        raise ConfigError(f"spec {path}: {exc}") from None
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"spec {path}: malformed ({exc!r})") from None


def _int_list(text, what: str, length: int | None = None):
    try:
        vals = [int(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"{what} must be comma-separated integers, got {text!r}") from None
    if length is not None and len(vals) != length:
        raise ConfigError(f"{what} needs {length} integers, got {text!r}")
    return vals


def _float_list(text, what: str):
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"{what} must be comma-separated numbers, got {text!r}") from None


def _pow2_spacing(h: float) -> float:
    m = -math.log2(h) if h > 0 else float("nan")
    if not math.isfinite(m) or abs(m - round(m)) > 1e-12:
        raise ConfigError(f"spacing must be a power of two, got {h}")
    return float(h)


def _centered_axis(n: int, h: float) -> np.ndarray:
    return (np.arange(n) - n // 2) * h


# ---------------------------------------------------------------------------
# calderon / frame-check
# ---------------------------------------------------------------------------

def cmd_calderon(args) -> int:
    radial = RadialWindow()
    j_min, j_max = args.j_min, args.j_max
    if args.spec:
        spec = _load_spec(args.spec, check=False)
        radial, j_min, j_max = spec.radial, spec.j_min, spec.j_max
    if j_max < j_min:
        raise ConfigError("--j-max must be >= --j-min")
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    cover = 2.0 ** j_max * 0.5 * math.pi
    levels = j_max - j_min + 1
    grid = np.geomspace(cover * 2.0 ** -(levels + 2), cover, args.points)
    t0 = time.perf_counter()
    dev = check_calderon(radial, j_min, j_max, grid)
    elapsed = time.perf_counter() - t0
    passed = dev < args.tol
    rep = AdmissibilityReport(max_calderon_deviation=dev, passed=passed)
    path = Path(args.report) if args.report else _out(args, "calderon_report.txt")
    head = [f"j_min={j_min}", f"j_max={j_max}", f"points={args.points}",
            f"grid_min={fmt(grid[0])}", f"grid_max={fmt(grid[-1])}", f"tolerance={fmt(args.tol)}",
            f"seconds={fmt(elapsed)}"]
    path.write_text("\n".join(head) + "\n" + rep.to_lines())
    log.info("calderon: max deviation %.3e (%s)", dev, "pass" if passed else "FAIL")
    if not passed:
        raise CheckFailed(f"partition of unity deviates by {dev:.3e}")
    return EXIT_OK


def cmd_frame_check(args) -> int:
    spec = _load_spec(args.spec, check=False)
    rep = spec.admissibility(args.points)
    path = Path(args.report) if args.report else _out(args, "frame_check_report.txt")
    path.write_text(f"dimension={spec.dimension}\nlevels={len(spec.angular)}\n" + rep.to_lines())
    log.info("frame-check: %s", "pass" if rep.passed else "FAIL")
    if not rep.passed:
        raise CheckFailed("frame spec is not admissible")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval-atom
# ---------------------------------------------------------------------------

def _atom_from_args(spec, args):
    dim = spec.dimension
    k = _int_list(args.k, "--k", dim) if args.k is not None else [0] * dim
    j = spec.j_min if args.j is None else args.j
    cls = FrameAtom3D if dim == 3 else FrameAtom2D
    try:
        atom = cls(j, tuple(k), args.t, args.kind)
        spec.validate_atom(atom)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return atom


def _dump_plane(path_csv, path_pgm, ax0, ax1, names, values):
    """CSV rows (a, b, re, im) for a 2D array plus a |value| PGM (rows = second axis)."""
    A, B = np.meshgrid(ax0, ax1, indexing="ij")
    rows = zip(A.ravel(), B.ravel(), values.real.ravel(), values.imag.ravel())
    write_csv(path_csv, [*names, "re", "im"], rows)
    write_pgm(path_pgm, np.abs(values).T)


def cmd_eval_atom(args) -> int:
    t0 = time.perf_counter()
    files = []
    if args.mode == "profile":
        if args.n_max < 0 or args.r_max <= 0 or args.r_step <= 0:
            raise ConfigError("profile mode needs n_max >= 0, r_max > 0, r_step > 0")
        r = np.arange(0.0, args.r_max + 0.5 * args.r_step, args.r_step)
        cols = [radial_profile_hn_closed(n, r).real for n in range(args.n_max + 1)]
        path = _out(args, "profiles.csv")
        write_csv(path, ["r", *[f"h{n}" for n in range(args.n_max + 1)]],
                  zip(r, *cols))
        files.append(path)
        payload = {"rows": int(r.size)}
    else:
        dim = 3 if args.mode == "atom3d" else 2
        spec = _load_spec(args.spec, dim)
        atom = _atom_from_args(spec, args)
        n = args.grid or (64 if dim == 3 else 512)
        if n < 8:
            raise ConfigError("--grid must be at least 8")
        h = _pow2_spacing(args.spacing) if args.spacing else 2.0 ** (-atom.j - 4)
        c = atom.center
        ax = [c[0] + _centered_axis(n, h), c[1] + _centered_axis(n, h)]
        dxi = 2.0 * 2.0 ** atom.j * math.pi * 1.25 / n
        fx = _centered_axis(n, dxi)
        X, Y = np.meshgrid(*ax, indexing="ij")
        FX, FY = np.meshgrid(fx, fx, indexing="ij")
        if dim == 2:
            space = psi_spatial_2d(spec, atom, np.stack([X, Y], -1))
            freq = psi_hat_2d(spec, atom, np.stack([FX, FY], -1))
        else:
            space = psi_spatial_3d(spec, atom, np.stack([X, Y, np.full_like(X, c[2])], -1))
            freq = psi_hat_3d(spec, atom, np.stack([FX, FY, np.zeros_like(FX)], -1))
        tag = "atom3d_slice" if dim == 3 else "atom"
        names = [(f"{tag}_spatial.csv", f"{tag}_spatial.pgm", ax[0], ax[1], ["x", "y"], space),
                 (f"{tag}_frequency.csv", f"{tag}_frequency.pgm", fx, fx, ["xi_x", "xi_y"], freq)]
        for csv_name, pgm_name, a0, a1, cols, vals in names:
            _dump_plane(_out(args, csv_name), _out(args, pgm_name), a0, a1, cols, vals)
            files += [_out(args, csv_name), _out(args, pgm_name)]
        payload = {"atom": {"kind": atom.kind, "j": atom.j, "k": list(atom.k), "t": atom.t},
                   "grid": n, "spacing": h, "frequency_step": dxi,
                   "max_abs_spatial": float(np.abs(space).max()),
                   "max_abs_frequency": float(np.abs(freq).max())}
    payload.update({"files": [str(f) for f in files], "timings": {"total": time.perf_counter() - t0}})
    _write_json_report(args, "eval_atom", payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# transform / taps
# ---------------------------------------------------------------------------

def cmd_transform(args) -> int:
    from .transform import GridSignal, analyze, bandlimit, random_bandlimited, synthesize, \
        write_coefficients_csv, write_pwlc

    spec = _load_spec(args.spec, 2)
    h = _pow2_spacing(args.spacing) if args.spacing else 2.0 ** -spec.j_max
    timings = {}
    t0 = time.perf_counter()
    if args.input:
        img = read_pgm(args.input)
        f = GridSignal(img, h)
    else:
        n = args.random_size
        f = random_bandlimited(spec, (n, n), h, np.random.default_rng(args.seed))
    timings["load"] = time.perf_counter() - t0
    # the frame is tight only on the covered disk; analyze the projection onto it
    raw_norm = f.norm()
    f = bandlimit(spec, f)
    t0 = time.perf_counter()
    c = analyze(spec, f)
    timings["analyze"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    g = synthesize(spec, c, real=True)
    timings["synthesize"] = time.perf_counter() - t0
    target = f
    norm_t = target.norm()
    rel = float(np.sqrt(np.sum((g.values - target.values) ** 2)) * h / max(norm_t, 1e-300))
    parseval = c.energy() / max(norm_t ** 2, 1e-300)
    out_c = Path(args.out_coeffs) if args.out_coeffs else _out(args, "coefficients.pwlc")
    write_pwlc(out_c, c)
    if args.out_csv:
        write_coefficients_csv(args.out_csv, c)
    out_img = Path(args.out_image) if args.out_image else _out(args, "roundtrip.pgm")
    write_pgm(out_img, g.values, vmax=1.0 if args.input else float(np.max(np.abs(g.values))))
    passed = rel <= args.tol and abs(parseval - 1.0) <= args.tol
    _write_json_report(args, "transform", {
        "shape": list(f.shape), "spacing": h, "coefficients": len(c),
        "parseval_ratio": parseval, "roundtrip_rel_l2": rel,
        "bandlimited_fraction": norm_t / max(raw_norm, 1e-300),
        "passed": passed, "files": [str(out_c), str(out_img)], "timings": timings})
    log.info("transform: parseval %.15f, round-trip rel-L2 %.3e", parseval, rel)
    if not passed:
        raise CheckFailed(f"round trip rel-L2 {rel:.3e}, Parseval ratio {parseval:.15f}")
    return EXIT_OK


def tap_fft_oracle(spec: FrameSpec2D, j: int, radius: int, grid: int = 1024):
    """Dense inner products <psi_{j,0,t}, phi_{j+1,k}> for |k_x|, |k_y| <= radius.

    Atoms are rendered by inverse FFT on a ``grid``^2 periodic grid with the
    level j+1 lattice spacing; one FFT correlation per orientation gives all
    shifts at once. Returns {(kind, t): array indexed [kx + radius, ky + radius]}.
    """
    from .transform import render_atom

    h = 2.0 ** (-j - 1)
    geom = ((grid, grid), h, (-0.5 * grid * h,) * 2)
    # a frame whose lowpass sits at level j+1 supplies phi_{j+1}
    fine = FrameSpec2D(spec.angular[j + 1 - spec.j_min:], spec.radial, j + 1, check=False)
    phi = render_atom(fine, FrameAtom2D(j + 1, (0, 0), 0, "scaling"), geom).values
    coarse = FrameSpec2D(spec.angular[j - spec.j_min:], spec.radial, j, check=False)
    Phi = np.conj(np.fft.fft2(phi))
    shifts = np.arange(-radius, radius + 1)
    out = {}
    bands = [("scaling", 0)] + [("wavelet", t) for t in range(spec.orientations(j))]
    for kind, t in bands:
        psi = render_atom(coarse, FrameAtom2D(j, (0, 0), t, kind), geom).values
        # C[s] = sum_x psi(x + s) conj phi(x); <psi, phi_k> = h^2 C[-k]
        corr = np.fft.ifft2(np.fft.fft2(psi) * Phi) * h * h
        out[(kind, t)] = corr[np.ix_(-shifts % grid, -shifts % grid)]
    return out


def cmd_taps(args) -> int:
    from .transform import filter_tap_alpha, filter_tap_beta

    spec = _load_spec(args.spec, 2)
    j = spec.j_min if args.j is None else args.j
    if j not in spec.levels or j + 1 not in spec.levels:
        raise ConfigError(f"levels {j} and {j + 1} must both be in the frame")
    if args.radius < 0:
        raise ConfigError("--radius must be non-negative")
    t0 = time.perf_counter()
    R = args.radius
    rows, taps = [], {}
    for kx in range(-R, R + 1):
        for ky in range(-R, R + 1):
            a = filter_tap_alpha(spec, j, (kx, ky))
            taps[("scaling", 0, kx, ky)] = a
            rows.append(["alpha", 0, kx, ky, a, 0.0])
            for t in range(spec.orientations(j)):
                b = filter_tap_beta(spec, j, (kx, ky), t)
                taps[("wavelet", t, kx, ky)] = b
                rows.append(["beta", t, kx, ky, b.real, b.imag])
    timings = {"quadrature": time.perf_counter() - t0}
    out = Path(args.out) if args.out else _out(args, "taps.csv")
    write_csv(out, ["filter", "t", "kx", "ky", "re", "im"], rows)
    payload = {"j": j, "radius": R, "taps": len(rows), "files": [str(out)]}
    passed = True
    if args.verify:
        t0 = time.perf_counter()
        oracle = tap_fft_oracle(spec, j, R, args.grid)
        diff = max(abs(taps[(kind, t, kx, ky)] - oracle[(kind, t)][kx + R, ky + R])
                   for (kind, t, kx, ky) in taps)
        timings["oracle"] = time.perf_counter() - t0
        passed = bool(diff <= args.tol)
        payload.update({"oracle_grid": args.grid, "max_abs_difference": diff, "passed": passed})
        log.info("taps: max |quadrature - FFT| = %.3e", diff)
    payload["timings"] = timings
    _write_json_report(args, "taps", payload)
    if not passed:
        raise CheckFailed("filter taps disagree with the FFT oracle")
    return EXIT_OK


# ---------------------------------------------------------------------------
# laplacian
# ---------------------------------------------------------------------------

def _isotropic_atoms(spec: FrameSpec2D, box: float, count: int | None, rng):
    atoms = []
    for kind, j, t in spec.bands():
        s = 2.0 ** j
        ks = np.arange(math.ceil(-box * s), math.floor(box * s) + 1)
        atoms.extend(FrameAtom2D(j, (int(a), int(b)), t, kind) for a in ks for b in ks)
    if count is not None and count < len(atoms):
        pick = np.sort(rng.choice(len(atoms), size=count, replace=False))
        atoms = [atoms[i] for i in pick]
    return atoms


def cmd_laplacian(args) -> int:
    from .operators import assemble_laplacian

    spec = _load_spec(args.spec, 2) if args.spec else FrameSpec2D.isotropic(args.levels)
    if any(not spec.window(j).is_isotropic for j in spec.levels):
        raise ConfigError("the Laplacian needs a frame whose levels are all isotropic")
    if args.box <= 0:
        raise ConfigError("--box must be positive")
    rng = np.random.default_rng(args.seed)
    atoms = _isotropic_atoms(spec, args.box, None if args.atoms <= 0 else args.atoms, rng)
    t0 = time.perf_counter()
    G = assemble_laplacian(spec, atoms, args.cutoff)
    timings = {"assemble": time.perf_counter() - t0}
    out = Path(args.out) if args.out else _out(args, "laplacian.txt")
    G.export(out)
    dense = G.to_dense()
    asym = float(np.max(np.abs(dense - dense.T))) if dense.size else 0.0
    eig = np.linalg.eigvalsh(0.5 * (dense + dense.T)) if dense.size else np.zeros(1)
    passed = float(eig.max()) <= args.tol and asym == 0.0
    _write_json_report(args, "laplacian", {
        "atoms": len(atoms), "nonzeros": int(G.matrix.nnz), "cutoff": args.cutoff,
        "max_dropped": G.max_dropped, "max_eigenvalue": float(eig.max()),
        "min_eigenvalue": float(eig.min()), "max_asymmetry": asym, "passed": passed,
        "files": [str(out), str(out) + ".json"], "timings": timings})
    log.info("laplacian: %d atoms, %d nonzeros, max eigenvalue %.3e", len(atoms), G.matrix.nnz, eig.max())
    if not passed:
        raise CheckFailed(f"largest eigenvalue {eig.max():.3e} exceeds {args.tol:g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct-scattered
# ---------------------------------------------------------------------------

def cmd_reconstruct(args) -> int:
    from .reconstruct import Circle, Rectangle, SampleSet, SupportPredictor, run_ball_experiment
    from .transform import synthesize, write_pwlc

    if args.spec:
        spec = _load_spec(args.spec, 2)
    else:
        bands = _int_list(args.levels, "--levels")
        if not bands:
            raise ConfigError("--levels needs at least one angular band")
        try:
            spec = FrameSpec2D.default(tuple(bands))
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
    directional = [j for j in spec.levels if not spec.window(j).is_isotropic]
    widths = _float_list(args.bands, "--bands")
    if len(widths) == 1:
        widths = widths * len(directional)
    if len(widths) != len(directional):
        raise ConfigError(f"--bands needs 1 or {len(directional)} values")
    if any(w < 0 for w in widths):
        raise ConfigError("--bands must be non-negative")
    pred = SupportPredictor(Circle(), {j: w * 2.0 ** -j for j, w in zip(directional, widths)},
                            {j: math.pi / spec.orientations(j) for j in directional}, Rectangle())
    samples = None
    if args.samples_in:
        pos, vals = read_samples_csv(args.samples_in)
        samples = SampleSet(pos, vals)
    if args.samples_uniform < 1 or args.samples_boundary < 1:
        raise ConfigError("sample counts must be positive")
    if args.jitter_sigma <= 0 or args.sigma <= 0:
        raise ConfigError("--jitter-sigma and --sigma must be positive")
    res = run_ball_experiment(spec, args.samples_uniform, args.samples_boundary, args.jitter_sigma,
                              args.sigma, args.lam, args.seed, grid=args.grid,
                              ridge_factor=args.ridge_factor, predictor=pred, samples=samples)
    coeffs, samples = res.pop("coefficients"), res.pop("samples")
    files = []
    out_c = Path(args.out_coeffs) if args.out_coeffs else _out(args, "reconstruction.pwlc")
    write_pwlc(out_c, coeffs)
    files.append(out_c)
    out_img = Path(args.out_image) if args.out_image else _out(args, "reconstruction.pgm")
    n = args.grid
    geom = ((n, n), 8.0 / n, (-4.0, -4.0))
    img = synthesize(spec, coeffs, geom, real=True).values
    write_pgm(out_img, img.T, vmax=1.0)
    files.append(out_img)
    if args.samples_out:
        write_samples_csv(args.samples_out, samples.positions, samples.values)
        files.append(Path(args.samples_out))
    passed = res["masked_linf"] <= args.tol
    res.update({"passed": passed, "tolerance": args.tol, "files": [str(f) for f in files]})
    _write_json_report(args, "reconstruct", res)
    log.info("reconstruct: %d samples, %d active atoms, masked Linf %.4f",
             res["samples_total"], res["active_atoms"], res["masked_linf"])
    if not passed:
        raise CheckFailed(f"masked Linf {res['masked_linf']:.4f} exceeds {args.tol:g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# manifold-eval
# ---------------------------------------------------------------------------

def cmd_manifold(args) -> int:
    from .manifold import (VolumeExpansion, eval_on_mesh, load_obj, make_phantom, plane_mesh,
                           trilinear_oracle, write_obj, write_vertex_values_csv)
    from .transform import GridSignal, analyze, read_pwlc, write_pwlc

    timings = {}
    files = []
    t0 = time.perf_counter()
    if args.volume:
        values, side = read_volume(args.volume)
        spec = _load_spec(args.spec, 3) if args.spec else None
        if spec is None:
            if "frame" not in side:
                raise ConfigError("volume sidecar has no 'frame' entry; pass --spec")
            try:
                spec = FrameSpec3D.from_dict(side["frame"])
            except (DomainError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"sidecar frame spec: {exc}") from None
        try:
            signal = GridSignal(values, float(side["spacing"]), tuple(side["origin"]))
        except (KeyError, TypeError) as exc:
            raise DataError(f"volume sidecar lacks spacing/origin ({exc})") from None
        phantom = None
    else:
        spec = _load_spec(args.spec, 3) if args.spec else FrameSpec3D.isotropic(2)
        try:
            phantom = make_phantom(resolution=args.resolution)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        signal = phantom.signal
        vol_path = _out(args, "phantom.f32")
        write_volume(vol_path, signal.values, signal.spacing, signal.origin,
                     {"phantom": phantom.params, "frame": spec.to_dict()})
        files += [vol_path, Path(str(vol_path) + ".json")]
    timings["volume"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if args.coeffs:
        c = read_pwlc(args.coeffs, spec)
        c.geometry = signal.geometry()
    else:
        c = analyze(spec, signal)
        out_c = _out(args, "phantom.pwlc")
        write_pwlc(out_c, c)
        files.append(out_c)
    timings["analyze"] = time.perf_counter() - t0
    if args.mesh:
        try:
            mesh = load_obj(args.mesh)
        except DomainError as exc:
            raise DataError(str(exc)) from None
    else:
        half = args.slice_size / 2
        mesh = plane_mesh([-half, args.slice_offset, -half], [args.slice_size, 0, 0],
                          [0, 0, args.slice_size], args.slice_vertices, args.slice_vertices)
        mesh_path = _out(args, "slice.obj")
        write_obj(mesh_path, mesh)
        files.append(mesh_path)
    exp = VolumeExpansion(spec, c)
    t0 = time.perf_counter()
    vals = eval_on_mesh(exp, mesh)
    timings["evaluate"] = time.perf_counter() - t0
    out_csv = _out(args, "vertex_values.csv")
    write_vertex_values_csv(out_csv, mesh, vals)
    out_obj = _out(args, "mesh_values.obj")
    write_obj(out_obj, mesh, np.real(vals))
    files += [out_csv, out_obj]
    outside = int(np.count_nonzero(np.isnan(vals)))
    payload = {"vertices": len(mesh.vertices), "faces": len(mesh.faces), "outside_domain": outside,
               "mesh": mesh.record(), "atoms": len(c)}
    passed = True
    if args.verify:
        t0 = time.perf_counter()
        ref = trilinear_oracle(exp, mesh.vertices)
        ok = ~np.isnan(ref) & ~np.isnan(vals)
        diff = float(np.max(np.abs(vals[ok] - ref[ok]))) if np.any(ok) else 0.0
        timings["oracle"] = time.perf_counter() - t0
        passed = bool(diff <= args.tol)
        payload.update({"max_abs_vs_trilinear": diff, "tolerance": args.tol, "passed": passed})
        if phantom is not None:
            payload["max_abs_vs_smoothed_phantom"] = float(
                np.max(np.abs(vals[ok] - phantom.smoothed(mesh.vertices[ok]))))
        log.info("manifold: max |direct - trilinear| = %.3e", diff)
    payload.update({"files": [str(f) for f in files], "timings": timings})
    _write_json_report(args, "manifold", payload)
    if not passed:
        raise CheckFailed("mesh values disagree with the interpolation oracle")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option values")
    common.add_argument("--out-dir", default=".", help="directory for artifacts")
    common.add_argument("--report", help="report path (default inside --out-dir)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="cap on BLAS/FFT worker threads")
    common.add_argument("-q", "--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="polarlets", description="Polar wavelet frames toolkit")
    p.add_argument("--version", action="version", version=f"polarlets {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    s = sub.add_parser("calderon", parents=[common], help="radial partition-of-unity check")
    s.add_argument("--spec")
    s.add_argument("--j-min", type=int, default=0)
    s.add_argument("--j-max", type=int, default=4)
    s.add_argument("--points", type=int, default=4096)
    s.add_argument("--tol", type=float, default=1e-14)
    s.set_defaults(func=cmd_calderon)

    s = sub.add_parser("frame-check", parents=[common], help="full admissibility of a frame spec")
    s.add_argument("--spec")
    s.add_argument("--points", type=int, default=4096)
    s.set_defaults(func=cmd_frame_check)

    s = sub.add_parser("eval-atom", parents=[common], help="dump one atom in space and frequency")
    s.add_argument("--mode", choices=["atom", "profile", "atom3d"], default="atom")
    s.add_argument("--spec")
    s.add_argument("--j", type=int)
    s.add_argument("--k", help="lattice index, e.g. 0,0")
    s.add_argument("--t", type=int, default=0)
    s.add_argument("--kind", choices=["wavelet", "scaling"], default="wavelet")
    s.add_argument("--grid", type=int)
    s.add_argument("--spacing", type=float)
    s.add_argument("--n-max", type=int, default=6)
    s.add_argument("--r-max", type=float, default=16.0)
    s.add_argument("--r-step", type=float, default=0.05)
    s.set_defaults(func=cmd_eval_atom)

    s = sub.add_parser("transform", parents=[common], help="analysis/synthesis round trip")
    s.add_argument("--spec")
    s.add_argument("--input", help="PGM image (default: random band-limited signal)")
    s.add_argument("--random-size", type=int, default=128)
    s.add_argument("--spacing", type=float)
    s.add_argument("--out-coeffs")
    s.add_argument("--out-csv")
    s.add_argument("--out-image")
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("taps", parents=[common], help="inter-level filter taps")
    s.add_argument("--spec")
    s.add_argument("--j", type=int)
    s.add_argument("--radius", type=int, default=8)
    s.add_argument("--out")
    s.add_argument("--verify", action="store_true", help="compare with dense FFT inner products")
    s.add_argument("--grid", type=int, default=1024)
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_taps)

    s = sub.add_parser("laplacian", parents=[common], help="Galerkin matrix of the Laplacian")
    s.add_argument("--spec")
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--atoms", type=int, default=100, help="random subset size (0 = all in box)")
    s.add_argument("--box", type=float, default=2.0, help="centers lie in [-box, box]^2")
    s.add_argument("--cutoff", type=float, default=1e-10)
    s.add_argument("--out")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_laplacian)

    s = sub.add_parser("reconstruct-scattered", parents=[common],
                       help="disk reconstruction from scattered samples")
    s.add_argument("--spec")
    s.add_argument("--levels", default="0,2,4", help="angular band per level")
    s.add_argument("--bands", default="3", help="distance band per directional level, lattice units")
    s.add_argument("--samples-uniform", type=int, default=3072)
    s.add_argument("--samples-boundary", type=int, default=1024)
    s.add_argument("--jitter-sigma", type=float, default=0.25)
    s.add_argument("--sigma", type=float, default=0.25, help="edge smoothing of the disk")
    s.add_argument("--lambda", dest="lam", type=float, default=None, help="explicit ridge")
    s.add_argument("--ridge-factor", type=float, default=1e-5)
    s.add_argument("--grid", type=int, default=256)
    s.add_argument("--samples-in")
    s.add_argument("--samples-out")
    s.add_argument("--out-coeffs")
    s.add_argument("--out-image")
    s.add_argument("--tol", type=float, default=0.05)
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("manifold-eval", parents=[common], help="evaluate a 3D expansion on a mesh")
    s.add_argument("--spec")
    s.add_argument("--volume", help="raw float32 volume with JSON sidecar")
    s.add_argument("--coeffs", help="PWLC container for the volume's frame")
    s.add_argument("--mesh", help="OBJ mesh (default: generated planar slice)")
    s.add_argument("--resolution", type=int, default=64)
    s.add_argument("--slice-size", type=float, default=8.0)
    s.add_argument("--slice-offset", type=float, default=0.2)
    s.add_argument("--slice-vertices", type=int, default=33)
    s.add_argument("--verify", action="store_true")
    s.add_argument("--tol", type=float, default=0.02)
    s.set_defaults(func=cmd_manifold)
    p.subcommands = sub.choices
    return p


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` (unknown keys rejected)."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    if cfg.pop("command", args.command) != args.command:
        raise ConfigError("config is for a different subcommand")
    sub = parser.subcommands[args.command]
    dests = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    if "lam" in dests:
        dests["lambda"] = dests["lam"]
    unknown = sorted(set(cfg) - set(dests))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    defaults = {}
    for key, value in cfg.items():
        action = dests[key]
        if value is not None and action.type is not None:
            try:
                value = action.type(value)
            except (TypeError, ValueError):
                raise ConfigError(f"config key {key!r}: bad value {value!r}") from None
        if action.choices is not None and value not in action.choices:
            raise ConfigError(f"config key {key!r} must be one of {list(action.choices)}")
        defaults[action.dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    except ConfigError as exc:
        print(f"polarlets: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="polarlets: %(message)s", stream=sys.stderr, force=True)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"polarlets: config error: output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("polarlets: config error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except CheckFailed as exc:
        print(f"polarlets: check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (ConfigError, DomainError) as exc:
        print(f"polarlets: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"polarlets: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"polarlets: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
