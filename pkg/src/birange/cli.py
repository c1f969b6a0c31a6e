"""Batch command-line entry points.

Every failure prints one machine-parsable line ``error: <code>: <message>``
to stderr and exits nonzero (1 internal/validation, 2 usage, 3 verification
rejected).  All randomized outputs honor ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time

import numpy as np

from .collision import (
    AxisGrid,
    BoundingBoxModel,
    TABLE_AXES,
    generate_table,
    read_table,
    slice_table,
    write_table,
)
from .config import ConfigError, FacilityConfig, load_config
from .dsp import (
    InstrumentModel,
    OfdmParams,
    SweepConfig,
    apply_channel,
    background_subtract,
    calibrate_rcs,
    deconvolve_antenna,
    extract_antenna_response,
    ofdm_channel_estimate,
    ofdm_modulate,
    range_doppler,
    synthesize_sweep,
    time_gate,
    to_impulse_response,
)
from .geometry import BistaticConstellation, MachineState
from .motion import verify_trajectory
from .records import C0
from .scattering import Scene, SphereTarget, mie_bistatic_rcs, scene_response, sphere_path_model
from .scenefile import load_scene
from .trajfile import load as load_trajectory


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = 1):
        self.code = code
        self.exit_code = exit_code
        super().__init__(message)


def _load_cfg(path) -> FacilityConfig:
    if path is None:
        path = os.environ.get("BIRANGE_CONFIG") or None
    if path is None:
        return FacilityConfig()
    try:
        return load_config(path)
    except (OSError, ConfigError) as e:
        raise CliError("config", str(e))


def _parse_range(text: str) -> np.ndarray:
    """'start:stop:step' or 'start:stop' (step 1) in degrees."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise CliError("usage", f"bad range {text!r}, expected start:stop[:step]", 2)
    start, stop = float(parts[0]), float(parts[1])
    step = float(parts[2]) if len(parts) == 3 else 1.0
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def cmd_table_build(args) -> int:
    cfg = _load_cfg(args.config)
    model = BoundingBoxModel.from_config(cfg)
    grids = {a: AxisGrid(cfg.limit(a)[0], cfg.limit(a)[1], args.step) for a in TABLE_AXES}
    t0 = time.time()

    def progress(i, n):
        if args.progress and (i % 10 == 0 or i == n):
            print(f"  azimuth slice {i}/{n}", file=sys.stderr)

    table = generate_table(model, cfg, grids, progress=progress)
    write_table(table, args.out)
    print(
        f"cells {table.n_cells} colliding_fraction {table.colliding_fraction:.4f} "
        f"build_s {time.time() - t0:.1f} out {args.out}"
    )
    return 0


def cmd_table_slice(args) -> int:
    table = read_table(args.table)
    mask = slice_table(table, args.az)
    sc = table.grids["static_coel"].values
    mc = table.grids["moving_coel"].values
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["static_coel\\moving_coel", *[f"{v:g}" for v in mc]])
        for i, sv in enumerate(sc):
            w.writerow([f"{sv:g}", *[int(x) for x in mask[i]]])
    print(f"slice at az {args.az:g}: colliding fraction {mask.mean():.4f} out {args.out}")
    return 0


def cmd_traj_verify(args) -> int:
    cfg = _load_cfg(args.config)
    table = read_table(args.table)
    traj = load_trajectory(args.traj, cfg)
    report = verify_trajectory(traj, table=table, mode=args.mode, cfg=cfg)
    sys.stdout.write(report.to_text())
    return 0 if report.accepted else 3


def _horizontal_constellation(beta_deg: float, radius: float) -> BistaticConstellation:
    return BistaticConstellation(
        phi_ill=beta_deg, theta_ill=90.0, phi_obs=0.0, theta_obs=90.0,
        r_ill=radius, r_obs=radius,
    )


def _pipeline_rcs(
    dut_scene: Scene,
    cal_scene: Scene,
    cal_radius: float,
    beta: float,
    sweep: SweepConfig,
    instrument: InstrumentModel,
    pol: str,
    gantry_radius: float,
    rng: np.random.Generator,
):
    """One angle of the calibrated-RCS chain; returns an RcsResult."""
    cons = _horizontal_constellation(beta, gantry_radius)
    s_dut = synthesize_sweep(dut_scene, cons, sweep, instrument, pol=pol, rng=rng)
    s_cal = synthesize_sweep(cal_scene, cons, sweep, instrument, pol=pol, rng=rng)
    s_bg = synthesize_sweep(None, cons, sweep, instrument, pol=pol, rng=rng)
    d = background_subtract(s_dut, s_bg)
    c = background_subtract(s_cal, s_bg)
    center = 2.0 * gantry_radius
    gate_width = 4.0
    d = time_gate(d, center, gate_width)
    c = time_gate(c, center, gate_width)
    sigma_cal, _ = mie_bistatic_rcs(cal_radius, d.freqs_hz, beta, pol)
    return calibrate_rcs(d, c, sigma_cal)


def cmd_sim_sphere_rcs(args) -> int:
    cfg = _load_cfg(args.config)
    rng = np.random.default_rng(args.seed)
    betas = _parse_range(args.cut)
    f_hz = args.f * 1e9
    band = [float(x) * 1e9 for x in args.band.split(":")]
    sweep = SweepConfig(band[0], band[1], args.fstep * 1e6)
    if not (band[0] <= f_hz <= band[1]):
        raise CliError("usage", "--f must lie inside --band", 2)
    gantry_radius = args.gantry_radius
    instrument = InstrumentModel.ideal() if args.ideal else InstrumentModel()
    dut_scene = Scene(targets=(SphereTarget((0, 0, 0), args.radius),))
    cal_scene = Scene(targets=(SphereTarget((0, 0, 0), args.cal_radius),))
    fi = int(np.argmin(np.abs(sweep.freqs_hz - f_hz)))

    rows = []
    for beta in betas:
        row = {"beta_deg": float(beta)}
        for pol in ("theta", "phi"):
            sigma, _ = mie_bistatic_rcs(args.radius, f_hz, float(beta), pol)
            row[f"analytic_{pol}_dbsm"] = 10 * math.log10(sigma)
            res = _pipeline_rcs(
                dut_scene, cal_scene, args.cal_radius, float(beta), sweep,
                instrument, pol, gantry_radius, rng,
            )
            row[f"recovered_{pol}_dbsm"] = float(res.sigma_dbsm[fi])
        rows.append(row)

    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"angles {len(rows)} f {args.f} GHz out {args.out}")
    return 0


def cmd_sim_sphere_impresp(args) -> int:
    rng = np.random.default_rng(args.seed)
    band = [float(x) * 1e9 for x in args.band.split(":")]
    sweep = SweepConfig(band[0], band[1], args.fstep * 1e6)
    betas = _parse_range(args.angles)
    R = args.gantry_radius
    scene = Scene(targets=(SphereTarget((0, 0, 0), args.radius),))
    instrument = InstrumentModel.ideal() if args.ideal else InstrumentModel()
    kernel = None
    if not args.ideal:
        thru = synthesize_sweep(None, _horizontal_constellation(180.0, R), sweep,
                                InstrumentModel(background_paths=((2 * R, 0.0),) + tuple(
                                    (2 * R + e, a) for e, a in InstrumentModel().echoes)),
                                rng=rng)
        kernel = extract_antenna_response(thru)

    spec, creep = sphere_path_model(betas, R, args.radius)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["angle_deg", "path_m", "magnitude_db", "specular_extra_m", "creeping_extra_m"])
        for bi, beta in enumerate(betas):
            cons = _horizontal_constellation(float(beta), R)
            rec = synthesize_sweep(scene, cons, sweep, instrument, rng=rng)
            if kernel is not None:
                rec = deconvolve_antenna(rec, kernel)
            ir = to_impulse_response(rec, window="hann", reference_offset_m=2 * R)
            rel = ir.path_rel_m
            order = np.argsort(rel)
            mag = ir.magnitude_db()[order]
            relo = rel[order]
            keep = np.abs(relo) <= args.window_m
            for pm, mg in zip(relo[keep], mag[keep]):
                w.writerow(
                    [f"{beta:g}", f"{pm:.6f}", f"{mg:.3f}", f"{spec[bi]:.6f}", f"{creep[bi]:.6f}"]
                )
    print(f"angles {len(betas)} band {args.band} GHz out {args.out}")
    return 0


def cmd_sim_udoppler(args) -> int:
    import os

    rng = np.random.default_rng(args.seed)
    scene = load_scene(args.scene)
    params = OfdmParams(
        n_subcarriers=args.subcarriers, cp_len=args.cp, sample_rate_hz=args.bw * 1e9,
        f_center_hz=args.fc * 1e9,
    )
    cons = _horizontal_constellation(args.beta, args.gantry_radius)
    pilots = np.exp(2j * math.pi * rng.random(params.n_subcarriers))
    m = args.slow
    cpi = args.cpi
    # one estimated excitation period per slow-time instant; the recording
    # between instants is decimated away (the scene is quasi-static over
    # the microsecond-scale period)
    rep = cpi / m
    if rep < params.period_s:
        raise CliError("usage", "--cpi too short for --slow at this symbol length", 2)
    os.makedirs(args.out, exist_ok=True)
    noise = 10 ** (args.noise_db / 20.0) if args.noise_db is not None else 0.0

    for frame in range(args.frames):
        t0 = frame * cpi
        recs = []
        ts = []
        for i in range(m):
            t = t0 + i * rep
            h = scene_response(scene, cons, params.freqs_hz(), t=t).values
            rx = apply_channel(pilots, h, params, rng=rng, noise_std=noise)
            est = ofdm_channel_estimate(pilots, rx, params, start_time_s=t)
            recs.append(est[0][1])
            ts.append(t)
        rd = range_doppler(recs, params.f_center_hz, cpi, timestamps_s=ts)
        path = os.path.join(args.out, f"frame_{frame:03d}.csv")
        _write_rd_csv(rd, path, reference_m=2 * args.gantry_radius)
    print(f"frames {args.frames} cpi_s {cpi:.4f} "
          f"pixel {rd.range_bin_m*100:.1f}cm x {rd.rate_bin_mps*100:.1f}cm/s out {args.out}")
    return 0


def _write_rd_csv(rd, path, reference_m=0.0):
    rel = rd.path_m - reference_m
    span = rd.path_m[-1] + rd.range_bin_m
    rel = (rel + span / 2) % span - span / 2
    order = np.argsort(rel)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"# range_bin_m {rd.range_bin_m!r} rate_bin_mps {rd.rate_bin_mps!r} "
                    f"timestamp_s {rd.timestamp_s!r}"])
        w.writerow(["path_m\\rate_mps", *[f"{v:.4f}" for v in rd.rate_mps]])
        for i in order:
            w.writerow([f"{rel[i]:.4f}", *[f"{20*np.log10(x + 1e-300):.2f}" for x in rd.magnitude[i]]])


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app, make_session

    cfg = _load_cfg(args.config)
    scenes = {}
    if args.scene:
        for item in args.scene:
            name, _, path = item.partition("=")
            if not path:
                raise CliError("usage", "--scene expects name=path", 2)
            scenes[name] = load_scene(path)
    session = make_session(cfg, table_path=args.table, scenes=scenes)
    app = build_app(session)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="birange", description=__doc__)
    p.add_argument("--seed", type=int, default=0, help="seed for noisy synthesis")
    sub = p.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("table", help="collision table operations").add_subparsers(
        dest="table_cmd", required=True
    )
    b = t.add_parser("build", help="generate a collision table")
    b.add_argument("--config", default=None)
    b.add_argument("--step", type=float, default=1.0)
    b.add_argument("--out", required=True)
    b.add_argument("--progress", action="store_true")
    b.set_defaults(fn=cmd_table_build)
    s = t.add_parser("slice", help="export a 2-D slice at one azimuth")
    s.add_argument("--table", required=True)
    s.add_argument("--az", type=float, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_table_slice)

    tr = sub.add_parser("traj", help="trajectory operations").add_subparsers(
        dest="traj_cmd", required=True
    )
    v = tr.add_parser("verify", help="verify a trajectory file")
    v.add_argument("--config", default=None)
    v.add_argument("--table", required=True)
    v.add_argument("--traj", required=True)
    v.add_argument("--mode", choices=("stepped", "continuous"), default="stepped")
    v.set_defaults(fn=cmd_traj_verify)

    sim = sub.add_parser("sim", help="measurement simulations").add_subparsers(
        dest="sim_cmd", required=True
    )
    r = sim.add_parser("sphere-rcs", help="analytic vs pipeline-recovered sphere RCS")
    r.add_argument("--config", default=None)
    r.add_argument("--radius", type=float, default=0.15)
    r.add_argument("--cal-radius", type=float, default=0.05)
    r.add_argument("--f", type=float, default=6.0, help="display frequency, GHz")
    r.add_argument("--band", default="2:18", help="sweep band GHz, start:stop")
    r.add_argument("--fstep", type=float, default=10.0, help="frequency step, MHz")
    r.add_argument("--cut", default="0:180:5", help="bistatic angle range deg")
    r.add_argument("--gantry-radius", type=float, default=2.9)
    r.add_argument("--ideal", action="store_true", help="disable instrument echoes")
    r.add_argument("--out", required=True)
    r.set_defaults(fn=cmd_sim_sphere_rcs)

    ii = sim.add_parser("sphere-impresp", help="impulse response vs bistatic angle")
    ii.add_argument("--band", default="2:18", help="GHz start:stop")
    ii.add_argument("--fstep", type=float, default=10.0, help="MHz")
    ii.add_argument("--angles", default="10:243:3")
    ii.add_argument("--radius", type=float, default=0.1524)
    ii.add_argument("--gantry-radius", type=float, default=2.9)
    ii.add_argument("--window-m", type=float, default=0.5)
    ii.add_argument("--ideal", action="store_true")
    ii.add_argument("--out", required=True)
    ii.set_defaults(fn=cmd_sim_sphere_impresp)

    u = sim.add_parser("udoppler", help="range/range-rate maps of a moving scene")
    u.add_argument("--scene", required=True)
    u.add_argument("--frames", type=int, default=3)
    u.add_argument("--fc", type=float, default=12.0, help="carrier GHz")
    u.add_argument("--bw", type=float, default=2.0, help="bandwidth GHz")
    u.add_argument("--subcarriers", type=int, default=256)
    u.add_argument("--cp", type=int, default=64)
    u.add_argument("--slow", type=int, default=64, help="slow-time records per frame")
    u.add_argument("--cpi", type=float, default=0.1, help="coherent processing interval, s")
    u.add_argument("--beta", type=float, default=10.0)
    u.add_argument("--gantry-radius", type=float, default=2.9)
    u.add_argument("--noise-db", type=float, default=None)
    u.add_argument("--out", required=True)
    u.set_defaults(fn=cmd_sim_udoppler)

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--config", default=None)
    sv.add_argument("--table", default=None)
    sv.add_argument("--scene", action="append", help="name=path, repeatable")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.set_defaults(fn=cmd_serve)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e.code}: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
