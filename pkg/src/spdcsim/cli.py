"""
Command-line front end.

    spdcsim dispersion [--wavelength NM ...] [--zero-gvd] [--csv PATH]
    spdcsim design     [--pump NM] [--period UM]
    spdcsim spectrum   [--fwhm] [--mode quadratic|exact] [--csv PATH]
    spdcsim rates      [--closed] [--numeric]
    spdcsim correlate  [--grid-step NM] [--csv PATH] [--db]
    spdcsim franson    [--visibility V] [--seed N] [--csv PATH]
    spdcsim reproduce  [--out DIR]

Every subcommand accepts ``--scenario FILE``.  Exit codes: 0 success (or
all report rows PASS), 1 any report row FAIL, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import biphoton, dispersion, franson, multiplex, qpm
from .report import ReproduceError, run_reproduce
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _scenario(args):
    return load_scenario(args.scenario)


def _waveguide(sc):
    if sc.source.dispersion is not None:
        return sc.source.dispersion
    return dispersion.engineered_waveguide(
        degenerate_nm=sc.source.center_nm, period_um=sc.poling.period_um,
        gvd_fs2_per_mm=sc.source.gvd_fs2_per_mm,
    )


def cmd_dispersion(args):
    sc = _scenario(args)
    model = dispersion.bulk_lithium_niobate() if args.model == "bulk" else _waveguide(sc)
    wl = np.asarray(args.wavelength or [sc.source.center_nm], dtype=float)
    rows = [(x, model.n(x), dispersion.group_velocity(model, x), dispersion.gvd(model, x)) for x in wl]
    print(f"{'wavelength_nm':>14} {'n':>10} {'v_g_m_per_s':>14} {'gvd_fs2_per_mm':>15}")
    for x, n, vg, g in rows:
        print(f"{x:14.3f} {n:10.6f} {vg:14.6e} {g:15.4f}")
    if args.zero_gvd:
        print(f"zero-GVD wavelength: {dispersion.find_zero_gvd(model, tuple(args.bracket)):.2f} nm")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("wavelength_nm,n,group_velocity_m_per_s,gvd_fs2_per_mm\n")
            for row in rows:
                fh.write(",".join(f"{v:.10g}" for v in row) + "\n")
    return EXIT_OK


def cmd_design(args):
    sc = _scenario(args)
    wg = _waveguide(sc)
    pump = args.pump if args.pump is not None else sc.source.wl_pump_nm
    period = qpm.solve_poling_period(wg, wg, pump, m=sc.poling.order)
    print(f"poling period for {pump:.3f} nm -> {2 * pump:.3f} nm: {period:.5f} um")
    spec = qpm.PolingSpec(
        period_um=args.period if args.period is not None else sc.poling.period_um,
        duty_cycle=sc.poling.duty_cycle, length_mm=sc.poling.length_mm, order=sc.poling.order,
    )
    root = qpm.solve_degenerate_wavelength(wg, wg, spec, tuple(args.bracket))
    print(f"degenerate QPM fundamental for {spec.period_um:g} um: {root:.3f} nm")
    print(f"Fourier coefficient f_{spec.order} (D = {spec.duty_cycle:g}): "
          f"{qpm.fourier_coefficient(spec.order, spec.duty_cycle):.6f}")
    return EXIT_OK


def cmd_spectrum(args):
    sc = _scenario(args)
    p = sc.source
    if args.mode == "exact" and p.dispersion is None:
        p = p.with_(dispersion=_waveguide(sc), period_um=sc.poling.period_um)
    if args.fwhm:
        print(f"FWHM: {biphoton.fwhm(p, mode=args.mode):.2f} nm")
    if args.csv:
        wl = np.arange(args.start, args.stop + args.step / 2, args.step)
        biphoton.spectrum(p, wl, mode=args.mode).to_csv(args.csv)
        print(f"wrote {wl.size} points to {args.csv}")
    if not (args.fwhm or args.csv):
        print("nothing to do: give --fwhm and/or --csv", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def cmd_rates(args):
    sc = _scenario(args)
    p = sc.source
    show_closed = args.closed or not args.numeric
    closed = biphoton.pair_rate_closed(p) / p.power_mw
    if show_closed:
        print(f"closed form: {closed:.6e} Hz/mW")
    if args.numeric:
        numeric = biphoton.pair_rate_numeric(p, window=args.window) / p.power_mw
        print(f"quadrature:  {numeric:.6e} Hz/mW")
        if show_closed:
            print(f"ratio quadrature/closed: {numeric / closed:.8f}")
    return EXIT_OK


def cmd_correlate(args):
    sc = _scenario(args)
    p = sc.source
    ch = sc.channels
    kw = dict(width_nm=ch["width"], insertion_loss_db=ch["insertion_loss"], extinction_db=ch["extinction"])
    if args.grid_step is not None:
        bank_b, bank_c = multiplex.grid_banks(ch["center"], step_nm=args.grid_step, span_nm=args.span, **kw)
    else:
        bank_b, bank_c = sc.banks()
    edge = max(abs(np.concatenate([bank_b.centers, bank_c.centers]) - p.center_nm)) + 10
    w0 = dispersion.omega_from_wavelength(p.center_nm)
    nu_max = dispersion.omega_from_wavelength(p.center_nm - edge) - w0
    spec = biphoton.spectrum(p, np.linspace(-nu_max, nu_max, 2001), units="rad/s")
    floor = ch["accidental_floor"] if args.floor is None else args.floor
    mat = multiplex.jsi_matrix(spec, bank_b, bank_c, floor)
    adj, nonadj = multiplex.rejection_ratios(mat)
    print(f"{len(bank_b)}x{len(bank_c)} matrix, accidental floor {floor:g}")
    print(f"adjacent rejection:     {adj:.2f} dB")
    print(f"non-adjacent rejection: {nonadj:.2f} dB")
    if args.csv:
        mat.to_csv(args.csv, db=args.db)
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_franson(args):
    sc = _scenario(args)
    fr = sc.franson
    v = fr["visibility"] if args.visibility is None else args.visibility
    cfg0 = sc.franson_config(visibility=v)
    cfg = sc.franson_config(
        visibility=v, base_rate_hz=2 * fr["peak_counts"] / (1 + v) / cfg0.split_factor,
    )
    print(f"dT / T_c1 = {cfg.single_photon_margin:.1f}, T_c2 / dT = {cfg.pump_margin:.1f} "
          f"({'valid' if cfg.valid else 'NOT valid'} at margin {franson.VALIDITY_MARGIN:g})")
    phases = np.linspace(0, 2 * np.pi, int(fr["phase_points"]), endpoint=False)
    seed = sc.seed if args.seed is None else args.seed
    fit = franson.scan_and_fit(cfg, phases, 1.0, seed=seed)
    print(fit.summary(), end="")
    if args.csv:
        franson.write_scan_csv(args.csv, fit)
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_reproduce(args):
    sc = _scenario(args)
    out = args.out if args.out is not None else sc.output_dir
    report = run_reproduce(sc, out)
    print(report.to_text(), end="")
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser():
    ap = argparse.ArgumentParser(
        prog="spdcsim",
        description="Broadband SPDC source model: dispersion, QPM design, spectrum, rates, WDM and Franson.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="FILE", help="TOML scenario file (defaults when omitted)")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("dispersion", parents=[common], help="index, group velocity and GVD")
    p.add_argument("--model", choices=("waveguide", "bulk"), default="waveguide",
                   help="dispersion model (default: waveguide)")
    p.add_argument("--wavelength", type=float, nargs="+", metavar="NM",
                   help="evaluation wavelengths in nm (default: degenerate wavelength)")
    p.add_argument("--zero-gvd", action="store_true", help="also locate the zero-GVD wavelength")
    p.add_argument("--bracket", type=float, nargs=2, default=(1700.0, 2100.0), metavar=("LO", "HI"),
                   help="zero-GVD search bracket in nm (default: 1700 2100)")
    p.add_argument("--csv", metavar="PATH", help="write wavelength_nm,n,group_velocity_m_per_s,gvd_fs2_per_mm")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("design", parents=[common], help="poling period and degenerate QPM wavelength")
    p.add_argument("--pump", type=float, metavar="NM", help="pump wavelength in nm (default: scenario)")
    p.add_argument("--period", type=float, metavar="UM", help="poling period in um (default: scenario)")
    p.add_argument("--bracket", type=float, nargs=2, default=(1400.0, 1550.0), metavar=("LO", "HI"),
                   help="degenerate-wavelength search bracket in nm (default: 1400 1550)")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("spectrum", parents=[common], help="biphoton spectrum and its FWHM")
    p.add_argument("--fwhm", action="store_true", help="print the spectrum FWHM in nm")
    p.add_argument("--mode", choices=biphoton.MODES, default="quadratic",
                   help="phase mismatch: quadratic GVD expansion or exact dispersion (default: quadratic)")
    p.add_argument("--csv", metavar="PATH", help="write wavelength_nm,intensity")
    p.add_argument("--start", type=float, default=1200.0, help="CSV start wavelength, nm (default: 1200)")
    p.add_argument("--stop", type=float, default=1800.0, help="CSV stop wavelength, nm (default: 1800)")
    p.add_argument("--step", type=float, default=1.0, help="CSV wavelength step, nm (default: 1)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("rates", parents=[common], help="absolute pair rate in Hz/mW")
    p.add_argument("--closed", action="store_true", help="closed-form rate (default when no flag given)")
    p.add_argument("--numeric", action="store_true", help="rate by quadrature of |h|^2")
    p.add_argument("--window", type=float, default=20.0,
                   help="quadrature half-window in units of the first spectral zero (default: 20)")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("correlate", parents=[common], help="channelized coincidence (JSI) matrix")
    p.add_argument("--grid-step", type=float, metavar="NM",
                   help="sweep both banks on a uniform grid with this step in nm (default: 8-pair bank)")
    p.add_argument("--span", type=float, default=200.0, help="grid span in nm (default: 200)")
    p.add_argument("--floor", type=float, help="accidental floor relative to the peak (default: scenario)")
    p.add_argument("--csv", metavar="PATH", help="write the matrix, rows bank B, columns bank C (nm headers)")
    p.add_argument("--db", action="store_true", help="write the CSV in dB relative to the peak")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("franson", parents=[common], help="simulated Franson phase scan and visibility fit")
    p.add_argument("--visibility", type=float, help="injected visibility in [0, 1] (default: scenario)")
    p.add_argument("--seed", type=int, help="RNG seed (default: scenario seed)")
    p.add_argument("--csv", metavar="PATH", help="write phase_rad,counts,counts_err,fit_value")
    p.set_defaults(func=cmd_franson)

    p = sub.add_parser("reproduce", parents=[common], help="full pass/fail report with CSVs")
    p.add_argument("--out", metavar="DIR", help="output directory (default: scenario output_dir)")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"spdcsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReproduceError as exc:
        print(f"spdcsim: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError) as exc:
        print(f"spdcsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
