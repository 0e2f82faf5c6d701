"""Command-line front end.

Subcommands: synth, distort, metrics, evaluate, theorem-check, run.
Exit status is 0 on success, 1 with a diagnostic on stderr for data or
bound-check failures, 2 for usage errors (argparse).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .codebook import (
    amp_gain_map,
    directional_codebook,
    enh_phase_codebook,
    gain_map,
)
from .distortion import DistortionSpec, apply_distortion, gen_distortion
from .experiment import (
    config_from_yaml,
    default_config,
    resolve_workers,
    run_experiment,
)
from .fields import ArrayConfig, synth_freespace_field
from .fileio import (
    _fmt,
    read_field_file,
    write_distortion_file,
    write_field_file,
    write_gain_map_csv,
)
from .link import theorem_trials
from .metrics import cdf_summary, coverage_stats, loss_samples, pair_phase_diff, phase_mixing, roi_mask
from .sphere import make_grid


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _cmd_synth(args) -> int:
    grid = make_grid(args.theta_step, args.phi_step)
    config = ArrayConfig(
        n_antennas=args.n_antennas,
        element_spacing=args.spacing,
        boresight_theta=args.boresight_theta,
        boresight_phi=args.boresight_phi,
        element_exponent=args.exponent,
        peak_element_gain_db=args.peak_gain,
    )
    field = synth_freespace_field(config, grid)
    write_field_file(field, args.out)
    print(f"wrote {field.n_antennas}-antenna field on {grid.n_theta}x{grid.n_phi} grid to {args.out}")
    return 0


def _scenario_spec(args) -> DistortionSpec:
    if args.scenario is not None:
        config = config_from_yaml(args.config) if args.config else default_config()
        if args.scenario not in config.scenarios:
            raise ValueError(
                f"scenario {args.scenario!r} not found; available: "
                f"{', '.join(config.scenarios)}"
            )
        spec = config.scenarios[args.scenario]
    else:
        spec = DistortionSpec(
            mode=args.mode,
            phase_std_deg=args.phase_std,
            amp_std_db=args.amp_std,
            corr_length_deg=args.corr_length,
        )
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    return spec


def _cmd_distort(args) -> int:
    field = read_field_file(args.field)
    spec = _scenario_spec(args)
    dist = gen_distortion(spec, field.grid, field.n_antennas)
    blocked = apply_distortion(field, dist)
    write_field_file(blocked, args.out)
    if args.dist_out:
        write_distortion_file(dist, args.dist_out)
    print(f"wrote blocked field to {args.out} (mode={spec.mode}, seed={spec.seed})")
    return 0


def _cmd_metrics(args) -> int:
    free = read_field_file(args.free)
    blocked = read_field_file(args.blocked)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    coverage = coverage_stats(free, blocked, args.g1, args.g2)
    with (out / "coverage.csv").open("w", newline="") as fh:
        fh.write("antenna,max_free_gain_db,max_blocked_gain_db,roi_area_pct\n")
        for row in coverage:
            fh.write(
                f"{row.antenna},{_fmt(row.max_free_gain_db)},"
                f"{_fmt(row.max_blocked_gain_db)},{_fmt(row.roi_area_pct)}\n"
            )
    summary_lines = []
    for i in range(free.n_antennas):
        roi = roi_mask(free, blocked, i, args.g1, args.g2)
        losses = loss_samples(free, blocked, i, roi)
        s = cdf_summary(losses, args.percentiles)
        with (out / f"cdf_loss_antenna{i}.csv").open("w", newline="") as fh:
            fh.write("percentile,value_db\n")
            for p, v in s.percentiles:
                fh.write(f"{_fmt(p)},{_fmt(v)}\n")
        summary_lines.append(
            f"antenna {i}: roi={100 * roi.area_fraction:.1f}% "
            f"median_loss={dict(s.percentiles).get(50.0, s.mean):.2f} dB"
        )
    for i in range(free.n_antennas - 1):
        mix_f = phase_mixing(pair_phase_diff(free, i, i + 1))
        mix_b = phase_mixing(pair_phase_diff(blocked, i, i + 1))
        summary_lines.append(
            f"pair {i}-{i + 1}: phase mixing free={mix_f:.1f} blocked={mix_b:.1f} deg/5deg"
        )
    print("\n".join(summary_lines))
    print(f"wrote metrics tables to {out}")
    return 0


def _cmd_evaluate(args) -> int:
    field = read_field_file(args.field)
    n = field.n_antennas
    if args.scheme == "mrc":
        gmap = gain_map("mrc", field)
    elif args.scheme == "directional":
        gmap = gain_map(directional_codebook(n, args.beams, quant_bits=args.quant_bits), field)
    elif args.scheme == "enh-phase":
        gmap = gain_map(enh_phase_codebook(n, args.b_bits), field)
    elif args.scheme == "enh-phase-amp":
        gmap = amp_gain_map(field, args.b_bits)
    else:  # argparse choices guard this
        raise ValueError(f"unknown scheme {args.scheme!r}")
    write_gain_map_csv(field.grid, gmap, args.out)
    print(f"wrote {args.scheme} gain map to {args.out}")
    return 0


def _cmd_theorem_check(args) -> int:
    result = theorem_trials(
        n_trials=args.trials,
        b_values=args.b_values,
        seed=args.seed,
        n_antennas=args.n_antennas,
        workers=resolve_workers(None),
    )
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write("trial,B,var_blockage,lower_bound,delta_achieved,margin\n")
            for r in result.rows:
                fh.write(
                    f"{r.trial},{r.b_bits},{_fmt(r.var_blockage)},{_fmt(r.lower_bound)},"
                    f"{_fmt(r.delta_achieved)},{_fmt(r.margin)}\n"
                )
    print(
        f"theorem-check: trials={result.n_trials} B={list(result.b_values)} "
        f"antennas={result.n_antennas} seed={result.seed}"
    )
    print(f"violations={result.n_violations} min_margin={result.min_margin:.3e}")
    if result.n_violations:
        print("bound violated", file=sys.stderr)
        return 1
    return 0


def _cmd_run(args) -> int:
    config = config_from_yaml(args.config) if args.config else default_config()
    report = run_experiment(config, args.out, seed=args.seed)
    print(f"ran {len(report.scenarios)} scenario(s) -> {Path(args.out) / 'report.json'}")
    for name, data in report.scenarios.items():
        med = data["beamforming_cdfs_db"]["loss_optimal_blocked_vs_optimal_free_db"]
        med = med["unweighted"]["percentiles"].get("50.0")
        if med is not None:
            print(f"  {name}: median optimal-gain loss {med:.2f} dB")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamshadow",
        description="Synthetic hand-blockage beamforming experiments on spherical field maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a free-space field map")
    p.add_argument("--out", required=True, help="output field file")
    p.add_argument("--theta-step", type=float, default=5.0)
    p.add_argument("--phi-step", type=float, default=5.0)
    p.add_argument("--n-antennas", type=int, default=4)
    p.add_argument("--spacing", type=float, default=0.5, help="element spacing, wavelengths")
    p.add_argument("--boresight-theta", type=float, default=90.0)
    p.add_argument("--boresight-phi", type=float, default=270.0)
    p.add_argument("--exponent", type=float, default=2.0, help="cos^q envelope exponent")
    p.add_argument("--peak-gain", type=float, default=11.0, help="peak elemental gain, dB")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("distort", help="apply a blockage scenario to a field file")
    p.add_argument("--field", required=True, help="input field file")
    p.add_argument("--out", required=True, help="output (blocked) field file")
    p.add_argument("--dist-out", help="also write the distortion screens here")
    p.add_argument("--config", help="experiment config YAML with scenarios")
    p.add_argument("--scenario", help="scenario name from the config (or a default one)")
    p.add_argument("--mode", default="phase-screen", help="ad-hoc mode when no scenario given")
    p.add_argument("--phase-std", type=float, default=30.0)
    p.add_argument("--amp-std", type=float, default=0.0)
    p.add_argument("--corr-length", type=float, default=20.0)
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.set_defaults(func=_cmd_distort)

    p = sub.add_parser("metrics", help="RoI/CDF/coverage tables from two field files")
    p.add_argument("--free", required=True)
    p.add_argument("--blocked", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--g1", type=float, default=7.5, help="free-gain RoI threshold, dB")
    p.add_argument("--g2", type=float, default=2.5, help="blocked-gain RoI threshold, dB")
    p.add_argument("--percentiles", type=_float_list, default=(10.0, 50.0, 80.0, 90.0))
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("evaluate", help="realized-gain map for one scheme")
    p.add_argument("--field", required=True)
    p.add_argument("--out", required=True, help="output gain-map CSV")
    p.add_argument(
        "--scheme",
        required=True,
        choices=("mrc", "directional", "enh-phase", "enh-phase-amp"),
    )
    p.add_argument("--B", dest="b_bits", type=int, default=2, help="phase bits for enhanced schemes")
    p.add_argument("--beams", type=int, default=None, help="directional beam count (default: N)")
    p.add_argument("--quant-bits", type=int, default=5)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("theorem-check", help="Monte-Carlo audit of the improvement bound")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--B", dest="b_values", type=_int_list, default=(1, 2, 3))
    p.add_argument("--n-antennas", type=int, default=4)
    p.add_argument("--out", help="optional CSV of per-trial rows")
    p.set_defaults(func=_cmd_theorem_check)

    p = sub.add_parser("run", help="full experiment: all scenarios of a config")
    p.add_argument("--config", help="experiment config YAML (default: built-in)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override config/scenario seeds")
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
