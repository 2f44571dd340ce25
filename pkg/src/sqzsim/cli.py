"""Command-line front end: spectrum | simulate | analyze | verify.

Exit codes: 0 success / all checks passed, 1 check failure, 2 invalid
configuration, 3 I/O failure.

A JSON config file may supply a scenario (see ``sqzsim.synth.scenario_to_dict``
for the schema; all keys carry unit suffixes), a plan (preset name or
explicit band list), and verify-tolerance overrides:

    {
      "scenario": {"lo_power_w": 464e-6, "duration_s": 60.0, "seed": 7, ...},
      "plan": "fig3" | {"bands": [[1.0, 10.0, 0.0625, 30], ...]},
      "verify": {"seed": 1, "averages_scale": 1.0,
                 "linearity_tolerance_db": 0.5,
                 "whiteness_tolerance_db_per_decade": 0.2,
                 "squeezing_tolerance_db": 0.5,
                 "closure_tolerance_db": 0.5,
                 "closure_averages": 400}
    }
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as sio
from . import pipeline, presets
from .errors import ConfigError, DomainError
from .noise_models import (
    OpoParams,
    ValueInterval,
    quadrature_pair,
    quadrature_variance,
    squeezing_interval,
    total_loss,
    variance_to_db,
)
from .spectral import WindowPlan, run_plan, subtract_dark_spectrum
from .synth import (
    SimScenario,
    compose_scenario,
    scenario_digest,
    scenario_from_dict,
    scenario_to_dict,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

PRESET_CHOICES = ("fig2", "fig3", "fast")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _plan_from_config(config: dict, preset: str | None, fast: bool) -> WindowPlan:
    plan_spec = config.get("plan")
    if plan_spec is None:
        if preset is None:
            raise ConfigError("no plan: give --preset or a config with a plan")
        return presets.plan_for_preset(preset, fast=fast)
    if isinstance(plan_spec, str):
        return presets.plan_for_preset(plan_spec, fast=fast)
    try:
        plan = WindowPlan(bands=tuple(tuple(b) for b in plan_spec["bands"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed plan in config: {exc}") from exc
    return plan.scaled(presets.FAST_AVERAGES_SCALE) if fast else plan


def _scenario_from_args(args, config: dict, plan: WindowPlan) -> SimScenario:
    fs = presets.DEFAULT_SAMPLE_RATE_HZ
    if "scenario" in config:
        scenario = scenario_from_dict(config["scenario"])
        if args.seed is not None:
            scenario = scenario_from_dict(
                {**config["scenario"], "seed": args.seed}
            )
        return scenario
    if args.preset is None:
        raise ConfigError("no scenario: give --preset or a config with a scenario")
    duration = plan.required_samples(fs) / fs
    seed = args.seed if args.seed is not None else 0
    power = (args.power_uw * 1e-6) if args.power_uw else presets.LO_POWER_REF_W
    if args.preset == "fig2":
        return presets.vacuum_scenario(power, duration_s=duration, seed=seed)
    return presets.squeezed_scenario(power, duration_s=duration, seed=seed)


def cmd_spectrum(args) -> int:
    """Closed-form quadrature noise table; no simulation."""
    config = _load_config(args.config)
    gain = args.gain
    loss = args.loss
    theta = args.theta
    scenario_cfg = config.get("scenario")
    if scenario_cfg is not None and scenario_cfg.get("opo") is not None:
        scenario = scenario_from_dict(scenario_cfg)
        gain = gain if gain is not None else scenario.opo.gain
        loss = loss if loss is not None else total_loss(scenario.loss_budget)
        theta = theta if theta is not None else scenario.homodyne.theta
    if gain is None and args.preset in ("fig3", "fast"):
        gain = presets.GAIN_NOMINAL
    if gain is None:  # vacuum
        rows = [("vacuum", 1.0, 0.0)]
    else:
        loss = loss if loss is not None else presets.LOSS_NOMINAL
        theta = theta if theta is not None else 0.0
        opo = OpoParams(gain=gain)
        pair = quadrature_pair(opo, loss)
        v_theta = quadrature_variance(pair, theta)
        rows = [
            ("squeezed_quadrature", pair.v_squeezed,
             variance_to_db(pair.v_squeezed)),
            ("antisqueezed_quadrature", pair.v_antisqueezed,
             variance_to_db(pair.v_antisqueezed)),
            (f"quadrature_theta={theta:g}", v_theta, variance_to_db(v_theta)),
        ]
    print(f"{'quantity':<28} {'variance_rel_vacuum':>20} {'db_rel_vacuum':>14}")
    for name, var, db in rows:
        print(f"{name:<28} {var:>20.6g} {db:>14.2f}")
    if gain is not None and args.gain_uncertainty and args.loss_uncertainty:
        interval = squeezing_interval(
            ValueInterval(gain - args.gain_uncertainty, gain,
                          gain + args.gain_uncertainty),
            ValueInterval(loss - args.loss_uncertainty, loss,
                          loss + args.loss_uncertainty),
        )
        print(f"{'squeezing_interval_db':<28} "
              f"[{interval.lo:.2f}, {interval.nominal:.2f}, {interval.hi:.2f}]")
    if args.out:
        out = Path(args.out) / "spectrum_table.csv"
        lines = ["quantity,variance_rel_vacuum,db_rel_vacuum"]
        lines += [f"{n},{v!r},{d!r}" for n, v, d in rows]
        sio.write_text(out, "\n".join(lines) + "\n", force=args.force)
        print(f"wrote {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    """Generate a scenario time series (plus its dark reference) to disk."""
    config = _load_config(args.config)
    plan = _plan_from_config(config, args.preset, args.fast)
    scenario = _scenario_from_args(args, config, plan)
    if args.duration_s is not None:
        scenario = scenario_from_dict(
            {**scenario_to_dict(scenario), "duration_s": args.duration_s}
        )
    if scenario.n_samples < 1:
        raise ConfigError("scenario duration is too short (no samples)")
    out_dir = Path(args.out)
    tag = args.preset or "run"
    digest = scenario_digest(scenario)
    base = out_dir / f"{tag}_{digest}"
    samples = compose_scenario(scenario)
    sio.write_timeseries(base.with_suffix(".f64"), samples, scenario, force=args.force)
    print(f"wrote {base.with_suffix('.f64')} ({samples.size} samples)")
    if scenario.dark is not None and not scenario.lo_blocked:
        dark_run = presets.dark_reference_scenario(scenario)
        dark_samples = compose_scenario(dark_run)
        dark_base = out_dir / f"{tag}_{digest}.dark"
        sio.write_timeseries(dark_base.with_suffix(".f64"), dark_samples,
                             dark_run, force=args.force)
        print(f"wrote {dark_base.with_suffix('.f64')} (dark reference)")
    print(f"scenario digest: {digest}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    """Estimate a stitched spectrum from a recorded time series."""
    config = _load_config(args.config)
    plan = _plan_from_config(config, args.preset, args.fast)
    samples, meta = sio.read_timeseries(Path(args.input))
    fs = float(meta["sample_rate_hz"])
    if plan.max_frequency_hz > fs / 2.0:
        raise ConfigError(
            f"plan reaches {plan.max_frequency_hz} Hz but the record was "
            f"sampled at {fs} Hz"
        )
    spectrum = run_plan(samples, fs, plan, provenance=meta["scenario_digest"])
    if args.dark:
        dark_samples, dark_meta = sio.read_timeseries(Path(args.dark))
        if float(dark_meta["sample_rate_hz"]) != fs:
            raise ConfigError(
                "dark run sample rate does not match the analyzed record"
            )
        dark_spectrum = run_plan(dark_samples, fs, plan,
                                 provenance=dark_meta["scenario_digest"])
        spectrum = subtract_dark_spectrum(spectrum, dark_spectrum)
    base = Path(args.out) / (Path(args.input).stem + ".spectrum")
    csv_path, json_path = sio.write_spectrum(
        base, spectrum, plan_bands=list(plan.bands), force=args.force
    )
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    """Run the verification bundle; exit 0 iff every check passes."""
    config = _load_config(args.config)
    overrides = config.get("verify", {})
    fast = args.fast or args.preset in (None, "fast")
    seed = args.seed if args.seed is not None else overrides.get("seed", 41)
    reports = pipeline.run_verification_suite(
        fast=fast,
        seed=int(seed),
        averages_scale=float(overrides.get("averages_scale", 1.0)),
        linearity_tolerance_db=float(
            overrides.get("linearity_tolerance_db", 0.5)),
        whiteness_tolerance_db_per_decade=float(
            overrides.get("whiteness_tolerance_db_per_decade", 0.2)),
        squeezing_tolerance_db=float(
            overrides.get("squeezing_tolerance_db", 0.5)),
        closure_tolerance_db=float(
            overrides.get("closure_tolerance_db", 0.5)),
        closure_averages=int(overrides.get("closure_averages", 800)),
    )
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: measured {r.measured:+.3f} {r.units}, "
              f"expected {r.expected:+.3f} +/- {r.tolerance:.3f}")
    if args.out:
        path = sio.write_check_reports(
            Path(args.out) / "verify_report.json", reports, force=args.force
        )
        print(f"wrote {path}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqzsim",
        description=(
            "Simulate and analyze balanced-homodyne quantum-noise records: "
            "vacuum and squeezed-light spectra from sub-Hz to kHz."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out=True):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--preset", choices=PRESET_CHOICES, default=None,
                       help="reference measurement preset")
        p.add_argument("--fast", action="store_true",
                       help="scale average counts down 10x (CI variant); "
                            "implied by --preset fast")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")
        if with_out:
            p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing outputs")

    p = sub.add_parser("spectrum", help="closed-form noise levels, no simulation")
    add_common(p)
    p.add_argument("--gain", type=float, default=None, help="parametric gain")
    p.add_argument("--loss", type=float, default=None, help="total optical loss")
    p.add_argument("--theta", type=float, default=None, help="LO phase, rad")
    p.add_argument("--gain-uncertainty", type=float, default=0.5)
    p.add_argument("--loss-uncertainty", type=float, default=0.04)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", help="generate a time-series file")
    add_common(p)
    p.add_argument("--power-uw", type=float, default=None,
                   help="LO power in microwatts (presets only)")
    p.add_argument("--duration-s", type=float, default=None,
                   help="override run duration in seconds")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="estimate a spectrum from a record")
    p.add_argument("input", help="time-series file (.f64 with sidecar)")
    add_common(p)
    p.add_argument("--dark", default=None,
                   help="dark-reference record to subtract")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run the verification check bundle")
    add_common(p)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
