"""Simulate-then-analyze conveniences shared by the CLI, checks and tests."""

from __future__ import annotations

import numpy as np

from . import presets
from .presets import dark_reference_scenario
from .spectral import (
    Band,
    StitchedSpectrum,
    WindowPlan,
    run_plan,
    subtract_dark_spectrum,
)
from .synth import SimScenario, compose_scenario, scenario_digest
from .verify import (
    CheckReport,
    check_linearity,
    check_whiteness,
    mains_mask,
    measured_squeezing,
)


def analyze_scenario(scenario: SimScenario, plan: WindowPlan,
                     samples: np.ndarray | None = None) -> StitchedSpectrum:
    """Compose a scenario (or analyze given samples) under a plan."""
    if samples is None:
        samples = compose_scenario(scenario)
    return run_plan(samples, scenario.sample_rate_hz, plan,
                    provenance=scenario_digest(scenario))


def analyze_with_dark_reference(
    scenario: SimScenario, plan: WindowPlan
) -> tuple[StitchedSpectrum, StitchedSpectrum, StitchedSpectrum]:
    """Return (raw, dark-reference, dark-subtracted) spectra for a scenario.

    The dark reference is an independently seeded LO-blocked run of the
    same duration, mirroring a paired dark measurement.
    """
    raw = analyze_scenario(scenario, plan)
    dark_run = dark_reference_scenario(scenario)
    dark = analyze_scenario(dark_run, plan)
    return raw, dark, subtract_dark_spectrum(raw, dark)


def _plan_duration_s(plan: WindowPlan, fs: float) -> float:
    return plan.required_samples(fs) / fs


def run_verification_suite(
    fast: bool = True,
    seed: int = 41,
    averages_scale: float = 1.0,
    linearity_tolerance_db: float = 0.5,
    whiteness_tolerance_db_per_decade: float = 0.2,
    squeezing_tolerance_db: float = 0.5,
    closure_tolerance_db: float = 0.5,
    closure_averages: int = 800,
) -> list[CheckReport]:
    """The three-part vacuum confirmation plus squeezing and calibration closure.

    1. Vacuum spectra at the three LO powers scale linearly with power.
    2. The vacuum spectrum is white over 10 Hz - 3.2 kHz.
    3. The squeezed spectrum sits at the predicted level below vacuum.
    4. The raw / dark-subtracted levels at 1 Hz close on the calibration
       anchors.

    Dark references are simulated and subtracted; mains bins are masked
    inside all statistics.  ``averages_scale`` further scales the plans'
    average counts (CI knob); tolerances are the caller's business.
    """
    fs = presets.DEFAULT_SAMPLE_RATE_HZ
    reports: list[CheckReport] = []

    # -- vacuum: linearity + whiteness ------------------------------------
    vac_plan = presets.plan_for_preset("fig2", fast=fast)
    if averages_scale != 1.0:
        vac_plan = vac_plan.scaled(averages_scale)
    duration = _plan_duration_s(vac_plan, fs)
    vacuum_runs = {
        power: presets.vacuum_scenario(power, duration_s=duration,
                                       seed=seed + 100 * (i + 1))
        for i, power in enumerate(presets.LO_POWERS_W)
    }
    dark_run = dark_reference_scenario(
        vacuum_runs[presets.LO_POWERS_W[0]], seed_offset=9
    )
    dark_spec = analyze_scenario(dark_run, vac_plan)
    subtracted = {
        power: subtract_dark_spectrum(analyze_scenario(s, vac_plan), dark_spec)
        for power, s in vacuum_runs.items()
    }
    vac_mask = mains_mask(vac_plan, 50.0, n_harmonics=5, fs=fs)
    reports.append(
        check_linearity(subtracted, tolerance_db=linearity_tolerance_db,
                        mask=vac_mask)
    )
    # The default 3-sigma outlier bound is meant for a few hundred bins; a
    # stitched full-range spectrum has ~2000, so allow for the expected
    # maximum of that many draws.
    n_bins = sum(
        int(np.sum((seg.frequencies >= 10.0) & (seg.frequencies <= 3200.0)))
        for seg in subtracted[presets.LO_POWER_REF_W].segments
    )
    dev_sigmas = max(3.0, np.sqrt(2.0 * np.log(2.0 * n_bins)) + 1.0)
    whiteness = check_whiteness(
        subtracted[presets.LO_POWER_REF_W],
        band=(10.0, 3200.0),
        mask=vac_mask,
        slope_tolerance_db_per_decade=whiteness_tolerance_db_per_decade,
        deviation_sigmas=dev_sigmas,
    )
    reports.append(whiteness)

    # -- squeezing level ---------------------------------------------------
    sqz_plan = presets.plan_for_preset("fig3", fast=fast)
    if averages_scale != 1.0:
        sqz_plan = sqz_plan.scaled(averages_scale)
    duration = _plan_duration_s(sqz_plan, fs)
    sqz_run = presets.squeezed_scenario(duration_s=duration, seed=seed + 1000)
    vac_ref_run = presets.vacuum_scenario(duration_s=duration, seed=seed + 1010)
    dark_run = dark_reference_scenario(sqz_run, seed_offset=17)
    dark_spec = analyze_scenario(dark_run, sqz_plan)
    sqz_spec = subtract_dark_spectrum(analyze_scenario(sqz_run, sqz_plan), dark_spec)
    vac_spec = subtract_dark_spectrum(analyze_scenario(vac_ref_run, sqz_plan), dark_spec)
    sqz_mask = mains_mask(sqz_plan, 50.0, n_harmonics=5, fs=fs)
    reports.append(
        measured_squeezing(
            sqz_spec,
            vac_spec,
            band=(10.0, 3200.0),
            mask=sqz_mask,
            expected_db=presets.intrinsic_squeezing_db(),
            tolerance_db=squeezing_tolerance_db,
        )
    )

    # -- calibration closure at 1 Hz ----------------------------------------
    reports.extend(
        closure_checks_at_1hz(
            seed=seed + 2000,
            n_averages=max(2, int(round(closure_averages * averages_scale))),
            tolerance_db=closure_tolerance_db,
        )
    )
    return reports


#: RBW of the 1 Hz closure measurement.  Fine enough that window smearing
#: of the steep parasitic shape across the bin stays well below 0.1 dB,
#: and 1 Hz falls exactly on a bin center (bin spacing 1/6 Hz).
CLOSURE_RBW_HZ = 0.25


def closure_checks_at_1hz(
    seed: int,
    n_averages: int = 800,
    tolerance_db: float = 0.5,
) -> list[CheckReport]:
    """Measure the 1 Hz bin of the squeezed spectrum, raw and dark-subtracted."""
    fs = presets.DEFAULT_SAMPLE_RATE_HZ
    plan = WindowPlan(bands=(Band(0.9, 1.1, CLOSURE_RBW_HZ, n_averages),))
    duration = _plan_duration_s(plan, fs)
    run = presets.squeezed_scenario(duration_s=duration, seed=seed, mains=False)
    raw, _dark_spec, subtracted = analyze_with_dark_reference(run, plan)

    def level_db(spectrum: StitchedSpectrum) -> float:
        seg = spectrum.segments[0]
        i = int(np.argmin(np.abs(seg.frequencies - 1.0)))
        return float(10.0 * np.log10(seg.psd[i]))

    raw_db = level_db(raw)
    sub_db = level_db(subtracted)
    return [
        CheckReport(
            name="closure_raw_1hz",
            passed=abs(raw_db - presets.OBSERVED_DB_AT_1HZ) <= tolerance_db,
            measured=raw_db,
            expected=presets.OBSERVED_DB_AT_1HZ,
            tolerance=tolerance_db,
            details={"rbw_hz": CLOSURE_RBW_HZ, "n_averages": n_averages},
        ),
        CheckReport(
            name="closure_dark_subtracted_1hz",
            passed=abs(sub_db - presets.RECOVERED_DB_AT_1HZ) <= tolerance_db,
            measured=sub_db,
            expected=presets.RECOVERED_DB_AT_1HZ,
            tolerance=tolerance_db,
            details={"rbw_hz": CLOSURE_RBW_HZ, "n_averages": n_averages},
        ),
    ]
