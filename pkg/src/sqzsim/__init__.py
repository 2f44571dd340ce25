"""sqzsim: simulate and analyze low-frequency squeezed-light homodyne noise.

The package splits along the measurement chain:

* :mod:`sqzsim.noise_models` -- closed-form quadrature variances of a
  lossy sub-threshold OPO,
* :mod:`sqzsim.synth` -- seeded generation of difference-photocurrent
  records (quantum noise, dark noise, mains, scattered-light noise),
* :mod:`sqzsim.spectral` -- analyzer-style averaged PSD estimation with
  per-band resolution bandwidths and stitching,
* :mod:`sqzsim.verify` -- linearity/whiteness/squeezing checks and
  model calibration from anchor levels,
* :mod:`sqzsim.presets`, :mod:`sqzsim.pipeline`, :mod:`sqzsim.cli` --
  reference scenarios, simulate-then-analyze glue and the command line.
"""

from .noise_models import (
    LossBudget,
    OpoParams,
    QuadraturePair,
    ValueInterval,
    antisqueezed_variance,
    db_to_variance,
    quadrature_pair,
    quadrature_variance,
    squeezed_variance,
    squeezing_interval,
    total_loss,
    variance_to_db,
    visibility_efficiency,
)
from .spectral import (
    Band,
    SpectrumSegment,
    StitchedSpectrum,
    WindowPlan,
    averaged_psd,
    band_select,
    fig2_plan,
    fig3_plan,
    run_plan,
    segment_length_for_rbw,
    subtract_dark,
    subtract_dark_spectrum,
    to_db_rel_vacuum,
)
from .synth import (
    DarkNoiseModel,
    HomodyneConfig,
    MainsModel,
    ParasiticModel,
    SimScenario,
    compose_scenario,
    scenario_digest,
    scenario_from_dict,
    scenario_to_dict,
    scenario_variance,
    synth_dark,
    synth_mains,
    synth_parasitic,
    synth_quantum_noise,
)
from .verify import (
    CheckReport,
    calibrate_dark,
    calibrate_parasitic,
    check_linearity,
    check_whiteness,
    mains_mask,
    measured_squeezing,
)

__version__ = "0.1.0"
