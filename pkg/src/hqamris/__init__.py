"""Link-level analysis and simulation of RIS-assisted HQAM links."""

__version__ = "0.1.0"

from .analysis import (
    NakagamiFit,
    PowerModel,
    asep_hqam_closed,
    asep_qam_quadrature,
    asep_quadrature,
    conditioned_ee,
    fit_cascade,
    fit_nakagami,
    moment_I1,
    moment_I2,
    qfunc,
    sep_awgn_hqam,
    sep_awgn_qam,
)
from .channel import (
    ChannelParams,
    LinkBudget,
    average_snr,
    path_loss,
    sample_cascade_gain,
    sample_nakagami,
    sample_phase_error,
)
from .constellation import (
    Constellation,
    HqamGeometry,
    build_hqam,
    build_qam,
    dmin_formula,
    external_symbols,
    hqam_geometry,
    kc_lookup,
)
from .detector import (
    DetectorIndex,
    build_detector,
    candidate_set,
    detect,
    detect_many,
    mld_detect,
    mld_detect_many,
)
from .montecarlo import (
    CurvePoint,
    SerEstimate,
    SweepSpec,
    detect_bench_point,
    run_sweep,
    simulate_asep_ris,
    simulate_ser_awgn,
)
