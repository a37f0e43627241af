"""Exact thermodynamic-cycle simulator for a measurement-assisted spin-chain
quantum battery: a battery spin strongly coupled to a transverse-Ising charger
chain that doubles as the heat bath, with an optional single-spin memory that
measures the charger between strokes."""

from .cycle import (
    CycleConfig,
    CycleReport,
    CycleVerification,
    compare_conjugate_pair,
    optimize_theta,
    run_cycle,
    run_measured_cycle,
    run_unmeasured_cycle,
    verify_cycle,
)
from .errors import ConfigError, DimensionLimitError, LayoutError, TheoremViolationError
from .measure import (
    MeasurementEnsemble,
    MeasurementScheme,
    apply_measurement,
    cnot_gate,
    conjugate_scheme,
    information_gain,
    measurement_operators,
)
from .model import (
    PAPER_DEFAULT,
    PRESETS,
    ModelParams,
    battery_charger_layout,
    build_battery_h,
    build_charger_h,
    build_interaction,
    build_memory_h,
    build_total_h,
    full_layout,
)
from .qla import (
    Operator,
    Spectrum,
    SystemLayout,
    eig_hermitian,
    embed_site_operator,
    func_of_hermitian,
    partial_trace,
    tensor_product,
)
from .thermo import (
    ErgotropyResult,
    ergotropy,
    free_energy,
    gibbs_state,
    is_passive,
    shannon_entropy,
    von_neumann_entropy,
)

__version__ = "0.1.0"
