from latopt.optimizer.filters import (
    ContinuationSchedule,
    DensityFilter,
    density_filter,
    heaviside_project,
)
from latopt.optimizer.loop import (
    OptimizationResult,
    initial_fields,
    mma_update,
    optimize,
    write_history_csv,
)
from latopt.optimizer.mma import MMA
from latopt.optimizer.options import DesignOptions, OptimizerConfig
from latopt.optimizer.sensitivity import (
    LatticeProblem,
    SensitivityBundle,
    compliance_and_sensitivities,
    uniform_reference,
)
