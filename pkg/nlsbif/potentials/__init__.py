from nlsbif.potentials.potentials import (  # noqa: F401
    CRITICAL_SEPARATION,
    CriticalPoint,
    DoubleWellSech2,
    FreePotential,
    is_double_well,
    Potential,
    PotentialType,
    SingleWellSech2,
    TabulatedPotential,
)
from nlsbif.potentials.linear_modes import (  # noqa: F401, E402
    double_well_splitting,
    linear_lambda_prime,
    LinearModes,
    single_well_ground_state,
    solve_linear_modes,
    SplittingRow,
)
