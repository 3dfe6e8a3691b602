from nlsbif.operators.banded import (  # noqa: F401
    bordered_solve,
    Parity,
    ParityBasis,
    parity_solve,
    SymmetricBandedOperator,
)
