from nlsbif.distributions.distributions import (  # noqa: F401
    Distribution,
    DistributionDict,
    from_dict,
    LinearGrid,
    LogUniformGrid,
    Values,
)
