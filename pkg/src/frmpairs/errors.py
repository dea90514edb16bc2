"""Exception types shared across the package."""


class FrmPairsError(Exception):
    """Base class for all package errors."""


class InvalidArgument(FrmPairsError, ValueError):
    pass


class DegenerateMeasurement(FrmPairsError, ValueError):
    """All counts/probabilities entering an estimator are zero."""


class FitError(FrmPairsError, ValueError):
    """Design matrix of a fringe fit is rank deficient."""


class DegenerateData(FrmPairsError, ValueError):
    """Fit succeeded but the result is unphysical (non-positive offset)."""


class OutOfModel(FrmPairsError, ValueError):
    """Parameters leave the regime the model is valid in."""


class ConfigError(FrmPairsError, ValueError):
    pass
