from __future__ import annotations

import numpy as np


class ThermoInputError(ValueError):
    pass


class DimensionError(ThermoInputError):
    pass


class DomainError(ThermoInputError):
    pass


class DescriptorError(ThermoInputError):
    pass


class NumericalError(RuntimeError):
    pass


class SpectralConvergenceError(NumericalError):
    def __init__(self, message: str, last_iterate: np.ndarray | None = None, iterations: int = 0):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class NonUniqueEquilibrium(NumericalError):
    pass


class NullColumnError(NumericalError):
    def __init__(self, message: str, column: int):
        super().__init__(message)
        self.column = column


class NoFeasibleMeasure(NumericalError):
    pass


class ReducibleShiftError(NumericalError):
    pass


class NormIdentityError(NumericalError):
    pass
