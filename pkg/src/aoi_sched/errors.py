"""Exception types shared across the library."""


class AoiSchedError(Exception):
    """Base class for all library-specific errors."""


# --- channel model validation ---

class ProbabilityNotNormalized(AoiSchedError):
    pass


class LossOutOfRange(AoiSchedError):
    pass


class PowersNotAscending(AoiSchedError):
    pass


class DegenerateGammaOne(AoiSchedError):
    """Unconditional per-slot failure probability is (numerically) 1."""


# --- LP solver ---

class NumericalBreakdown(AoiSchedError):
    pass


# --- single-sensor LP ---

class InfeasiblePower(AoiSchedError):
    """The mandatory always-schedule tail alone exceeds the power budget."""

    def __init__(self, msg, min_power=None, sensor=None):
        super().__init__(msg)
        self.min_power = min_power
        self.sensor = sensor


class SingularSystem(AoiSchedError):
    pass


class PolicyRecoveryError(AoiSchedError):
    """Recovered scheduling probability violates [0,1] beyond tolerance."""


# --- dual search ---

class BracketNotFound(AoiSchedError):
    pass


class DegenerateBracket(AoiSchedError):
    pass


# --- policies ---

class DegenerateLoss(AoiSchedError):
    pass
