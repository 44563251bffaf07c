"""Exception types raised across the package."""


class ReachVerifyError(Exception):
    """Base class for all package errors."""


class DivisorContainsZero(ReachVerifyError, ZeroDivisionError):
    pass


class DimensionMismatch(ReachVerifyError, ValueError):
    pass


class SpeedBelowGuard(ReachVerifyError, ValueError):
    """Longitudinal speed at or below the guard; the 1/v terms are singular there."""

    def __init__(self, v, v_guard, step=None):
        self.v = v
        self.v_guard = v_guard
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(f"longitudinal speed {v!r} <= guard {v_guard}{where}")


class HeadingRangeTooWide(ReachVerifyError, ValueError):
    pass


class DegeneratePolygon(ReachVerifyError, ValueError):
    pass


class ConfigInvalid(ReachVerifyError, ValueError):
    pass


class NonFiniteInput(ReachVerifyError, ValueError):
    pass


class DatasetEmpty(ReachVerifyError, ValueError):
    pass


class NonFiniteLoss(ReachVerifyError, FloatingPointError):
    pass


class FormatVersionMismatch(ReachVerifyError, ValueError):
    pass


class CorruptFile(ReachVerifyError, ValueError):
    pass


class PlacementFailed(ReachVerifyError, RuntimeError):
    pass


class NonPositiveGap(ReachVerifyError, ValueError):
    pass


class LengthMismatch(ReachVerifyError, ValueError):
    pass


class StepError(ReachVerifyError):
    """Wraps an error raised while deducing a trajectory step."""

    def __init__(self, step, vehicle, cause):
        self.step = step
        self.vehicle = vehicle
        self.cause = cause
        super().__init__(f"step {step}, vehicle {vehicle}: {cause}")
