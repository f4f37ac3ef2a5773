from typing import Optional


class ShadowPolicyException(Exception):
    pass


class InvalidSpecError(ShadowPolicyException, ValueError):
    pass


class DimensionMismatchError(ShadowPolicyException, ValueError):
    pass


class NonFiniteError(ShadowPolicyException, ValueError):
    pass


class DivergenceError(ShadowPolicyException):
    def __init__(self, stage: str, step: int, loss: Optional[float] = None):
        self.stage = stage
        self.step = step
        self.loss = loss
        super().__init__(
            "{} diverged at step {} (loss={})".format(stage, step, loss)
        )


class TerminalStateError(ShadowPolicyException):
    pass


class CheckpointError(ShadowPolicyException):
    pass


class BadMagicError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


class DemonstrationFormatError(ShadowPolicyException):
    pass


class AccountingError(ShadowPolicyException):
    pass


class ReportSchemaError(ShadowPolicyException):
    pass
