"""Exception hierarchy shared by every vortexlab module.

Each error carries a short ``kind`` string (same spirit as ``LoadError.kind``)
and a stable process exit code used by the CLI.
"""

from __future__ import annotations


class VortexLabError(Exception):
    kind = "error"
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(VortexLabError):
    kind = "config"
    exit_code = 2


class AssumptionViolation(VortexLabError):
    kind = "assumption"
    exit_code = 3


class SingularInputError(VortexLabError):
    kind = "singular_input"
    exit_code = 4


class OutOfBoxError(VortexLabError):
    kind = "out_of_box"
    exit_code = 5


class SupportMismatchError(VortexLabError):
    kind = "support_mismatch"
    exit_code = 6


class IntegrabilityError(VortexLabError):
    kind = "integrability"
    exit_code = 6


class SampleSizeError(VortexLabError):
    kind = "sample_size"
    exit_code = 6


class CFLViolation(VortexLabError):
    kind = "cfl"
    exit_code = 7


class NegativeDensityError(VortexLabError):
    kind = "negative_density"
    exit_code = 7


class BoundaryMassError(VortexLabError):
    kind = "boundary_mass"
    exit_code = 7


class ExcessiveShiftError(VortexLabError):
    kind = "excessive_shift"
    exit_code = 8


class PathLengthError(VortexLabError):
    kind = "path_length"
    exit_code = 8


class StoppedRunError(VortexLabError):
    kind = "stopped_run"
    exit_code = 9


class InsufficientSeedsError(VortexLabError):
    kind = "insufficient_seeds"
    exit_code = 10


# Documented in README.md; keep in sync.
EXIT_CODES: dict[str, int] = {
    cls.kind: cls.exit_code
    for cls in (
        ConfigError,
        AssumptionViolation,
        SingularInputError,
        OutOfBoxError,
        SupportMismatchError,
        IntegrabilityError,
        SampleSizeError,
        CFLViolation,
        NegativeDensityError,
        BoundaryMassError,
        ExcessiveShiftError,
        PathLengthError,
        StoppedRunError,
        InsufficientSeedsError,
    )
}
