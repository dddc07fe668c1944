"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ValidationError -> 2,
NumericalError -> 3, FileFormatError and OSError -> 4.
"""


class ScendiError(Exception):
    """Base class for all package errors."""


class ValidationError(ScendiError):
    """Invalid input data, configuration, or contract violation."""


class NumericalError(ScendiError):
    """A numerical routine failed beyond recoverable tolerance."""


class PSDViolationError(NumericalError):
    """An eigenvalue is negative beyond the sign-noise band."""

    def __init__(self, value: float, threshold: float):
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"eigenvalue {value!r} is below the PSD noise band "
            f"(threshold {threshold!r}); matrix is not PSD"
        )


class FileFormatError(ScendiError):
    """A file failed structural parsing or format validation.

    `code` is a stable machine-readable reason: one of
    bad-magic, bad-version, bad-header, not-2d, fortran-order,
    bad-dtype, truncated, bad-csv, bad-manifest, bad-report.
    """

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")
