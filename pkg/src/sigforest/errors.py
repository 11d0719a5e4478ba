"""Exception types raised by sigforest."""


class SigforestError(Exception):
    """Base class for all library errors."""


class DataError(SigforestError, ValueError):
    """Input data is unusable. The CLI maps these to exit code 2."""


class EmptyDatasetError(DataError):
    pass


class NonFiniteValueError(DataError):
    def __init__(self, row: int, col: int):
        super().__init__(f"non-finite value at row {row}, column {col}")
        self.row = row
        self.col = col


class DimensionMismatchError(DataError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} features, got {got}")
        self.expected = expected
        self.got = got


class ParseError(DataError):
    def __init__(self, row: int, col: int, token: str):
        super().__init__(f"cannot parse {token!r} at row {row}, column {col}")
        self.row = row
        self.col = col
        self.token = token


class DuplicateHeaderError(DataError):
    pass


class DuplicateRowIdError(DataError):
    pass


class EmptyFileError(DataError):
    pass


class NonPositiveIntegralError(DataError):
    def __init__(self, row_id: str, integral: float):
        super().__init__(f"row {row_id!r}: flux integral {integral!r} is not positive")
        self.row_id = row_id
        self.integral = integral


class SchemaMismatchError(DataError):
    def __init__(self, missing: list[str], extra: list[str]):
        super().__init__(
            f"input columns do not match the model: missing={missing[:10]}"
            f"{'...' if len(missing) > 10 else ''} extra={extra[:10]}"
            f"{'...' if len(extra) > 10 else ''}"
        )
        self.missing = missing
        self.extra = extra


class UnknownRowIdError(DataError):
    def __init__(self, row_ids: list[str]):
        super().__init__(f"unknown row ids: {row_ids}")
        self.row_ids = row_ids


class VersionMismatchError(DataError):
    pass


class CorruptModelError(DataError):
    pass


class InvalidFractionError(SigforestError, ValueError):
    pass


class TooFewSamplesError(SigforestError, ValueError):
    pass
