# -*- coding: utf-8 -*-
"""
Exception hierarchy shared by all dsinfluence modules.
"""
from typing import Iterable, Optional


class DsInfluenceError(Exception):
    """Base class for all errors raised by dsinfluence."""


class SnapshotError(DsInfluenceError):
    pass


class SnapshotParseError(SnapshotError):
    def __init__(self, path, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        self.last_complete_line = line_number - 1
        super().__init__(
            f"{path}:{line_number}: {reason} "
            f"(last complete line: {self.last_complete_line})"
        )


class UnsupportedFormatError(SnapshotError):
    pass


class IntegrityError(SnapshotError):
    def __init__(self, dangling: Iterable[object]):
        self.dangling = list(dangling)
        super().__init__(
            f"{len(self.dangling)} dangling reference(s), first: {self.dangling[0]}"
        )


class UnknownEntityError(DsInfluenceError, KeyError):
    def __init__(self, kind: str, key: str):
        self.kind = kind
        self.key = key
        super().__init__(f"unknown {kind} '{key}'")

    def __str__(self):
        return self.args[0]


class SourceError(DsInfluenceError):
    """A metadata source failed as a whole."""


class AuthenticationError(SourceError):
    pass


class NotFoundError(SourceError):
    pass


class RateLimitedError(SourceError):
    pass


class TransientSourceError(SourceError):
    pass


class OfflineCacheMiss(SourceError):
    pass


class MalformedResponseError(SourceError):
    """The source answered with a body that is not JSON."""


class DataError(DsInfluenceError):
    pass


class MappingError(DataError):
    pass


class EmptyPeerGroupError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DegenerateFeatureError(DataError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"feature '{feature}' has zero variance")


class RankDeficiencyError(DataError):
    def __init__(self, column: str, index: Optional[int] = None):
        self.column = column
        self.index = index
        super().__init__(f"design matrix is rank deficient at column '{column}'")
