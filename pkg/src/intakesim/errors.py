"""Exception hierarchy shared by every module."""


class IntakeError(Exception):
    """Base class for all engine errors."""


# profiles
class OutOfRange(IntakeError, ValueError):
    pass


class UnknownFeature(IntakeError, KeyError):
    pass


class StrategyMismatch(IntakeError, ValueError):
    pass


class DuplicateFeatureId(IntakeError, ValueError):
    pass


class ParseError(IntakeError, ValueError):
    pass


# scales
class CountMismatch(IntakeError, ValueError):
    pass


class ItemCountMismatch(IntakeError, ValueError):
    pass


class ItemOutOfRange(IntakeError, ValueError):
    pass


class MissingContext(IntakeError, KeyError):
    pass


class UnknownScale(IntakeError, KeyError):
    pass


# backends
class BackendFailure(IntakeError):
    """Any failure to obtain a usable model response."""


class Transport(BackendFailure):
    pass


class RateLimited(Transport):
    pass


class Timeout(Transport):
    pass


class AuthFailure(BackendFailure):
    pass


class SchemaViolation(BackendFailure):
    """Model output failed its response contract after the repair attempt."""


class UnscriptedRequest(BackendFailure, KeyError):
    pass


# agents / session
class MissingScaleResponse(IntakeError):
    pass


class IncompleteReports(IntakeError):
    pass


class EvidenceError(IntakeError, ValueError):
    """A dialogue-evidence reference points at a round that does not exist."""


class PlanInvalid(IntakeError):
    pass


class RatingIncomplete(IntakeError):
    pass


class RoundLimitExceeded(IntakeError):
    pass


class EmptyCorpus(IntakeError, ValueError):
    pass


# evaluation
class LengthMismatch(IntakeError, ValueError):
    pass


class UnknownLabel(IntakeError, ValueError):
    pass


class DegenerateMatrix(IntakeError, ValueError):
    pass


class DegenerateLabels(IntakeError, ValueError):
    pass


class MissingGroundTruth(IntakeError, ValueError):
    pass


class InsufficientStratum(IntakeError, ValueError):
    pass


class InsufficientData(IntakeError, ValueError):
    pass
