"""Exception hierarchy shared by all pipeline stages.

ValidationError subclasses signal bad user input (CLI exit code 1);
ComputationError subclasses signal runtime/numeric failures (exit code 2).
"""


class DemandScopeError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(DemandScopeError):
    """Invalid input data or configuration."""


class ComputationError(DemandScopeError):
    """Numeric or runtime failure inside a pipeline stage."""


# --- data ingestion / schema ---

class MissingColumn(ValidationError):
    pass


class UnknownCategory(ValidationError):
    def __init__(self, row, feature, token):
        super().__init__(f"row {row}: unknown category {token!r} for feature {feature!r}")
        self.row = row
        self.feature = feature
        self.token = token


class NonFiniteValue(ValidationError):
    def __init__(self, row, feature):
        super().__init__(f"row {row}: non-finite value in feature {feature!r}")
        self.row = row
        self.feature = feature


class LabelOutOfRange(ValidationError):
    pass


class TooFewSamplesForClass(ValidationError):
    def __init__(self, cls, count):
        super().__init__(f"class {cls} has only {count} samples")
        self.cls = cls
        self.count = count


# --- preprocessing ---

class EmptyInput(ValidationError):
    pass


class TooFewValues(ValidationError):
    pass


class UnknownColumn(ValidationError):
    pass


class NotContinuous(ValidationError):
    pass


class EmptySubset(ValidationError):
    pass


class LayoutMismatch(ValidationError):
    pass


# --- forest ---

class EmptyNode(ValidationError):
    pass


class InconsistentCounts(ValidationError):
    pass


class NoSplits(ComputationError):
    pass


class KOutOfRange(ValidationError):
    pass


# --- augmentation ---

class EmptyClass(ValidationError):
    pass


# --- autograd / model ---

class ShapeMismatch(ValidationError):
    pass


class InvalidProbability(ValidationError):
    pass


class NonScalarLoss(ValidationError):
    pass


class NonFiniteActivation(ComputationError):
    pass


class DivergenceDetected(ComputationError):
    pass


# --- metrics ---

class SingleClassOnly(ValidationError):
    pass


class MissingClass(ValidationError):
    def __init__(self, cls):
        super().__init__(f"class {cls} absent from labels")
        self.cls = cls


class ChecksumMismatch(ComputationError):
    pass


# --- explanation ---

class TooManyFeaturesForExact(ValidationError):
    pass


# --- configuration / CLI ---

class InvalidConfig(ValidationError):
    pass


class MissingArtifact(ValidationError):
    pass
