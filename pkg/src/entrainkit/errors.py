"""Exception hierarchy shared by every entrainkit module."""


class EntrainError(Exception):
    """Base class for all toolkit errors."""


# ingestion
class MissingColumn(EntrainError):
    pass


class NonNumericTime(EntrainError):
    pass


class InvalidSpan(NonNumericTime):
    """A row whose end time is not after its start time."""


class UnsortedAfterMerge(EntrainError):
    pass


class OverlappingTurns(EntrainError):
    pass


class MoreThanTwoSpeakers(EntrainError):
    pass


class UnsupportedEncoding(EntrainError):
    pass


class CorruptHeader(EntrainError):
    pass


class MissingAuColumn(MissingColumn):
    def __init__(self, au):
        super().__init__(f"missing FAU intensity column for {au}")
        self.au = au


class NonMonotoneTimestamps(EntrainError):
    pass


class NegativeIntensity(EntrainError):
    pass


class OutOfScaleRating(EntrainError):
    pass


class UnpairedParticipant(UserWarning):
    """Warning: a conversation does not have exactly two survey rows."""


# features
class TooShort(EntrainError):
    pass


class InsufficientVoicedFrames(EntrainError):
    pass


class TurnOutOfRange(EntrainError):
    pass


# turn dynamics
class EmptyTranscript(EntrainError):
    pass


# entrainment
class InsufficientPartnerTurns(EntrainError):
    pass


class TooFewPairs(EntrainError):
    pass


class NoUsableWindows(EntrainError):
    pass


# statistics
class EmptySample(EntrainError):
    pass


class ZeroVarianceBothGroups(EntrainError):
    pass


class LengthMismatch(EntrainError):
    pass


class ZeroVarianceDifferences(EntrainError):
    pass


class SampleSizeOutOfRange(EntrainError):
    pass


class ConstantInput(EntrainError):
    pass


class OutOfRangeP(EntrainError):
    pass


class DegenerateMatrix(EntrainError):
    pass


# pcs
class TooFewResponses(EntrainError):
    pass


class MissingConstruct(EntrainError):
    pass


class SingleResponseCohort(EntrainError):
    pass


# synth / pipeline
class InvalidConfig(EntrainError):
    pass


class LayoutError(EntrainError):
    pass


class NoLabeledConversations(EntrainError):
    pass
