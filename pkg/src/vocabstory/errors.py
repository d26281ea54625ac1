"""Exception types shared across the package."""


class VocabStoryError(Exception):
    """Base class for all package errors."""


# lexicon
class DuplicateEntry(VocabStoryError):
    pass


class EmptyLexicon(VocabStoryError):
    pass


class MalformedLine(VocabStoryError):
    pass


class SchemeMismatch(VocabStoryError):
    pass


# textcheck
class SpanMismatch(VocabStoryError):
    pass


# srs
class QualityOutOfRange(VocabStoryError):
    pass


class NoNextLevel(VocabStoryError):
    pass


# gateway
class BackendUnavailable(VocabStoryError):
    pass


class TranscriptMiss(VocabStoryError):
    pass


class ResponseTruncated(VocabStoryError):
    pass


class SinkWriteFailure(VocabStoryError):
    pass


# pipeline
class MissingBinding(VocabStoryError):
    pass


class EmptyReply(VocabStoryError):
    pass


# evalkit
class UnparseableGrade(VocabStoryError):
    pass


class DegenerateSample(VocabStoryError):
    pass


class EmptyBatch(VocabStoryError):
    pass


class PlanMismatch(VocabStoryError):
    pass


# service
class UnknownLexicon(VocabStoryError):
    pass


class UnknownWord(VocabStoryError):
    pass


class InvalidGrade(VocabStoryError):
    pass
