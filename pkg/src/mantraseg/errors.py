"""Exception hierarchy shared across the toolkit."""


class MantraError(Exception):
    """Base class for all mantraseg errors."""


# label space
class InvalidLabel(MantraError):
    pass


class DuplicateLabel(MantraError):
    pass


class EmptyLabelSet(MantraError):
    pass


class DuplicateSource(MantraError):
    pass


class UnknownSource(MantraError):
    pass


class LocalIdOutOfRange(MantraError):
    pass


# tensors / shapes
class DimensionMismatch(MantraError):
    pass


class ZeroVector(MantraError):
    pass


class GroundTruthMasked(MantraError):
    pass


# metrics
class IdOutOfRange(MantraError):
    pass


class EmptyMatrix(MantraError):
    pass


# scenes / data
class EmptyScene(MantraError):
    pass


class ConfigInvalid(MantraError):
    pass


class MissingProperty(MantraError):
    pass


class DuplicateScene(MantraError):
    pass


class EmptyManifest(MantraError):
    pass


# file formats
class ParseError(MantraError):
    pass


class IoError(MantraError):
    pass


class VersionMismatch(MantraError):
    pass
