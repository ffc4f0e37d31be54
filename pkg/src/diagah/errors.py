"""Exception hierarchy.

Every error raised on purpose by the package derives from ``DiagAHError`` so
callers (and the command line front end) can separate certified failures from
programming errors.
"""


class DiagAHError(Exception):
    pass


# metric toolbox
class EmptySet(DiagAHError):
    pass


class Overlap(DiagAHError):
    pass


class BoundViolated(DiagAHError):
    pass


# matrices and homomorphisms
class NotSingular(DiagAHError):
    pass


class NotUnitary(DiagAHError):
    pass


class SizeMismatch(DiagAHError):
    pass


class SpaceMismatch(DiagAHError):
    pass


class ChainMismatch(DiagAHError):
    pass


class BadIndices(DiagAHError):
    pass


class BadIndex(BadIndices):
    pass


class ValidationError(DiagAHError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ParseError(DiagAHError):
    pass


# corner extraction and certificates
class HypothesisFailed(DiagAHError):
    pass


class EmptyF(DiagAHError):
    pass


class NotCovering(DiagAHError):
    pass


class HorizonExhausted(DiagAHError):
    """No stage up to the horizon works. This is "undetermined", not a disproof."""


class ToleranceTooLarge(DiagAHError):
    pass


class ZeroInput(DiagAHError):
    pass


class CertificateFailed(DiagAHError):
    pass


# stable rank pipeline
class CornerTooSmall(DiagAHError):
    pass


class MissingStructure(DiagAHError):
    pass


class SlotOverlap(DiagAHError):
    pass


class UnknownDemo(DiagAHError):
    pass
