"""Exception hierarchy shared by all modules."""


class IncitensorError(ValueError):
    """Base class for every error raised by the package."""


class InvalidSignatureError(IncitensorError):
    pass


class InvalidFaceError(IncitensorError):
    pass


class InfeasibleConstraintsError(IncitensorError):
    pass


class InconsistentDecompositionError(IncitensorError):
    pass


class ShapeMismatchError(IncitensorError):
    pass


class UnderResolvedOrbitsError(IncitensorError):
    pass


class RangeError(IncitensorError):
    pass


class UnsupportedRuleError(IncitensorError):
    pass


class UnsupportedIrregularError(IncitensorError):
    pass
