"""Exception hierarchy shared by all modules."""


class SurplexError(Exception):
    """Base class for every error raised by the library."""


class NonPositiveProbability(SurplexError, ValueError):
    pass


class ProbabilitySumMismatch(SurplexError, ValueError):
    pass


class SpaceMismatch(SurplexError, ValueError):
    pass


class AlphaOutOfRange(SurplexError, ValueError):
    pass


class SamplerExhausted(SurplexError, RuntimeError):
    pass


class SpecError(SurplexError, ValueError):
    pass


class DecompositionMismatch(SurplexError):
    """Reconstruction from the {A, B, C} partition disagrees with `accepts`.

    ``witness`` is the offending position; ``actual`` is what `accepts`
    returned for it and ``predicted`` what the partition implies.
    """

    def __init__(self, message, witness=None, actual=None, predicted=None, partition=None):
        super().__init__(message)
        self.witness = witness
        self.actual = actual
        self.predicted = predicted
        self.partition = partition


class PCFull(SurplexError):
    """The unconstrained region C carries full probability."""


class NotCoherent(SurplexError):
    def __init__(self, message, verdicts=None):
        super().__init__(message)
        self.verdicts = verdicts or {}


class ScenarioExtractionMismatch(SurplexError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NegativeDualDirection(SurplexError, ValueError):
    pass


class EmptyFamily(SurplexError, ValueError):
    pass


class NotDecayingEnvelope(SurplexError, ValueError):
    pass


class UnsupportedFamily(SurplexError, ValueError):
    pass


class ParseError(SurplexError, ValueError):
    """Malformed scenario or spec file.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, path=None, line=None, column=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        super().__init__(f"{': '.join([', '.join(loc), message]) if loc else message}")
        self.path = path
        self.line = line
        self.column = column
