"""Exception types raised by treecut."""


class TreeCutError(ValueError):
    """Base class for all treecut errors."""


class InvalidTreeError(TreeCutError):
    pass


class InvalidVertexError(TreeCutError):
    pass


class EmptySelectionError(TreeCutError):
    pass


class InvalidSizeError(TreeCutError):
    pass


class UnattainableSizeError(TreeCutError):
    pass


class UnsupportedLawError(TreeCutError):
    pass


class InvalidParameterError(TreeCutError):
    pass


class BudgetExceededError(TreeCutError):
    pass


class IncompleteTraceError(TreeCutError):
    pass


class InvalidSequenceError(TreeCutError):
    """A removal sequence is not a possible cutting sequence.

    ``index`` is the 1-based position of the first offending entry; it is
    ``len(sequence) + 1`` when the sequence stops before every planted
    edge has been removed.
    """

    def __init__(self, index, reason):
        super().__init__(f"invalid cutting sequence at index {index}: {reason}")
        self.index = index
        self.reason = reason
