"""Exception hierarchy shared by the library and the CLI."""


class MTreeError(Exception):
    """Base class for every error raised by :mod:`mtree`."""


class NewickError(MTreeError, ValueError):
    """Malformed Newick text, or a tree that violates the tree invariants.

    ``position`` is the character offset of the problem when it is known.
    """

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class TreeError(MTreeError, ValueError):
    """A tree that breaks an invariant (cycle, degree-2 vertex, bad weight...)."""


class MMapFormatError(MTreeError, ValueError):
    """Malformed m-map TSV file."""


class NotRealizableError(MTreeError):
    """The m-map is not the subtree-weight map of any tree.

    ``quartet`` holds the four labels whose analysis failed, when known.
    """

    def __init__(self, message, quartet=None):
        if quartet is not None:
            message = f"{message} [quartet {','.join(quartet)}]"
        super().__init__(message)
        self.quartet = quartet


class BelowThresholdError(MTreeError):
    """Reconstruction refused because n < 2m - 1 (the tree is not unique)."""
