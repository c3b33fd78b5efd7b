"""Exception hierarchy. ``exit_code`` is what the command-line tool returns."""


class P0Error(Exception):
    exit_code = 1


class EdgeListError(P0Error, ValueError):
    exit_code = 2


class EmptyGraphError(P0Error, ValueError):
    exit_code = 2


class InvalidSizeError(P0Error, ValueError):
    pass


class SelfLoopError(P0Error, ValueError):
    pass


class SingularInformationError(P0Error, ArithmeticError):
    pass


class InvalidNullError(P0Error, ValueError):
    exit_code = 5


class InvalidReferenceError(P0Error, ValueError):
    """Requested reference distribution is not valid for the null."""

    exit_code = 5


class DegenerateDegreeError(P0Error):
    """A degree needed inside a logarithm of the fixed-point update is zero.

    ``nodes`` lists ``(kind, node)`` pairs with ``kind`` one of ``"out"``,
    ``"in"`` or ``"pooled"`` and 1-based node labels.
    """

    exit_code = 3

    def __init__(self, nodes):
        self.nodes = list(nodes)
        desc = ", ".join(f"{kind}-degree of node {node}" for kind, node in self.nodes)
        super().__init__(f"zero degree, MLE does not exist: {desc}")


class NonConvergenceError(P0Error):
    """Fixed-point iteration hit ``max_iter``; ``result`` is the last iterate."""

    exit_code = 4

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"fixed-point iteration did not converge in {result.iterations} iterations "
            f"(max relative deviation {result.max_rel_dev:.3g}); the MLE may not exist"
        )
