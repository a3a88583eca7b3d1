"""Exception types shared across the package.

The split matters for the CLI exit codes: bad input data raises
InputError subclasses (exit 1), mathematically impossible outcomes
raise ImpossibleError subclasses (exit 2, always a bug signal), and a
normalization dead end raises Stuck (exit 3).
"""


class SurfmapError(Exception):
    pass


class InputError(SurfmapError):
    """Invalid input data or violated operation precondition."""


class InvalidChi(InputError):
    pass


class UnknownName(InputError):
    pass


class InvalidSurface(InputError):
    pass


class NotOrientable(InputError):
    pass


class Disconnected(InputError):
    pass


class NotCollapsible(InputError):
    pass


class NotAdjacent(InputError):
    pass


class NotEssential(InputError):
    pass


class NotCompatible(InputError):
    pass


class NoCrosscap(InputError):
    pass


class BadTarget(InputError):
    pass


class BadEdge(InputError):
    pass


class BadKind(InputError):
    pass


class NotNormal(InputError):
    pass


class GraphLike(InputError):
    pass


class Branched(InputError):
    pass


class NotClosed(InputError):
    pass


class DisconnectedCover(InputError):
    pass


class ZeroDegree(InputError):
    pass


class Unsatisfiable(InputError):
    pass


class ImpossibleError(SurfmapError):
    """An outcome the mathematics forbids; indicates an implementation bug."""


class InternalInconsistency(ImpossibleError):
    pass


class InconsistentParity(ImpossibleError):
    pass


class InconsistentSheets(ImpossibleError):
    pass


class Stuck(SurfmapError):
    """normalize() ran out of moves while the normal-form predicate fails."""

    def __init__(self, report):
        super().__init__(f"no move applies but the map is not normal: {report}")
        self.report = report
