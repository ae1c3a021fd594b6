"""Exception hierarchy shared by all lglab modules."""


class LglabError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidArgumentError(LglabError, ValueError):
    """Non-finite or malformed numeric input."""


class DomainError(LglabError, ValueError):
    """Input outside the region where the requested object exists."""


class NotTriangularizableError(DomainError):
    """Matrix has a complex eigenvalue pair, so no real Schur form exists."""


class UnclassifiedUnimodularError(LglabError):
    """Trace-free matrix that could not be matched to a canonical model."""

    def __init__(self, message, invariants=None):
        super().__init__(message)
        self.invariants = dict(invariants or {})


class UnsupportedGroupError(LglabError):
    """Group does not admit an algebraic open book decomposition."""

    def __init__(self, label):
        super().__init__(f"{label} does not admit an algebraic open book decomposition")
        self.label = label


class SingularPointError(LglabError):
    """Vector field evaluated on its singular set."""


class DegenerateGeometryError(LglabError):
    """Vertex star too degenerate to define a tangent plane."""

    def __init__(self, vertex, message=None):
        super().__init__(message or f"degenerate vertex star at vertex {vertex}")
        self.vertex = vertex


class MeshParseError(LglabError):
    """OBJ file could not be parsed."""


class MeshValidationError(LglabError):
    """Mesh is not a valid closed oriented sphere."""


class NonManifoldError(MeshValidationError):
    pass


class OrientationError(MeshValidationError):
    pass


class WrongTopologyError(MeshValidationError):
    pass


class DegenerateFaceError(MeshValidationError):
    pass


class ResampleError(LglabError):
    """Jitter budget exhausted while trying to reach a generic configuration."""


class DegenerateHeightError(ResampleError):
    pass
