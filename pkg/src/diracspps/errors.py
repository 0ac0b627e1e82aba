"""Exception and warning types shared across the package."""


class SppsError(Exception):
    """Base class for all numeric/domain errors raised by this package."""


class SamplingError(SppsError):
    """A sampled expression produced a non-finite value at a mesh node."""

    def __init__(self, node: int, x: float, value) -> None:
        self.node = node
        self.x = x
        self.value = value
        super().__init__(f"non-finite sample {value!r} at node {node} (x={x!r})")


class MeshMismatch(SppsError):
    """Two grid functions defined on different meshes were combined."""


class DivisionByZeroNode(SppsError):
    """Nodewise division hit an exactly-zero divisor."""

    def __init__(self, node: int) -> None:
        self.node = node
        super().__init__(f"division by zero at node {node}")


class ParseError(SppsError):
    """Malformed expression source."""

    def __init__(self, message: str, offset: int) -> None:
        self.offset = offset
        super().__init__(f"{message} (at offset {offset})")


class EvalError(SppsError):
    """Expression evaluation failed (division by zero, log of zero, ...)."""


class SingularCoefficient(SppsError):
    """The leading matrix of a general linear system is singular at a node."""

    def __init__(self, node: int, det) -> None:
        self.node = node
        self.det = det
        super().__init__(f"leading matrix singular at node {node} (det={det!r})")


class NonVanishingNotFound(SppsError):
    """No candidate linear combination was zero-free on the whole mesh."""

    def __init__(self, message: str, nodes=()) -> None:
        self.nodes = tuple(nodes)
        super().__init__(message)


class SingularInitialMatrix(SppsError):
    """Initial-value matching system is numerically singular."""


class DegeneratePolynomial(SppsError):
    """All polynomial coefficients are (numerically) zero."""


class SweepStalled(SppsError):
    """The spectral-shift sweep produced no new eigenvalue from a center."""

    def __init__(self, index: int, message: str) -> None:
        self.index = index
        super().__init__(message)


class InvalidSeed(SppsError):
    """Seed solution fails its residual or non-vanishing requirements."""


class StepSizeTooCoarse(SppsError):
    """Reference integrator error estimate exceeds the requested tolerance."""


class SchemaError(SppsError):
    """Problem file does not match the expected schema."""


class TruncationWarning(UserWarning):
    """Series truncation tail bound exceeds the requested accuracy."""
