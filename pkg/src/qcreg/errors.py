"""Exception types shared across the package."""


class QcregError(Exception):
    """Base class for all qcreg errors."""


class MeshError(QcregError):
    """Invalid mesh topology or geometry."""


class InputError(QcregError):
    """Malformed or inconsistent user input (files, constraints, parameters)."""


class NumericalError(QcregError):
    """A solve failed: singular system, non-convergence, or degenerate coefficients."""
