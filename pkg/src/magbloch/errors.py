"""Exception hierarchy shared by all magbloch modules."""


class MagBlochError(Exception):
    """Base class; carries a short machine-readable ``code``."""

    code = "error"


class DegenerateLatticeError(MagBlochError, ValueError):
    code = "degenerate-lattice"


class NotRationalError(MagBlochError, ValueError):
    code = "not-rational"


class InvalidPotentialError(MagBlochError, ValueError):
    code = "invalid-potential"


class AssemblyError(MagBlochError, RuntimeError):
    code = "assembly-error"


class ContourError(MagBlochError, ValueError):
    """An eigenvalue sits on (or too close to) the projector contour."""

    code = "eigenvalue-on-contour"


class ContinuationLostError(MagBlochError, RuntimeError):
    """Projected reference vectors became (nearly) linearly dependent."""

    code = "continuation-lost"


class DegenerateLevelError(MagBlochError, ValueError):
    code = "degenerate-eigenvector"


class SolverError(MagBlochError, RuntimeError):
    code = "solver-error"

    def __init__(self, message, theta_index=None):
        super().__init__(message)
        self.theta_index = theta_index


class ConfigError(MagBlochError, ValueError):
    """Aggregated config validation failure; ``problems`` lists (path, message)."""

    code = "invalid-config"

    def __init__(self, problems):
        self.problems = list(problems)
        text = "; ".join(f"{path}: {msg}" for path, msg in self.problems)
        super().__init__(text)
