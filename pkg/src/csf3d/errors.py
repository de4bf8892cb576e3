"""Exception types raised across the package."""


class CSFError(Exception):
    """Base class for all errors raised by csf3d."""


class InvalidArgumentError(CSFError, ValueError):
    pass


class DegenerateParametrizationError(CSFError):
    """Parametrization speed |u'| fell below the regularity floor."""


class InflectionDegeneracyError(CSFError):
    """|u'' x u'| vanishes (relative to |u'|^3) so the Frenet frame is undefined."""

    def __init__(self, node, message=None):
        self.node = int(node)
        super().__init__(message or f"Frenet frame undefined at node {self.node} (u'' parallel to u')")


class StepFailureError(CSFError):
    """A time step produced a non-finite or irregular curve."""


class InvalidTimeError(CSFError, ValueError):
    pass


class InsufficientDataError(CSFError):
    pass


class InvalidTrajectoryError(CSFError, ValueError):
    pass


class InvalidFrameError(CSFError, ValueError):
    pass


class ScenarioError(CSFError, ValueError):
    pass


class PastSingularityError(CSFError, ValueError):
    pass


class ConfigError(CSFError, ValueError):
    pass
