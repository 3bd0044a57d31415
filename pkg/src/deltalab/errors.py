"""Exception hierarchy shared by all modules."""


class DeltalabError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(DeltalabError, ValueError):
    """Invalid sizes, ranges or inconsistent inputs."""


class SupportError(ParameterError):
    """A potential or density does not fit inside the domain or grid."""


class SingularCorrectionError(DeltalabError):
    """The boundary correction h_z cannot be solved for (degenerate condition)."""

    def __init__(self, z, b, denominator):
        self.z = z
        self.b = b
        self.denominator = denominator
        super().__init__(
            f"boundary correction is singular at z={z!r}, b={b!r} "
            f"(denominator {denominator:.3e}); move z"
        )


class PoleError(DeltalabError):
    """A point-interaction coefficient has a vanishing denominator."""


class SpectralPointError(DeltalabError):
    """The spectral shift z sits (numerically) on the spectrum; move z."""


class ConvergenceError(DeltalabError):
    """An iterative method failed to converge."""

    def __init__(self, message, residual=None, iterate=None):
        self.residual = residual
        self.iterate = iterate
        super().__init__(message)


class NoResonanceError(DeltalabError):
    """No coupling makes -1 an eigenvalue of the Birman-Schwinger operator."""


class DegeneracyError(DeltalabError):
    """Eigenvalue -1 is not numerically simple."""


class OrthogonalResonanceError(DeltalabError):
    """The resonant eigenfunction is orthogonal to v."""


class NormalizationError(ParameterError):
    """A density does not integrate to one."""


class FitError(DeltalabError):
    """Rate fitting received unusable data."""
