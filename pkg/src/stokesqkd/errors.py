"""Exception hierarchy shared by all stokesqkd modules."""


class StokesQKDError(Exception):
    """Base class for every error raised by this package."""


class PolarizationTooWeak(StokesQKDError, ValueError):
    """A strong-polarization formula was requested for a weakly polarized state."""


class ZeroCarrier(StokesQKDError, ValueError):
    """Normalization by |alpha_x| is undefined because the carrier is empty."""


class ModulationTooLarge(StokesQKDError, ValueError):
    """An encoded state falls outside the strong-polarization regime."""


class PerfectLine(StokesQKDError, ZeroDivisionError):
    """n_B = 0: the cloner's matched-basis noise diverges."""


class InvalidTransmission(StokesQKDError, ValueError):
    """Line transmission outside (0, 1]."""


class InvalidGrid(StokesQKDError, ValueError):
    """Surface axis values out of domain, empty, or not ascending."""


class DegenerateSample(StokesQKDError, ValueError):
    """A sample has zero variance, so a correlation is undefined."""


class SampleTooSmall(StokesQKDError, ValueError):
    """Not enough samples for the requested statistic."""


class LengthError(StokesQKDError, ValueError):
    """Requested output length is outside [0, input length]."""


class SessionAborted(StokesQKDError):
    """A key-distribution session stopped before producing a key.

    The partially filled result and the complete transcript are attached so
    callers can still export them.
    """

    def __init__(self, message, result=None, transcript=None):
        super().__init__(message)
        self.result = result
        self.transcript = transcript


class InsecureChannel(SessionAborted):
    """Estimated I_AB - I_AE is not positive; no secret key can be distilled."""


class ReconciliationFailure(SessionAborted):
    """Verification hashes of Alice's and Bob's corrected labels differ."""
