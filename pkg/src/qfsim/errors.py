"""Exception types shared across the simulator.

The CLI maps these onto exit codes: configuration problems exit 2,
calibration failures exit 3, anything else raised at runtime exits 4.
"""


class ConfigurationError(ValueError):
    """A rejected configuration: invalid field, rate mismatch, bad program."""


class CalibrationError(RuntimeError):
    """Delay or discriminant calibration could not be completed."""


class TrainingError(ValueError):
    """Discriminant training failed (degenerate or incomplete data)."""


class ProgramError(ConfigurationError):
    """A pulse program violates the sequencing rules."""
