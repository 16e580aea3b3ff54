"""Exception hierarchy shared across the engine."""


class AnmError(Exception):
    """Base class for all engine errors."""


# --- network document parsing ---

class MalformedDocument(AnmError):
    """The network document is not syntactically valid."""


class MissingSection(AnmError):
    """A required top-level section is absent from the network document."""

    def __init__(self, section: str):
        super().__init__(f"missing required section '{section}'")
        self.section = section


class BadField(AnmError):
    """A row has the wrong arity or a non-numeric entry."""


# --- power flow ---

class SingularBranch(AnmError):
    """A branch with zero series impedance cannot enter the admittance matrix."""


class PowerFlowDiverged(AnmError):
    """The Newton-Raphson iteration failed to converge."""

    def __init__(self, message: str, iterations: int = 0, max_mismatch: float = float("inf")):
        super().__init__(message)
        self.iterations = iterations
        self.max_mismatch = max_mismatch


# --- simulation ---

class ArityMismatch(AnmError):
    """An action or variable vector has the wrong length."""


class DivergedState(AnmError):
    """Operation requires a converged transition outcome."""


# --- environment ---

class InvalidConfig(AnmError):
    """An environment configuration field is out of contract."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InitStateInfeasible(AnmError):
    """The initial state violates bounds or its power flow diverges."""


class NotReset(AnmError):
    """reset() must be called before stepping or rendering."""


class Closed(AnmError):
    """The environment has been closed."""


# --- reference task data ---

class ProfileFileMissing(AnmError):
    """The daily profile data file could not be found."""


class ProfileArityMismatch(AnmError):
    """A profile series does not match the declared steps per day."""


class ProfileChecksumMismatch(AnmError):
    """The profile file does not match its recorded SHA-256 digest."""
