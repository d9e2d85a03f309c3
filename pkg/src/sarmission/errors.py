"""Exception types shared across the mission engine."""


class SarError(Exception):
    """Base class for all errors raised by this package."""


class NetworkFormatError(SarError):
    """A network document failed schema validation; message carries node/row coordinates."""


class EvidenceError(SarError):
    """An evidence assignment references an unknown node or state label."""


class ZeroLikelihoodError(SarError):
    """The observed evidence has zero probability under every strategy."""


class EnumerationSizeError(SarError):
    """The joint state space is too large to enumerate explicitly."""


class ScenarioError(SarError):
    """A scenario document failed validation."""


class ReplayError(SarError):
    """A replay document is malformed or carries an unsupported schema version."""


class InvalidTransitionError(SarError):
    """A mission control command is not valid in the current lifecycle state."""


class ApprovalError(SarError):
    """An operator action targets an unknown or already-resolved approval."""
