"""Exception and warning types shared across the package."""


class SnlGameError(Exception):
    """Base class for package-specific errors."""


class GroundTruthRequired(SnlGameError):
    """An operation needed true node positions that the network lacks."""


class TooFewAnchors(SnlGameError):
    """Fewer anchors were requested than are needed to pin a frame in R^n."""


class NotRigid(SnlGameError):
    """A global-rigidity query was made on a framework that is not even rigid."""


class NotAPlayer(SnlGameError):
    """A payoff-side operation was addressed to an anchor node."""


class TooLarge(SnlGameError):
    """A brute-force request exceeded its cost guard."""


class IngestError(SnlGameError):
    """A CSV row could not be parsed. Carries the 1-based physical row number."""

    def __init__(self, row, message):
        super().__init__(f"row {row}: {message}")
        self.row = row


class RigidityGenerationFailed(SnlGameError):
    """Repeated random instances all failed the rigidity screens."""


class DisconnectedNodeWarning(UserWarning):
    """A node has no incident edge; it cannot constrain or be constrained."""
