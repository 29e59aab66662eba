"""Exception types shared across the package."""


class GreedyExpansionError(Exception):
    """Base class for all package-specific errors."""


class EmptyVectorError(GreedyExpansionError):
    """Raised when a selection oracle is queried with an empty vector."""


class NoAdmissibleAtomError(GreedyExpansionError):
    """A scripted atom fails the weak selection inequality."""


class IndexPastEndError(GreedyExpansionError):
    """An explicit sequence or selection plan was evaluated past its length."""


class ZeroAtomError(GreedyExpansionError):
    """A dictionary atom was supplied with norm below the renormalization floor."""


class SupportOutsideEPrimeError(GreedyExpansionError):
    """An augmenting atom touches a coordinate outside the declared index set."""


class NotOrthogonalError(GreedyExpansionError):
    """A pushforward matrix deviates from orthogonality beyond tolerance."""


class ConfigInvalidError(GreedyExpansionError):
    """A configuration object violates its invariants or cannot be parsed."""


class PreconditionUnmetError(GreedyExpansionError):
    """A verification was requested on a trace window where it does not apply."""


class PlanConstructionError(GreedyExpansionError):
    """The adversarial plan builder could not satisfy one of its postconditions."""


class UnknownAtomError(GreedyExpansionError):
    """An atom id does not belong to the dictionary it was resolved against."""
