"""Error types raised by the library.

Every failure mode that callers are expected to branch on gets its own type;
all of them derive from DynasepError so a bare `except DynasepError` catches
any domain failure without swallowing programming errors.
"""


class DynasepError(Exception):
    """Base class for all domain errors raised by this package."""


class NonTerminating(DynasepError):
    """A basic hypergeometric series was requested without a terminating
    numerator parameter (no q^{-N} with integer N >= 0)."""


class DivergentTerm(DynasepError):
    """A denominator factor of a hypergeometric series vanishes within the
    summation range."""


class DegenerateParameter(DynasepError):
    """A coefficient denominator of a duality kernel vanishes for the given
    parameters."""


class PoleHit(DynasepError):
    """A weight function was evaluated at a pole of its parameter domain."""


class NegativeRate(DynasepError):
    """A jump rate came out negative (dynamic symmetric processes outside
    their admissible parameter domain)."""


class IllegalMove(DynasepError):
    """A particle move that the exclusion constraints forbid."""


class IndexOutOfRange(DynasepError):
    """A site index outside the lattice (or outside the height function's
    admissible range) was requested."""


class DivisionByZero(DynasepError):
    """A normalizing quantity is exactly zero (e.g. the hyperbolic current's
    initial height bracket)."""
