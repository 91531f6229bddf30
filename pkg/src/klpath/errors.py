"""Exception types shared across the package."""


class KlpathError(Exception):
    """Base class for all library-specific errors."""


class NotInvertible(KlpathError):
    """A residue shares a factor with the modulus and has no inverse.

    For batch operations, ``index`` locates the offending entry.
    """

    def __init__(self, value: int, modulus: int, index: int | None = None):
        self.value = value
        self.modulus = modulus
        self.index = index
        where = "" if index is None else f" at index {index}"
        super().__init__(f"{value} is not invertible modulo {modulus}{where}")


class NotCoprime(KlpathError):
    """An argument required to be coprime to p is divisible by p."""


class PrecisionUnsupported(KlpathError):
    """The p-adic series coefficients are not defined at this (p, n)."""


class PreconditionViolated(KlpathError):
    """An operation was called outside its stated domain."""


class DegeneratePolynomial(KlpathError):
    """The polynomial vanishes identically modulo p; lifting is unbounded."""


class UnsupportedRegime(KlpathError):
    """The closed form does not exist for these (p, n)."""


class DomainError(KlpathError):
    """A real argument lies outside its stated interval."""


class ResourceLimit(KlpathError):
    """The request exceeds a desk-scale resource guard."""


class PatternCollision(KlpathError):
    """Shift pattern has colliding support residues modulo p."""
