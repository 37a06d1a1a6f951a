"""Exception taxonomy shared by the whole package.

The CLI maps these onto exit codes: malformed input (2), semantic
validation failures (3), resource caps (4). Library code raises them
directly so the mapping stays in one place.
"""


class InputFormatError(ValueError):
    """Input could not be parsed (bad JSON, bad rational literal, ...)."""


class ValidationError(ValueError):
    """Input parsed but violates a semantic contract.

    Examples: elements of mismatched algebras, morphism images outside
    the first layer, a direct-system triangle that does not commute.
    """


class ResourceCapError(RuntimeError):
    """A configured size or budget cap was exceeded; message names the cap."""
