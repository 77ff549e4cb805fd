"""Exception types shared across the package."""


class InquestError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(InquestError, ValueError):
    """Invalid schema, specification, world model or corpus input."""


class ContradictionError(InquestError, ValueError):
    """Evidence excludes every value the belief still considers possible."""


class EnumerationLimitError(InquestError, RuntimeError):
    """Brute-force enumeration would exceed the configured outcome cap."""


class GatewayError(InquestError, RuntimeError):
    """Text-generation gateway failure (configuration, transport or protocol)."""


class TrainingDivergedError(InquestError, RuntimeError):
    """Training produced a non-finite loss or parameter vector."""
