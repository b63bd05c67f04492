"""Exception types shared across the package."""


class ModelError(ValueError):
    """A model component (pmf, channel, quantizer, kappa) is malformed."""


class PmfError(ModelError):
    """A probability tensor has negative entries or mass away from one."""


class ParamError(ValueError):
    """Typicality or optimizer parameters violate their required orderings."""


class CodebookSizeError(RuntimeError):
    """A requested codebook would exceed the configured size guard."""


class ExponentWindowError(RuntimeError):
    """The feasible window for a list exponent is empty at the given inputs."""
