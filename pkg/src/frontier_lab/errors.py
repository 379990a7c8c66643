"""Exception taxonomy shared across the library."""


class FrontierLabError(Exception):
    """Base class for library errors."""


class DomainError(FrontierLabError, ValueError):
    """Evaluation outside a curve's domain, or a nonpositive power/log base."""


class ParamError(FrontierLabError, ValueError):
    """Arguments violate an operation's precondition."""


class QuadratureFailure(FrontierLabError, RuntimeError):
    """Adaptive quadrature could not reach the requested tolerance."""


class SeriesDivergenceGuard(FrontierLabError, RuntimeError):
    """Eigenseries truncation cap hit before the tolerance was met."""


class DegenerateFit(FrontierLabError, ValueError):
    """Regression input has too few usable rows or no spread."""


class BudgetExceeded(FrontierLabError, RuntimeError):
    """A simulation exceeded its population budget."""


class ConfigError(FrontierLabError, ValueError):
    """Experiment configuration is invalid."""
