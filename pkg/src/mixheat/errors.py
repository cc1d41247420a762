"""Exception hierarchy shared by all mixheat modules."""


class MixHeatError(Exception):
    """Base class for every error raised by mixheat."""


class GridMismatch(MixHeatError, ValueError):
    pass


class SymmetryViolation(MixHeatError, ValueError):
    """Inverse transform produced a non-negligible imaginary part."""


class InvalidOrder(MixHeatError, ValueError):
    pass


class UnresolvedKernel(MixHeatError, ValueError):
    """Mollifier scale is below two grid cells."""


class KernelTooWide(MixHeatError, ValueError):
    """Mollifier support does not fit in half the periodic box."""


class PositivityViolation(MixHeatError, ValueError):
    pass


class InsufficientSamples(MixHeatError, ValueError):
    pass


class CostGuard(MixHeatError, ValueError):
    pass


class SupportViolation(MixHeatError, ValueError):
    pass


class CgDivergence(MixHeatError, RuntimeError):
    """Conjugate gradients did not reach the requested tolerance."""

    def __init__(self, residual, iterations, step=None):
        self.residual = float(residual)
        self.iterations = int(iterations)
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(
            f"CG did not converge{where}: relative residual {self.residual:.3e} "
            f"after {self.iterations} iterations"
        )


class TraceMismatch(MixHeatError, ValueError):
    pass


class NotRegularData(MixHeatError, ValueError):
    pass


class NetAborted(MixHeatError, RuntimeError):
    """More than half of the members of an epsilon net failed."""

    def __init__(self, failures):
        self.failures = dict(failures)
        detail = ", ".join(f"eps={e:g}: {msg}" for e, msg in self.failures.items())
        super().__init__(f"{len(self.failures)} net members failed ({detail})")


class ConfigError(MixHeatError, ValueError):
    """Raised by the config parser; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


class IoError(MixHeatError, OSError):
    pass
