"""Exception hierarchy shared by every module."""


class FiberOrientError(Exception):
    """Base class for all package errors."""


class ConfigError(FiberOrientError, ValueError):
    """Invalid model, closure or flow configuration."""


class UnknownKind(ConfigError):
    """An unrecognised closure, model or flow tag."""


class DegenerateEigenvalues(FiberOrientError):
    """Eigenvector sensitivities requested at (near) repeated eigenvalues."""

    def __init__(self, gap, tol):
        super().__init__(f"eigenvalue gap {gap:.3e} below tolerance {tol:.1e}")
        self.gap = gap
        self.tol = tol


class ClosureSingularity(FiberOrientError):
    """A closure formula hit a vanishing denominator."""


class ZeroShearRate(FiberOrientError):
    """A model needs a non-zero scalar strain rate."""


class SingularJacobian(FiberOrientError):
    """The Newton system could not be solved, even after augmentation."""


class NonFiniteState(FiberOrientError):
    """The integrated state became NaN or infinite."""

    def __init__(self, time):
        super().__init__(f"non-finite orientation state at t = {time:.6g}")
        self.time = time
