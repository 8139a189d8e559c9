"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class QuadratureError(ArithmeticError):
    """Sphere quadrature did not reach the requested accuracy."""

    def __init__(self, achieved: float, required: float):
        self.achieved = achieved
        self.required = required
        super().__init__(
            f"sphere quadrature error {achieved:.3e} exceeds required {required:.1e}"
        )


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge where convergence is mandatory."""
