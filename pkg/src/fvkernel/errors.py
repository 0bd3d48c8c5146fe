"""Exception types raised across the package."""


class FVKernelError(Exception):
    """Base class for all package errors."""


class SizeError(FVKernelError, ValueError):
    """A requested matrix representation exceeds the dimension guard."""


class ValidationError(FVKernelError, ValueError):
    """An input violates a documented invariant."""


class DivergenceError(FVKernelError, ValueError):
    """A bosonic quantity was requested at infinite temperature (coth pole)."""
