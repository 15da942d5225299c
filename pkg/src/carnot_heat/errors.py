"""Exception types raised across the toolkit."""


class CarnotHeatError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(CarnotHeatError, ValueError):
    """An input has the wrong dimension for the group or lattice."""


class DomainError(CarnotHeatError, ValueError):
    """A scalar parameter is outside its admissible range."""


class UnknownGroupError(CarnotHeatError, KeyError):
    def __init__(self, name, available):
        self.name = name
        self.available = sorted(available)
        super().__init__(f"unknown group {name!r}; available groups: {', '.join(self.available)}")

    def __str__(self):
        return self.args[0]


class StencilError(CarnotHeatError, ValueError):
    """Lattice too coarse for the requested stencil."""


class UnsupportedOperation(CarnotHeatError, ValueError):
    pass


class AliasingError(CarnotHeatError, ValueError):
    """A convolution would wrap around the periodic box."""


class ResolutionError(CarnotHeatError, ValueError):
    """A kernel is too narrow to be resolved by the lattice."""


class SafeRegionError(CarnotHeatError, ValueError):
    """A translate of supported data leaves the periodic box."""


class CFLError(CarnotHeatError, ValueError):
    pass


class InnerSolveError(CarnotHeatError, RuntimeError):
    pass
