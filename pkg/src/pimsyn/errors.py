"""Exception hierarchy shared by all synthesis stages."""


class PimsynError(Exception):
    """Base class for every error raised by this package."""


class ModelValidationError(PimsynError):
    """A model description violates the schema."""

    def __init__(self, message, layer=None, field=None):
        self.layer = layer
        self.field = field
        prefix = ""
        if layer is not None:
            prefix += f"layer {layer}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)


class ModelGraphError(PimsynError):
    """The layer graph is ill-formed (forward references, cycles)."""


class UnsupportedLayerError(PimsynError):
    """Operation applied to a layer kind it does not support."""


class MissingParameterError(PimsynError):
    """A hardware parameter lookup has no configured value."""


class InfeasiblePrecisionError(PimsynError):
    """Required ADC resolution exceeds the configured range."""


class InfeasibleBudgetError(PimsynError):
    """Crossbar budget cannot hold one copy of every layer."""

    def __init__(self, message, shortfall=0):
        self.shortfall = shortfall
        super().__init__(message)


class InfeasiblePartitionError(PimsynError):
    """No valid macro partitioning exists for the given inputs."""


class InfeasiblePeripheralPowerError(PimsynError):
    """Peripheral power budget cannot cover the minimum allocation."""


class DegenerateWorkloadError(PimsynError):
    """Component allocation requested for an all-zero workload."""


class GraphCycleError(PimsynError):
    """A dataflow graph that must be acyclic contains a cycle."""


class SchedulingError(PimsynError):
    """The event-driven simulation could not make progress."""


class GlobalInfeasibilityError(PimsynError):
    """No design point in the whole exploration space is feasible."""
