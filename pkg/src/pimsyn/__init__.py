"""pimsyn: synthesize crossbar PIM CNN accelerators under a power budget.

Pipeline: model ingestion -> weight duplication (SA filter) -> dataflow
compilation to an IR DAG -> macro partitioning (EA) -> peripheral component
allocation (closed-form min-max) -> cycle-level simulation, all wrapped in a
design-space exploration that maximizes power efficiency.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .dse import DseConfig, DesignPoint, DseResult, run_dse
from .evaluator import EvalResult, simulate
from .hwconfig import DseDomains, HardwareParams, load_hw_params
from .model import CnnModel, LayerSpec, load_model, macs_per_layer

__version__ = "0.1.0"

__all__ = [
    "CnnModel", "LayerSpec", "load_model", "macs_per_layer",
    "HardwareParams", "DseDomains", "load_hw_params",
    "DseConfig", "DesignPoint", "DseResult", "run_dse",
    "EvalResult", "simulate", "KERNEL_BACKEND", "__version__",
]
