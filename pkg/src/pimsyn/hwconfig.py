"""Device/component parameters and the discrete design-variable domains.

Defaults live in ``data/isaac_like.json``.  Figures for the crossbar, DAC,
ADC, eDRAM scratchpad and NoC follow published crossbar-accelerator
parameter sets; values without a public per-configuration breakdown
(intermediate ADC resolutions, ALU rates) are interpolated defaults and are
user-overridable through the parameter file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

from .errors import InfeasiblePrecisionError, MissingParameterError, ModelValidationError

DEFAULT_PARAMS_RESOURCE = "isaac_like.json"


@dataclass(frozen=True)
class AluParams:
    power_w: float
    freq_hz: float


@dataclass(frozen=True)
class HardwareParams:
    """Per-component power/rate/latency figures (a superset of the public table)."""

    crossbar_read_latency_s: float
    crossbar_power_w: dict[int, float]          # keyed by crossbar size
    crossbar_res_bits: tuple[int, ...]          # allowed cell resolutions
    dac_power_w: dict[int, float]               # keyed by DAC resolution
    adc_power_w: dict[int, float]               # keyed by ADC resolution bits
    adc_freq_hz: dict[int, float]               # samples/s per ADC
    alu: dict[str, AluParams]                   # shift_add / pool / relu / vector_add
    scratchpad_size_bytes: int
    scratchpad_bus_bits: int
    scratchpad_freq_hz: float
    scratchpad_port_power_w: float
    noc_flit_bits: int
    noc_ports: int
    noc_router_power_w: float
    noc_hop_latency_s: float
    noc_bandwidth_bits_s: float
    register_power_per_crossbar_w: float

    def crossbar_power(self, xb_size: int, res_rram: int) -> float:
        """Read power of one crossbar; non-decreasing in xb_size at fixed resolution."""
        if res_rram not in self.crossbar_res_bits:
            raise MissingParameterError(
                f"no crossbar configured for cell resolution {res_rram}")
        if xb_size not in self.crossbar_power_w:
            raise MissingParameterError(f"no crossbar configured for size {xb_size}")
        return self.crossbar_power_w[xb_size]

    def dac_power(self, res_dac: int) -> float:
        if res_dac not in self.dac_power_w:
            raise MissingParameterError(f"no DAC configured for resolution {res_dac}")
        return self.dac_power_w[res_dac]

    @property
    def adc_resolution_range(self) -> tuple[int, int]:
        bits = sorted(self.adc_power_w)
        return bits[0], bits[-1]

    def adc_power(self, bits: int) -> float:
        if bits not in self.adc_power_w:
            raise MissingParameterError(f"no ADC configured for {bits} bits")
        return self.adc_power_w[bits]

    def adc_freq(self, bits: int) -> float:
        if bits not in self.adc_freq_hz:
            raise MissingParameterError(f"no ADC rate configured for {bits} bits")
        return self.adc_freq_hz[bits]

    def required_adc_resolution(self, xb_size: int, res_rram: int, res_dac: int) -> int:
        """Lossless ADC resolution for a crossbar column: log2(rows) + cell bits
        + input bits - 2, clamped up to the configured minimum.  Exceeding the
        configured maximum rejects the design point (no silent precision loss).
        """
        rows_log = int(round(math.log2(xb_size)))
        if 2 ** rows_log != xb_size:
            raise MissingParameterError(f"crossbar size {xb_size} is not a power of two")
        lo, hi = self.adc_resolution_range
        bits = rows_log + res_rram + res_dac - 2
        if bits < lo:
            return lo
        if bits > hi:
            raise InfeasiblePrecisionError(
                f"(xb_size={xb_size}, res_rram={res_rram}, res_dac={res_dac}) needs a "
                f"{bits}-bit ADC; configured maximum is {hi}")
        return bits


@dataclass(frozen=True)
class DseDomains:
    """Discrete domains of the explorable design variables."""

    ratio_rram: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
    xb_sizes: tuple[int, ...] = (128, 256, 512)
    res_rram: tuple[int, ...] = (1, 2, 4)
    res_dac: tuple[int, ...] = (1, 2, 4)
    sa_top_k: int = 30

    def __post_init__(self):
        if not (self.ratio_rram and self.xb_sizes and self.res_rram and self.res_dac):
            raise ModelValidationError("every DSE domain must be non-empty")
        if any(not 0.0 < r < 1.0 for r in self.ratio_rram):
            raise ModelValidationError("ratio_rram values must lie in (0, 1)")
        if self.sa_top_k < 1:
            raise ModelValidationError("sa_top_k must be positive")


def _positive(value, what):
    if not isinstance(value, (int, float)) or value <= 0:
        raise ModelValidationError(f"{what} must be strictly positive, got {value!r}")
    return float(value)


def hardware_from_dict(doc: dict) -> HardwareParams:
    xb = doc["crossbar"]
    dac = doc["dac"]
    adc = doc["adc"]
    alu = {
        name: AluParams(power_w=_positive(spec["power_w"], f"alu.{name}.power_w"),
                        freq_hz=_positive(spec["freq_hz"], f"alu.{name}.freq_hz"))
        for name, spec in doc["alu"].items()
    }
    pad = doc["scratchpad"]
    noc = doc["noc"]
    params = HardwareParams(
        crossbar_read_latency_s=_positive(xb["read_latency_s"], "crossbar latency"),
        crossbar_power_w={int(k): _positive(v, f"crossbar power[{k}]")
                          for k, v in xb["power_w"].items()},
        crossbar_res_bits=tuple(int(b) for b in xb["res_bits"]),
        dac_power_w={int(k): _positive(v, f"dac power[{k}]")
                     for k, v in dac["power_w"].items()},
        adc_power_w={int(k): _positive(v, f"adc power[{k}]")
                     for k, v in adc["power_w"].items()},
        adc_freq_hz={int(k): _positive(v, f"adc freq[{k}]")
                     for k, v in adc["freq_hz"].items()},
        alu=alu,
        scratchpad_size_bytes=int(pad["size_bytes"]),
        scratchpad_bus_bits=int(pad["bus_width_bits"]),
        scratchpad_freq_hz=_positive(pad["freq_hz"], "scratchpad freq"),
        scratchpad_port_power_w=_positive(pad["port_power_w"], "scratchpad power"),
        noc_flit_bits=int(noc["flit_size_bits"]),
        noc_ports=int(noc["num_ports"]),
        noc_router_power_w=_positive(noc["router_power_w"], "router power"),
        noc_hop_latency_s=_positive(noc["hop_latency_s"], "hop latency"),
        noc_bandwidth_bits_s=_positive(noc["bandwidth_bits_s"], "NoC bandwidth"),
        register_power_per_crossbar_w=_positive(
            doc["register"]["power_per_crossbar_w"], "register power"),
    )
    lo, hi = params.adc_resolution_range
    for bits in range(lo, hi + 1):
        if bits not in params.adc_power_w or bits not in params.adc_freq_hz:
            raise ModelValidationError(
                f"ADC tables must cover every resolution in [{lo}, {hi}]; {bits} missing")
    return params


def load_hw_params(path=None) -> HardwareParams:
    """Load a hardware parameter file, or the packaged defaults when path is None."""
    if path is None:
        text = resources.files("pimsyn.data").joinpath(DEFAULT_PARAMS_RESOURCE).read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return hardware_from_dict(json.loads(text))
