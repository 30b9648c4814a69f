"""CNN model ingestion: parse, validate and normalize layer descriptions.

The model file is a versioned JSON document listing layers in topological
order.  Only shapes and precisions are kept; weight values never enter the
tool.  Convolution and fully-connected layers are "weight bearing" and get
mapped onto crossbars; pool/relu/residual_add layers are ALU-only
pseudo-layers that borrow resources from a weight-bearing host layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ModelGraphError, ModelValidationError, UnsupportedLayerError

FORMAT_VERSION = 1

KIND_CONV = "conv"
KIND_FC = "fc"
KIND_POOL = "pool"
KIND_RELU = "relu"
KIND_RESIDUAL = "residual_add"

LAYER_KINDS = (KIND_CONV, KIND_FC, KIND_POOL, KIND_RELU, KIND_RESIDUAL)
WEIGHT_BEARING_KINDS = (KIND_CONV, KIND_FC)
FUSED_OPS = ("relu", "pool")


@dataclass(frozen=True)
class LayerSpec:
    """Shape, kind and precision of one layer; drives every sizing formula."""

    index: int                      # 1-based position in the model
    kind: str
    kernel: int                     # square kernel side (1 for fc/relu/residual)
    c_in: int
    c_out: int
    out_w: int
    out_h: int
    prec_wt: int
    prec_act: int
    predecessors: tuple[int, ...] = ()
    fused: tuple[str, ...] = ()

    @property
    def weight_bearing(self) -> bool:
        return self.kind in WEIGHT_BEARING_KINDS

    @property
    def out_positions(self) -> int:
        return self.out_w * self.out_h


@dataclass(frozen=True)
class CnnModel:
    """Ordered, validated layer list plus the weight-bearing sublist."""

    name: str
    layers: tuple[LayerSpec, ...]
    weight_bearing: tuple[LayerSpec, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "weight_bearing",
            tuple(l for l in self.layers if l.weight_bearing))

    def layer(self, index: int) -> LayerSpec:
        return self.layers[index - 1]

    def to_dict(self) -> dict:
        layers = []
        for l in self.layers:
            entry = {
                "id": l.index,
                "kind": l.kind,
                "kernel": l.kernel,
                "in_channels": l.c_in,
                "out_channels": l.c_out,
                "out_width": l.out_w,
                "out_height": l.out_h,
                "predecessors": list(l.predecessors),
            }
            if l.fused:
                entry["fused"] = list(l.fused)
            layers.append(entry)
        prec_wt = self.layers[0].prec_wt if self.layers else 16
        prec_act = self.layers[0].prec_act if self.layers else 16
        return {
            "format_version": FORMAT_VERSION,
            "name": self.name,
            "quantization": {"weights_bits": prec_wt, "activations_bits": prec_act},
            "layers": layers,
        }


def _require(cond, message, layer=None, fld=None):
    if not cond:
        raise ModelValidationError(message, layer=layer, field=fld)


def _int_field(entry, key, layer_id, minimum=1, maximum=None, default=None):
    value = entry.get(key, default)
    _require(value is not None, "missing", layer=layer_id, fld=key)
    _require(isinstance(value, int) and not isinstance(value, bool),
             "must be an integer", layer=layer_id, fld=key)
    _require(value >= minimum, f"must be >= {minimum}", layer=layer_id, fld=key)
    if maximum is not None:
        _require(value <= maximum, f"must be <= {maximum}", layer=layer_id, fld=key)
    return value


def model_from_dict(doc: dict) -> CnnModel:
    """Validate a parsed model document and build the CnnModel."""
    _require(isinstance(doc, dict), "model document must be an object")
    version = doc.get("format_version", FORMAT_VERSION)
    _require(version == FORMAT_VERSION, f"unsupported format_version {version}")
    name = doc.get("name", "unnamed")
    quant = doc.get("quantization", {})
    default_wt = quant.get("weights_bits", 16)
    default_act = quant.get("activations_bits", 16)

    raw_layers = doc.get("layers")
    _require(isinstance(raw_layers, list) and raw_layers, "'layers' must be a non-empty list")

    layers = []
    for pos, entry in enumerate(raw_layers, start=1):
        _require(isinstance(entry, dict), "layer entry must be an object", layer=pos)
        layer_id = entry.get("id", pos)
        _require(layer_id == pos,
                 f"ids must be contiguous from 1 (expected {pos}, got {layer_id})",
                 layer=pos, fld="id")
        kind = entry.get("kind")
        _require(kind in LAYER_KINDS, f"unknown kind {kind!r}", layer=pos, fld="kind")

        kernel = _int_field(entry, "kernel", pos, default=1)
        c_in = _int_field(entry, "in_channels", pos)
        c_out = _int_field(entry, "out_channels", pos)
        out_w = _int_field(entry, "out_width", pos)
        out_h = _int_field(entry, "out_height", pos)
        prec_wt = _int_field(entry, "weights_bits", pos, maximum=32, default=default_wt)
        prec_act = _int_field(entry, "activations_bits", pos, maximum=32, default=default_act)

        if kind == KIND_FC:
            _require(kernel == 1 and out_w == 1 and out_h == 1,
                     "fc layers are 1x1 convs on a 1x1 map "
                     "(kernel = out_width = out_height = 1)", layer=pos)

        preds = entry.get("predecessors", [pos - 1] if pos > 1 else [])
        _require(isinstance(preds, list), "must be a list", layer=pos, fld="predecessors")
        for p in preds:
            _require(isinstance(p, int) and not isinstance(p, bool),
                     "predecessor ids must be integers", layer=pos, fld="predecessors")
            if p >= pos:
                raise ModelGraphError(
                    f"layer {pos} references predecessor {p}; the layer list must be "
                    "in topological order (predecessors strictly lower-indexed)")
            _require(p >= 1, "predecessor ids start at 1", layer=pos, fld="predecessors")

        fused = tuple(entry.get("fused", []))
        for op in fused:
            _require(op in FUSED_OPS, f"unknown fused op {op!r}", layer=pos, fld="fused")
        if fused:
            _require(kind in WEIGHT_BEARING_KINDS,
                     "fused ops are only allowed on conv/fc layers", layer=pos, fld="fused")

        layers.append(LayerSpec(
            index=pos, kind=kind, kernel=kernel, c_in=c_in, c_out=c_out,
            out_w=out_w, out_h=out_h, prec_wt=prec_wt, prec_act=prec_act,
            predecessors=tuple(preds), fused=fused))

    model = CnnModel(name=name, layers=tuple(layers))
    _require(len(model.weight_bearing) >= 1, "model has no weight-bearing layer")
    return model


def load_model(path) -> CnnModel:
    """Load and validate a model file; pure function of the file bytes."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelValidationError(f"not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def save_model(model: CnnModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def macs_per_layer(layer: LayerSpec) -> int:
    """Multiply-accumulates of one weight-bearing layer."""
    if not layer.weight_bearing:
        raise UnsupportedLayerError(
            f"layer {layer.index} ({layer.kind}) carries no weights")
    return layer.kernel * layer.kernel * layer.c_in * layer.c_out * layer.out_w * layer.out_h


def total_macs(model: CnnModel) -> int:
    return sum(macs_per_layer(l) for l in model.weight_bearing)
