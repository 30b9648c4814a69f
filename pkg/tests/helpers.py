"""Shared model-building shorthand for the tests."""

from pimsyn.model import CnnModel, model_from_dict


def layer(lid, kind, c_in, c_out, w, h, k=3, preds=None, fused=()):
    entry = {
        "id": lid, "kind": kind, "kernel": k,
        "in_channels": c_in, "out_channels": c_out,
        "out_width": w, "out_height": h,
        "predecessors": [lid - 1] if preds is None and lid > 1 else (preds or []),
    }
    if fused:
        entry["fused"] = list(fused)
    return entry


def conv(lid, c_in, c_out, w, h, k=3, preds=None, fused=()):
    return layer(lid, "conv", c_in, c_out, w, h, k, preds, fused)


def fc(lid, c_in, c_out, preds=None):
    return layer(lid, "fc", c_in, c_out, 1, 1, 1, preds)


def make_model(layers, name="test", wt_bits=8, act_bits=8) -> CnnModel:
    return model_from_dict({
        "format_version": 1,
        "name": name,
        "quantization": {"weights_bits": wt_bits, "activations_bits": act_bits},
        "layers": layers,
    })


def tiny2(wt_bits=8, act_bits=8) -> CnnModel:
    return make_model([
        conv(1, 3, 8, 8, 8),
        conv(2, 8, 8, 8, 8),
    ], name="tiny2", wt_bits=wt_bits, act_bits=act_bits)


def tiny3(wt_bits=8, act_bits=8) -> CnnModel:
    return make_model([
        conv(1, 3, 8, 8, 8),
        conv(2, 8, 16, 4, 4),
        fc(3, 256, 10),
    ], name="tiny3", wt_bits=wt_bits, act_bits=act_bits)


def desk5() -> CnnModel:
    """The five-layer desk-scale CNN used by the ablation/magnitude checks."""
    return make_model([
        conv(1, 3, 8, 16, 16, fused=("relu",)),
        conv(2, 8, 16, 8, 8, fused=("relu",)),
        conv(3, 16, 32, 8, 8, fused=("relu",)),
        conv(4, 32, 32, 4, 4, fused=("relu",)),
        fc(5, 512, 10),
    ], name="desk5", wt_bits=8, act_bits=8)
