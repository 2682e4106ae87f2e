"""Convert pretrained torch conv stacks into the weight-archive format.

`convert_module` walks any Conv2d/ReLU/MaxPool2d/LocalResponseNorm
sequence, so both AlexNet lineages export: the two-column original
(grouped convs, LRN, conv depths 96/256/384/384/256, feature length 1376)
and the single-column library variant (depths 64/192/384/256/256, feature
length 1152). `export_pretrained` fetches the library variant through
torchvision; the grouped original has no public torchvision weights, so
it must come in as a module via `convert_module`.
"""

from pathlib import Path

import numpy as np

from .writer import write_blob, write_descriptor

# normalization used when the torchvision weights were trained
_IMAGENET_MEANS = [0.485, 0.456, 0.406]
_IMAGENET_STDS = [0.229, 0.224, 0.225]


class ModelUnavailable(RuntimeError):
    """Pretrained weights cannot be obtained in this environment."""


def _square(value, what: str) -> int:
    if isinstance(value, (tuple, list)):
        if len(set(value)) != 1:
            raise ValueError(f"{what} must be square, got {value}")
        return int(value[0])
    return int(value)


def convert_module(features, out_dir, name: str, means, stds, metadata=None) -> int:
    """Export an in-memory conv stack; returns the feature length.

    `features` is iterated in order; anything other than Conv2d, ReLU,
    MaxPool2d, or LocalResponseNorm is rejected, because silently skipping
    a layer would change every activation after it.
    """
    import torch.nn as nn

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    layers = []
    depths = []
    conv_idx = 0
    for module in features:
        if isinstance(module, nn.Conv2d):
            conv_idx += 1
            stride = _square(module.stride, "stride")
            pad = _square(module.padding, "padding")
            if _square(module.dilation, "dilation") != 1:
                raise ValueError("dilated convolutions are not supported")
            oc, ic = module.out_channels, module.in_channels
            kh, kw = module.kernel_size
            weights = module.weight.detach().cpu().numpy()
            if module.bias is not None:
                bias = module.bias.detach().cpu().numpy()
            else:
                bias = np.zeros(oc, dtype=np.float32)
            wname = f"conv{conv_idx}_weight.bin"
            bname = f"conv{conv_idx}_bias.bin"
            write_blob(out / wname, weights, (oc, ic // module.groups, kh, kw))
            write_blob(out / bname, bias, (oc,))
            record = {
                "kind": "conv",
                "in": ic,
                "out": oc,
                "kh": kh,
                "kw": kw,
                "stride": stride,
                "pad": pad,
            }
            if module.groups != 1:
                record["groups"] = module.groups
            record["weights_file"] = wname
            record["bias_file"] = bname
            layers.append(record)
            depths.append(oc)
        elif isinstance(module, nn.ReLU):
            layers.append({"kind": "relu"})
        elif isinstance(module, nn.MaxPool2d):
            if _square(module.padding, "pool padding") != 0:
                raise ValueError("padded pooling is not supported")
            layers.append(
                {
                    "kind": "maxpool",
                    "window": _square(module.kernel_size, "pool window"),
                    "stride": _square(module.stride, "pool stride"),
                }
            )
        elif isinstance(module, nn.LocalResponseNorm):
            layers.append(
                {
                    "kind": "lrn",
                    "n": int(module.size),
                    "alpha": float(module.alpha),
                    "beta": float(module.beta),
                    "k": float(module.k),
                }
            )
        else:
            raise ValueError(f"unsupported layer {type(module).__name__}")

    feature_length = sum(depths)
    meta = {
        "generator": "pretrained",
        "conv_depths": depths,
        "feature_length": feature_length,
    }
    if metadata:
        meta.update(metadata)
    write_descriptor(
        out,
        {
            "name": name,
            "input_normalization": {
                "means": list(means),
                "stds": list(stds),
            },
            "layers": layers,
            "metadata": meta,
        },
    )
    return feature_length


def export_pretrained(model_name: str, out_dir) -> int:
    """Fetch a named pretrained model and export its conv stack.

    Prints and returns the feature length (sum of conv depths).
    """
    if model_name == "alexnet_grouped":
        raise ModelUnavailable(
            "the grouped two-column variant has no public torchvision "
            "weights; load it yourself and call convert_module"
        )
    if model_name != "alexnet":
        raise ModelUnavailable(f"unknown model '{model_name}'")
    try:
        from torchvision import models
    except ImportError as exc:
        raise ModelUnavailable(f"torchvision not installed: {exc}") from exc
    try:
        model = models.alexnet(weights=models.AlexNet_Weights.DEFAULT)
    except Exception as exc:  # no cache and no way to download
        raise ModelUnavailable(f"cannot obtain pretrained weights: {exc}") from exc
    model.eval()
    n = convert_module(
        model.features,
        out_dir,
        name="alexnet",
        means=_IMAGENET_MEANS,
        stds=_IMAGENET_STDS,
        metadata={"variant": "single_column_library"},
    )
    print(f"feature length {n}")
    return n
