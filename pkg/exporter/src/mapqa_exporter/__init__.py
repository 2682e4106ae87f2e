"""Produce weight-archive directories for the activation-map IQA toolkit.

Two sources: a tiny seeded random network for CI (`export_toy`) and
pretrained AlexNet-family weights pulled through torchvision
(`export_pretrained`, plus `convert_module` for any conv/relu/pool/lrn
stack already in memory). Output is always the same on-disk format:
`network.json` plus one little-endian float32 blob per conv weight and
bias, weights in (out, in/groups, kh, kw) order.
"""

from .pretrained import ModelUnavailable, convert_module, export_pretrained
from .toy import export_toy

__all__ = [
    "ModelUnavailable",
    "convert_module",
    "export_pretrained",
    "export_toy",
]
