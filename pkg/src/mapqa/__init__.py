"""mapqa: full-reference image quality assessment from CNN activation maps.

Pipeline: run a reference/distorted image pair through a convolutional
network, compare the paired activation maps channel by channel with a
classical similarity metric, concatenate the per-layer similarity vectors
into a feature vector, and regress that onto subjective quality scores.

The usual entry points:

    from mapqa import load_archive, extract_pair, train_svr, predict
    from mapqa.synthetic import generate_dataset
"""

from .archive import NetworkDescriptor, load_archive, run_network
from .dataset import DatasetManifest, decode_image, load_manifest, normalize_mos
from .evaluation import (
    EvaluationReport,
    Logistic5Params,
    apply_logistic5,
    evaluate,
    fit_logistic5,
    krocc,
    make_splits,
    mapped_plcc,
    plcc,
    significance,
    srocc,
)
from .features import (
    FeatureVector,
    extract_manifest,
    extract_pair,
    layer_features,
    read_features,
    write_features,
)
from .metrics import haarpsi, psnr, ssim
from .regression import (
    GprModel,
    SvrModel,
    load_model,
    predict,
    save_model,
    train_gpr,
    train_gpr_grid,
    train_svr,
)
from .rng import Rng, derive
from .synthetic import generate_dataset

__version__ = "0.1.0"

__all__ = [
    "NetworkDescriptor",
    "load_archive",
    "run_network",
    "DatasetManifest",
    "decode_image",
    "load_manifest",
    "normalize_mos",
    "EvaluationReport",
    "Logistic5Params",
    "apply_logistic5",
    "evaluate",
    "fit_logistic5",
    "krocc",
    "make_splits",
    "mapped_plcc",
    "plcc",
    "significance",
    "srocc",
    "FeatureVector",
    "extract_manifest",
    "extract_pair",
    "layer_features",
    "read_features",
    "write_features",
    "haarpsi",
    "psnr",
    "ssim",
    "GprModel",
    "SvrModel",
    "load_model",
    "predict",
    "save_model",
    "train_gpr",
    "train_gpr_grid",
    "train_svr",
    "Rng",
    "derive",
    "generate_dataset",
    "__version__",
]
