"""Local-domain image editing: geometric priors, patch translation GANs,
mask-VAE interpolation, and a reproducible recipe pipeline."""

from .config import TaskConfig, default_config, load_task_config, save_task_config
from .errors import LocaldomError
from .manifest import DatasetManifest, load_manifest, save_manifest
from .patches import MaskPatchSet, Patch, PatchSet, PatchSpec, extract_patches
from .pipeline import run_recipe
from .priors import (
    CenterFocusRule,
    GeometricPrior,
    LaneBandRule,
    LocalDomainId,
    SemanticMapRule,
    build_prior,
    indicator_mask,
)
from .synth import make_synthetic_dataset
from .translator import TranslatorBundle, hallucinate, load_bundle, save_bundle, translate
from .vae import MaskVae, blend, interpolate_latent, train_mask_vae

__version__ = "0.1.0"

__all__ = [
    "CenterFocusRule",
    "DatasetManifest",
    "GeometricPrior",
    "LaneBandRule",
    "LocalDomainId",
    "LocaldomError",
    "MaskPatchSet",
    "MaskVae",
    "Patch",
    "PatchSet",
    "PatchSpec",
    "SemanticMapRule",
    "TaskConfig",
    "TranslatorBundle",
    "blend",
    "build_prior",
    "default_config",
    "extract_patches",
    "hallucinate",
    "indicator_mask",
    "interpolate_latent",
    "load_bundle",
    "load_manifest",
    "load_task_config",
    "make_synthetic_dataset",
    "run_recipe",
    "save_bundle",
    "save_manifest",
    "save_task_config",
    "train_mask_vae",
    "translate",
    "__version__",
]
