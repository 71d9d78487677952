"""restain: stain unmixing, restaining and transfer evaluation for HER2 IHC tiles."""

__version__ = "0.1.0"

from restain.color import (
    ConcentrationMap,
    OdImage,
    ReferenceProfile,
    RgbTile,
    StainMatrix,
    deconvolve,
    linear_transfer,
    od_to_rgb,
    pseudo_inverse,
    recompose,
    rgb_to_od,
)
from restain.estimation import (
    EstimationConfig,
    EstimationResult,
    blend_profiles,
    estimate_stains,
    project_nonneg,
)
from restain.metrics import (
    CellLabelMap,
    EvalReport,
    F1Result,
    FeatureSummary,
    extract_features,
    frechet_distance,
    summarize,
    weighted_f1,
)
from restain.profiles import (
    builtin_profile,
    default_profile,
    load_profile,
    rotate_profile,
    save_profile,
)
from restain.synth import (
    CellSpec,
    SyntheticTile,
    classify_cells,
    generate_paired_domains,
    generate_tile,
)

__all__ = [
    "CellLabelMap",
    "CellSpec",
    "ConcentrationMap",
    "EstimationConfig",
    "EstimationResult",
    "EvalReport",
    "F1Result",
    "FeatureSummary",
    "OdImage",
    "ReferenceProfile",
    "RgbTile",
    "StainMatrix",
    "SyntheticTile",
    "blend_profiles",
    "builtin_profile",
    "classify_cells",
    "deconvolve",
    "default_profile",
    "estimate_stains",
    "extract_features",
    "frechet_distance",
    "generate_paired_domains",
    "generate_tile",
    "linear_transfer",
    "load_profile",
    "od_to_rgb",
    "project_nonneg",
    "pseudo_inverse",
    "recompose",
    "rgb_to_od",
    "rotate_profile",
    "save_profile",
    "summarize",
    "weighted_f1",
    "__version__",
]
