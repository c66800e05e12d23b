"""Reversible data hiding with dual-predictor 2D prediction-error histograms."""
from .codec import (
    EmbedConfig,
    LayerReport,
    StegoImage,
    capacity_estimate,
    embed,
    embed_cpee,
    embed_mhm,
    extract,
    extract_cpee,
    extract_mhm,
    psnr,
    random_payload,
)
from .errors import (
    AuxOverflowError,
    CapacityError,
    CorruptionError,
    DimensionError,
    InfeasibleError,
    PGMDecodeError,
    RDHError,
    SerializationError,
)
from .pixels import GrayImage, load_image, read_pgm, save_image, write_pgm
from .predictors import PredictorPair

__all__ = [
    "AuxOverflowError", "CapacityError", "CorruptionError", "DimensionError", "EmbedConfig",
    "GrayImage", "InfeasibleError", "LayerReport", "PGMDecodeError", "PredictorPair", "RDHError",
    "SerializationError", "StegoImage", "capacity_estimate", "embed", "embed_cpee", "embed_mhm",
    "extract", "extract_cpee", "extract_mhm", "load_image", "psnr", "random_payload", "read_pgm",
    "save_image", "write_pgm",
]
