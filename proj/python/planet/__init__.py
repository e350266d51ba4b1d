"""Text-to-aerial-image geo-localization with physical signature supervision."""

from ._core import (
    Model,
    PlanetError,
    cosine_lr,
    decode_ppm,
    encode_ppm,
    haversine,
    info_nce,
    itc_loss,
    load_checkpoint,
    localization_at,
    make_synthetic,
    mine_signature,
    phy_loss,
    recall_at_k,
    run_cli,
    similarity_matrix,
    total_loss,
)

__all__ = [
    "Model",
    "PlanetError",
    "cosine_lr",
    "decode_ppm",
    "encode_ppm",
    "haversine",
    "info_nce",
    "itc_loss",
    "load_checkpoint",
    "localization_at",
    "make_synthetic",
    "mine_signature",
    "phy_loss",
    "recall_at_k",
    "run_cli",
    "similarity_matrix",
    "total_loss",
]
