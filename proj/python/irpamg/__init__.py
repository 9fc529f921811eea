"""Point-prompted mask generation for infrared small targets."""

from ._irpamg import (
    DataError,
    NoEnergyPeak,
    boundary_b,
    decode_rle,
    encode_rle,
    energy,
    generate_mask,
    geometry_errors,
    guided_mask,
    iou,
    pd_fa,
    satisfaction_ratio,
    synthetic_suite,
)

__all__ = [
    "DataError",
    "NoEnergyPeak",
    "boundary_b",
    "decode_rle",
    "encode_rle",
    "energy",
    "generate_mask",
    "geometry_errors",
    "guided_mask",
    "iou",
    "pd_fa",
    "satisfaction_ratio",
    "synthetic_suite",
]
