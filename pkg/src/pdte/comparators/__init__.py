"""Non-interactive private comparison operators."""

from .folklore import (
    PackedBitsQuery,
    bits_encode_packed,
    folklore_capacity,
    folklore_gt,
    folklore_lt,
)
from .rcc import (
    PackedOurcQuery,
    PackedPePlain,
    arith_cw_eq,
    default_hamming_weight,
    ourc_encode_packed,
    pe_encode_packed,
    rcc_capacity,
    rcc_compare,
)
from .slots import balanced_product, inner_block_sum
from .xcmp import (
    LimbQuery,
    encode_limb_query,
    limb_decompose,
    xcmp0_gt,
    xcmp_leq,
    xxcmp_gt,
    xxcmp_limbs,
)

__all__ = [
    "PackedBitsQuery",
    "bits_encode_packed",
    "folklore_capacity",
    "folklore_gt",
    "folklore_lt",
    "PackedOurcQuery",
    "PackedPePlain",
    "arith_cw_eq",
    "default_hamming_weight",
    "ourc_encode_packed",
    "pe_encode_packed",
    "rcc_capacity",
    "rcc_compare",
    "balanced_product",
    "inner_block_sum",
    "LimbQuery",
    "encode_limb_query",
    "limb_decompose",
    "xcmp0_gt",
    "xcmp_leq",
    "xxcmp_gt",
    "xxcmp_limbs",
]
