from .group import (
    ATTR_TAG_DELTA,
    ATTR_TAG_HAT,
    ATTR_TAG_PLAIN,
    CONTEXT,
    DecodeError,
    GroupElem,
    PairingContext,
    Scalar,
    TargetElem,
    default_rng,
    encode_attr_tag,
    hash_to_group,
    hash_to_scalar,
    map_target_to_group,
    pair,
    random_element,
    random_scalar,
    random_target,
    random_unit_product,
)
from .metrics import COUNTER_NAMES, OpCounts, count_ops
from .params import ORDER

__all__ = [
    "ATTR_TAG_DELTA",
    "ATTR_TAG_HAT",
    "ATTR_TAG_PLAIN",
    "CONTEXT",
    "COUNTER_NAMES",
    "DecodeError",
    "GroupElem",
    "ORDER",
    "OpCounts",
    "PairingContext",
    "Scalar",
    "TargetElem",
    "count_ops",
    "default_rng",
    "encode_attr_tag",
    "hash_to_group",
    "hash_to_scalar",
    "map_target_to_group",
    "pair",
    "random_element",
    "random_scalar",
    "random_target",
    "random_unit_product",
]
