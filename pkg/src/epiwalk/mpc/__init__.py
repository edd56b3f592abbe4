"""Privacy-preserving multi-agency graph assembly and encrypted walks."""

from .transcript import Message, Transcript
from .paillier import (
    PaillierPublicKey,
    DecryptionShare,
    keygen_joint,
    encrypt,
    add_encrypted,
    scalar_mul,
    partial_decrypt,
    combine_partials,
    decrypt_joint,
)
from .fixedpoint import FixedPointParams, fixed_encode, fixed_decode, reciprocal_fixed
from .psi import psi, GROUP_PRIME, GROUP_ORDER
from .agencies import (
    AgencyShare,
    pairwise_intersections,
    LabelSpace,
    WalkResult,
    assign_labels,
    dedup_edges,
    shared_degree_sum,
    joint_degrees,
    distributed_walk,
    plaintext_fixed_walk,
)

__all__ = [
    "Message",
    "Transcript",
    "PaillierPublicKey",
    "DecryptionShare",
    "keygen_joint",
    "encrypt",
    "add_encrypted",
    "scalar_mul",
    "partial_decrypt",
    "combine_partials",
    "decrypt_joint",
    "FixedPointParams",
    "fixed_encode",
    "fixed_decode",
    "reciprocal_fixed",
    "psi",
    "GROUP_PRIME",
    "GROUP_ORDER",
    "AgencyShare",
    "pairwise_intersections",
    "LabelSpace",
    "WalkResult",
    "assign_labels",
    "dedup_edges",
    "shared_degree_sum",
    "joint_degrees",
    "distributed_walk",
    "plaintext_fixed_walk",
]
