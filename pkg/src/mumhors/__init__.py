"""Multiple-time HORS signatures with bitmap key management.

The signer keeps a 16-byte master key and a small two-dimensional bitmap of
unused key slots; the verifier holds the precomputed public keys and mirrors
the bitmap's bookkeeping. Repeated-index (weak) messages are repaired with
pad XORs and a fallback counter before any key is revealed.
"""

from .errors import (
    CapacityError,
    DerivationError,
    FormatError,
    MumhorsError,
    NoSolutionError,
    ParameterError,
)
from .params import (
    EnergyModel,
    RowThresholdQuery,
    RowThresholdResult,
    SchemeParams,
    bitmap_size_bits,
    desk_params,
    energy_estimate,
    eucma_bound,
    message_capacity,
    default_params,
    public_key_store_bytes,
    solve_row_threshold,
)
from .signer import (
    IndexDerivation,
    Signature,
    SignerState,
    derive_indices,
    mum_kg,
    mum_sig,
    post_sign,
)
from .verifier import (
    PublicKeyStore,
    VerifyOutcome,
    hard_reset,
    mum_ver,
    post_verify,
    sca_verify,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "DerivationError",
    "EnergyModel",
    "FormatError",
    "IndexDerivation",
    "MumhorsError",
    "NoSolutionError",
    "ParameterError",
    "PublicKeyStore",
    "RowThresholdQuery",
    "RowThresholdResult",
    "SchemeParams",
    "Signature",
    "SignerState",
    "VerifyOutcome",
    "bitmap_size_bits",
    "derive_indices",
    "desk_params",
    "energy_estimate",
    "eucma_bound",
    "hard_reset",
    "message_capacity",
    "mum_kg",
    "mum_sig",
    "mum_ver",
    "default_params",
    "post_sign",
    "post_verify",
    "public_key_store_bytes",
    "sca_verify",
    "solve_row_threshold",
]
