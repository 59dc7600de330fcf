from .core import (
    AccessDenied,
    DimensionMismatch,
    OfflineCiphertextReused,
    SchemeError,
    anon_decrypt,
    anon_encrypt,
    attr_keygen,
    check_attr_key,
    decrypt_gate,
    derive_dk,
    encrypt_gate,
    epoch_secret,
    find_matching_gate,
    match_gate,
    offline_encrypt,
    online_encrypt,
    open_message,
    owner_param_setup,
    recover_dk,
    reenc_keygen,
    reencrypt,
    reencrypt_gates,
    reencrypt_messages,
    system_setup,
)
from .payload import PayloadError, open_payload, seal_payload
from .types import (
    AttrSecretKey,
    BlindGatePolicy,
    CloudCiphertext,
    DataDecryptionKey,
    DataPublicParams,
    DataSecretParams,
    EpochSecret,
    GateCiphertext,
    GatePair,
    MessageCiphertext,
    OfflineCiphertext,
    ReencKey,
    SystemMasterKey,
    SystemPublicKey,
    UserCiphertext,
)

__all__ = [
    "AccessDenied",
    "AttrSecretKey",
    "BlindGatePolicy",
    "CloudCiphertext",
    "DataDecryptionKey",
    "DataPublicParams",
    "DataSecretParams",
    "DimensionMismatch",
    "EpochSecret",
    "GateCiphertext",
    "GatePair",
    "MessageCiphertext",
    "OfflineCiphertext",
    "OfflineCiphertextReused",
    "PayloadError",
    "ReencKey",
    "SchemeError",
    "SystemMasterKey",
    "SystemPublicKey",
    "UserCiphertext",
    "anon_decrypt",
    "anon_encrypt",
    "attr_keygen",
    "check_attr_key",
    "decrypt_gate",
    "derive_dk",
    "encrypt_gate",
    "epoch_secret",
    "find_matching_gate",
    "match_gate",
    "offline_encrypt",
    "online_encrypt",
    "open_message",
    "open_payload",
    "owner_param_setup",
    "recover_dk",
    "reenc_keygen",
    "reencrypt",
    "reencrypt_gates",
    "reencrypt_messages",
    "seal_payload",
    "system_setup",
]
