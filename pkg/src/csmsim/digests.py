"""Measurement digests and the canonical byte encoding they are computed over.

The digest algorithm is SHA-256 (an implementation constant, see README).
All multi-field inputs are folded through :func:`canonical_encode`, which
length-prefixes every field, so no two distinct input sequences share an
encoding. Measurements are order-sensitive by construction: extending a
measurement chains the previous digest into the next hash input.
"""

import hashlib

DIGEST_SIZE = 32

# Domain-separation tags keep the different digest uses from colliding.
_TAG_CONFIG = b"realm-config"
_TAG_DATA = b"realm-data"
_TAG_CONTENT = b"granule-content"
_TAG_PLATFORM = b"platform-measurement"


def canonical_encode(*fields: bytes) -> bytes:
    """Unambiguous encoding: each field prefixed with its 4-byte BE length."""
    out = bytearray()
    for f in fields:
        out += len(f).to_bytes(4, "big")
        out += f
    return bytes(out)


def digest(*fields: bytes) -> bytes:
    return hashlib.sha256(canonical_encode(*fields)).digest()


def content_digest(content: bytes) -> bytes:
    return digest(_TAG_CONTENT, content)


def initial_measurement(ipa_width: int) -> bytes:
    """Starting measurement of a realm, derived from its configuration."""
    return digest(_TAG_CONFIG, ipa_width.to_bytes(2, "big"))


def extend_measurement(rim: bytes, ipa: int, content: bytes) -> bytes:
    """Fold one populated granule into the measurement chain."""
    return digest(_TAG_DATA, rim, ipa.to_bytes(8, "big"), content_digest(content))


def measure_image(ipa_width: int, image: list[tuple[int, bytes]]) -> bytes:
    """Measurement of a realm loaded with ``image`` in the given order.

    This is what a realm owner computes independently to know the expected
    measurement of a realm built from a known initial image. Contents are
    padded to full granules, matching what measured populate folds in.
    """
    from .granules import GRANULE_SIZE

    rim = initial_measurement(ipa_width)
    for ipa, content in image:
        rim = extend_measurement(rim, ipa, content + bytes(GRANULE_SIZE - len(content)))
    return rim


def platform_digest(seed: int) -> bytes:
    """Constant measurement of the simulated platform, fixed by the run seed."""
    return digest(_TAG_PLATFORM, seed.to_bytes(8, "big", signed=False))
