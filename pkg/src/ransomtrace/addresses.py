"""Bitcoin mainnet address validation, generation, and primitives.

Two address families are supported:

* base58check (legacy ``1...`` pay-to-pubkey-hash and ``3...`` pay-to-script-hash)
* bech32 / bech32m segwit (``bc1...``)

Validation is full checksum validation, not shape matching.  Encoders exist
so synthetic ledgers can mint addresses that pass the same validation.
"""

from __future__ import annotations

import re
from hashlib import sha256

BASE58_ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
BECH32_CHARSET = "qpzry9x8gf2tvdw0s3jn54khce6mua7l"
BECH32M_CONST = 0x2BC830A3

KIND_BASE58 = "base58"
KIND_BECH32 = "bech32"


class BadAddressChecksum(ValueError):
    """A string required to be a valid address failed validation."""

    def __init__(self, address: str):
        self.address = address
        super().__init__(f"bad address checksum: {address!r}")


# ---------------------------------------------------------------------------
# base58check


def _b58decode(text: str) -> bytes:
    n = 0
    for ch in text:
        idx = BASE58_ALPHABET.find(ch)
        if idx < 0:
            raise ValueError(f"invalid base58 character {ch!r}")
        n = n * 58 + idx
    body = n.to_bytes((n.bit_length() + 7) // 8, "big")
    # leading '1' characters encode leading zero bytes
    pad = len(text) - len(text.lstrip("1"))
    return b"\x00" * pad + body


def _b58encode(raw: bytes) -> str:
    n = int.from_bytes(raw, "big")
    out = []
    while n:
        n, rem = divmod(n, 58)
        out.append(BASE58_ALPHABET[rem])
    pad = len(raw) - len(raw.lstrip(b"\x00"))
    return "1" * pad + "".join(reversed(out))


def is_valid_base58_address(value: str) -> bool:
    """Mainnet base58check address: version 0x00 or 0x05, double-sha256 checksum."""
    if not 25 <= len(value) <= 34 or value[0] not in "13":
        return False
    try:
        raw = _b58decode(value)
    except ValueError:
        return False
    if len(raw) != 25 or raw[0] not in (0x00, 0x05):
        return False
    checksum = sha256(sha256(raw[:-4]).digest()).digest()[:4]
    return raw[-4:] == checksum


def base58check_encode(version: int, payload: bytes) -> str:
    body = bytes([version]) + payload
    checksum = sha256(sha256(body).digest()).digest()[:4]
    return _b58encode(body + checksum)


def p2pkh_address(hash160: bytes) -> str:
    """Legacy ``1...`` address over a 20-byte hash."""
    if len(hash160) != 20:
        raise ValueError("p2pkh payload must be 20 bytes")
    return base58check_encode(0x00, hash160)


def p2sh_address(hash160: bytes) -> str:
    """Legacy ``3...`` address over a 20-byte script hash."""
    if len(hash160) != 20:
        raise ValueError("p2sh payload must be 20 bytes")
    return base58check_encode(0x05, hash160)


# ---------------------------------------------------------------------------
# bech32 / bech32m (BIP-173 / BIP-350 reference construction)


def _bech32_polymod(values: list[int]) -> int:
    generator = [0x3B6A57B2, 0x26508E6D, 0x1EA119FA, 0x3D4233DD, 0x2A1462B3]
    chk = 1
    for value in values:
        top = chk >> 25
        chk = (chk & 0x1FFFFFF) << 5 ^ value
        for i in range(5):
            chk ^= generator[i] if ((top >> i) & 1) else 0
    return chk


def _bech32_hrp_expand(hrp: str) -> list[int]:
    return [ord(x) >> 5 for x in hrp] + [0] + [ord(x) & 31 for x in hrp]


def _bech32_verify(hrp: str, data: list[int]) -> str | None:
    const = _bech32_polymod(_bech32_hrp_expand(hrp) + data)
    if const == 1:
        return "bech32"
    if const == BECH32M_CONST:
        return "bech32m"
    return None


def _bech32_create_checksum(hrp: str, data: list[int], const: int) -> list[int]:
    values = _bech32_hrp_expand(hrp) + data
    polymod = _bech32_polymod(values + [0, 0, 0, 0, 0, 0]) ^ const
    return [(polymod >> 5 * (5 - i)) & 31 for i in range(6)]


def _convertbits(data: bytes | list[int], frombits: int, tobits: int, pad: bool) -> list[int] | None:
    acc = 0
    bits = 0
    ret = []
    maxv = (1 << tobits) - 1
    max_acc = (1 << (frombits + tobits - 1)) - 1
    for value in data:
        if value < 0 or (value >> frombits):
            return None
        acc = ((acc << frombits) | value) & max_acc
        bits += frombits
        while bits >= tobits:
            bits -= tobits
            ret.append((acc >> bits) & maxv)
    if pad:
        if bits:
            ret.append((acc << (tobits - bits)) & maxv)
    elif bits >= frombits or ((acc << (tobits - bits)) & maxv):
        return None
    return ret


def _bech32_decode(bech: str) -> tuple[str, list[int], str] | None:
    if any(ord(x) < 33 or ord(x) > 126 for x in bech):
        return None
    if bech.lower() != bech and bech.upper() != bech:
        return None
    bech = bech.lower()
    pos = bech.rfind("1")
    if pos < 1 or pos + 7 > len(bech) or len(bech) > 90:
        return None
    if not all(x in BECH32_CHARSET for x in bech[pos + 1 :]):
        return None
    hrp = bech[:pos]
    data = [BECH32_CHARSET.find(x) for x in bech[pos + 1 :]]
    spec = _bech32_verify(hrp, data)
    if spec is None:
        return None
    return hrp, data[:-6], spec


def is_valid_bech32_address(value: str) -> bool:
    """Mainnet segwit address: hrp ``bc``, valid program, right checksum variant."""
    decoded = _bech32_decode(value)
    if decoded is None:
        return False
    hrp, data, spec = decoded
    if hrp != "bc" or not data:
        return False
    witver, program5 = data[0], data[1:]
    if witver > 16:
        return False
    program = _convertbits(program5, 5, 8, False)
    if program is None or not 2 <= len(program) <= 40:
        return False
    if witver == 0:
        return spec == "bech32" and len(program) in (20, 32)
    return spec == "bech32m"


def segwit_address(witver: int, program: bytes) -> str:
    """Encode a ``bc1...`` address for the given witness version and program."""
    const = 1 if witver == 0 else BECH32M_CONST
    data = [witver] + _convertbits(program, 8, 5, True)
    checksum = _bech32_create_checksum("bc", data, const)
    return "bc1" + "".join(BECH32_CHARSET[d] for d in data + checksum)


def p2wpkh_address(hash160: bytes) -> str:
    if len(hash160) != 20:
        raise ValueError("p2wpkh program must be 20 bytes")
    return segwit_address(0, hash160)


# ---------------------------------------------------------------------------
# shared helpers


def address_kind(value: str) -> str | None:
    """Return ``base58`` or ``bech32`` for a valid address, else None."""
    if value[:3].lower() == "bc1":
        return KIND_BECH32 if is_valid_bech32_address(value) else None
    if is_valid_base58_address(value):
        return KIND_BASE58
    return None


def is_valid_address(value: str) -> bool:
    return address_kind(value) is not None


def require_valid(value: str) -> str:
    """Return the address unchanged, or raise :class:`BadAddressChecksum`."""
    if not is_valid_address(value):
        raise BadAddressChecksum(value)
    return value


# Candidate shapes scanned in free text; every candidate is then checksum-checked.
BASE58_CANDIDATE = re.compile(r"(?<![1-9A-HJ-NP-Za-km-z])[13][1-9A-HJ-NP-Za-km-z]{24,33}(?![1-9A-HJ-NP-Za-km-z])")
BECH32_CANDIDATE = re.compile(r"(?<![0-9A-Za-z])(?:bc1|BC1)[0-9A-Za-z]{8,87}(?![0-9A-Za-z])")
