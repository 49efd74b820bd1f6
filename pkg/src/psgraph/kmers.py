"""K-mer encoding over the 24-letter protein alphabet.

Each residue is mapped to an index in 0..23 (fixed alphabet order
``ARNDCQEGHILKMFPSTWYVBZX*``) and a k-mer is encoded positionally in
base 24, most significant digit first.  Encodings are strictly monotone
in the lexicographic order of the underlying index tuples.
"""

from __future__ import annotations

ALPHABET = b"ARNDCQEGHILKMFPSTWYVBZX*"
ALPHABET_SIZE = len(ALPHABET)

# k is capped so 24**k stays well inside 64 bits (24**13 < 2**60).
MAX_K = 13

# Residues that make a k-mer "ambiguous" for --skip-ambiguous.
AMBIGUOUS = frozenset(b"XBZ*")

_INDEX = [-1] * 256
for _i, _b in enumerate(ALPHABET):
    _INDEX[_b] = _i


def base_index(byte: int) -> int:
    """Index of an alphabet byte in 0..23, or -1 if not in the alphabet."""
    return _INDEX[byte]


def kmer_space(k: int) -> int:
    """Number of possible k-mers: 24**k."""
    _check_k(k)
    return ALPHABET_SIZE**k


def _check_k(k: int) -> None:
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must be in 1..{MAX_K}, got {k}")


def encode(kmer: bytes) -> int:
    """Encode a k-mer (bytes over the alphabet) to its integer id.

    Raises ValueError on bytes outside the alphabet.
    """
    _check_k(len(kmer))
    value = 0
    for b in kmer:
        d = _INDEX[b]
        if d < 0:
            raise ValueError(f"byte {bytes([b])!r} not in protein alphabet")
        value = value * ALPHABET_SIZE + d
    return value


def decode(value: int, k: int) -> bytes:
    """Inverse of :func:`encode` for a given k."""
    _check_k(k)
    if not 0 <= value < ALPHABET_SIZE**k:
        raise ValueError(f"kmer id {value} out of range for k={k}")
    out = bytearray(k)
    for pos in range(k - 1, -1, -1):
        value, d = divmod(value, ALPHABET_SIZE)
        out[pos] = ALPHABET[d]
    return bytes(out)


def encode_digits(digits) -> int:
    """Encode a sequence of base indices (0..23) to a k-mer id."""
    value = 0
    for d in digits:
        value = value * ALPHABET_SIZE + d
    return value


def decode_digits(value: int, k: int) -> tuple[int, ...]:
    """K-mer id to its tuple of base indices, most significant first."""
    digits = [0] * k
    for pos in range(k - 1, -1, -1):
        value, digits[pos] = divmod(value, ALPHABET_SIZE)
    return tuple(digits)


def extract_kmers(residues: bytes, k: int, skip_ambiguous: bool = False):
    """All (kmer_id, start_position) of a residue string, positions ascending.

    A sequence of length L yields max(0, L-k+1) entries.  With
    ``skip_ambiguous`` k-mers containing X, B, Z or ``*`` are dropped.
    """
    _check_k(k)
    n = len(residues)
    out = []
    for pos in range(n - k + 1):
        window = residues[pos : pos + k]
        if skip_ambiguous and any(b in AMBIGUOUS for b in window):
            continue
        out.append((encode(window), pos))
    return out


def first_kmer_positions(residues: bytes, k: int, skip_ambiguous: bool = False) -> dict[int, int]:
    """Map of distinct k-mer id -> first (smallest) start position."""
    first: dict[int, int] = {}
    for kid, pos in extract_kmers(residues, k, skip_ambiguous):
        first.setdefault(kid, pos)
    return first
