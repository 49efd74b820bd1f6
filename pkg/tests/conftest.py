import random

import pytest

# The twenty standard residues: synthetic data avoids the ambiguity codes
# unless a test exercises them on purpose.
STD = b"ARNDCQEGHILKMFPSTWYV"
FULL = b"ARNDCQEGHILKMFPSTWYVBZX*"


def random_protein(rng: random.Random, length: int, alphabet: bytes = STD) -> bytes:
    return bytes(rng.choice(alphabet) for _ in range(length))


def mutate(rng: random.Random, seq: bytes, rate: float, alphabet: bytes = STD) -> bytes:
    out = bytearray()
    for b in seq:
        if rng.random() < rate:
            out.append(rng.choice([c for c in alphabet if c != b]))
        else:
            out.append(b)
    return bytes(out)


def fasta_text(records, width: int = 0) -> bytes:
    """Render (name, residues) pairs; width > 0 wraps sequence lines."""
    chunks = []
    for name, seq in records:
        chunks.append(b">" + name.encode() + b"\n")
        if width > 0:
            for off in range(0, len(seq), width):
                chunks.append(seq[off : off + width] + b"\n")
            if not seq:
                chunks.append(b"\n")
        else:
            chunks.append(seq + b"\n")
    return b"".join(chunks)


def planted_families(
    rng: random.Random,
    families: int,
    copies: int,
    length_range=(100, 180),
    rate: float = 0.03,
    noise: int = 0,
    noise_length=(60, 140),
):
    """Mutated copies of random parents plus optional unrelated sequences.

    Returns (records, labels): records are (name, residues), labels map
    name -> family id, noise sequences each get their own family.
    """
    records, labels = [], {}
    for f in range(families):
        parent = random_protein(rng, rng.randint(*length_range))
        for c in range(copies):
            name = f"fam{f}_m{c}"
            records.append((name, mutate(rng, parent, rate)))
            labels[name] = f"F{f}"
    for x in range(noise):
        name = f"noise{x}"
        records.append((name, random_protein(rng, rng.randint(*noise_length))))
        labels[name] = f"N{x}"
    return records, labels


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
