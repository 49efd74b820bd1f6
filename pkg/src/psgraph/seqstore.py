"""Chunked FASTA parsing and the immutable sequence store.

The input file is split into byte-balanced primary ranges, one per
worker, each followed by a configurable overlap window.  A record is
owned by the range containing its ``>`` byte; a record that starts near
a range's end is completed from the overlap bytes.  Any worker count
therefore parses exactly the same multiset of sequences, and global ids
(dense, in file order) come from a prefix sum of per-worker counts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kmers import ALPHABET

# Generous default: overlap must exceed the largest FASTA record expected.
DEFAULT_OVERLAP = 1 << 20

_VALID = bytearray(256)
for _b in ALPHABET:
    _VALID[_b] = 1


class FastaParseError(ValueError):
    pass


class ChunkOverlapError(FastaParseError):
    """A record ran past its chunk's primary+overlap window."""


@dataclass(frozen=True)
class ChunkRange:
    begin: int
    end: int
    overlap_end: int


@dataclass(frozen=True)
class ChunkPlan:
    worker_count: int
    file_size: int
    ranges: tuple[ChunkRange, ...]


@dataclass(frozen=True)
class SequenceRecord:
    """A parsed record before global ids are assigned."""

    name: str
    residues: bytes


@dataclass(frozen=True)
class Sequence:
    """View of one stored sequence; ``offset``/``length`` index the store
    buffer."""

    global_id: int
    name: str
    offset: int
    length: int


def plan_chunks(file_size: int, workers: int, overlap: int = DEFAULT_OVERLAP) -> ChunkPlan:
    """Byte-balanced primary ranges covering [0, file_size) exactly once.

    Primary lengths differ by at most one byte; each range may read
    ``overlap`` extra bytes, truncated at end of file.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if file_size <= 0:
        raise ValueError("file is empty")
    if overlap < 0:
        raise ValueError("overlap must be >= 0")
    bounds = [w * file_size // workers for w in range(workers + 1)]
    ranges = tuple(
        ChunkRange(bounds[w], bounds[w + 1], min(bounds[w + 1] + overlap, file_size))
        for w in range(workers)
    )
    return ChunkPlan(workers, file_size, ranges)


def _record_starts(data: bytes, begin: int, end: int) -> list[int]:
    """Offsets of '>' bytes at line starts within [begin, end)."""
    starts = []
    pos = begin
    while True:
        pos = data.find(b">", pos, end)
        if pos < 0:
            return starts
        if pos == 0 or data[pos - 1] == 0x0A:
            starts.append(pos)
        pos += 1


def _clean_residues(raw: bytes, name: str) -> bytes:
    out = bytearray()
    for b in raw.upper():
        if _VALID[b]:
            out.append(b)
        elif b not in (0x0A, 0x0D, 0x20, 0x09):
            raise FastaParseError(f"record {name!r}: invalid residue byte {bytes([b])!r}")
    return bytes(out)


def _next_record_start(data: bytes, begin: int) -> int | None:
    pos = begin
    while True:
        pos = data.find(b">", pos)
        if pos < 0:
            return None
        if pos == 0 or data[pos - 1] == 0x0A:
            return pos
        pos += 1


def parse_chunk(data: bytes, rng: ChunkRange) -> list[SequenceRecord]:
    """Parse the records owned by one chunk range.

    Only records whose header byte lies in the primary range are returned;
    a record may extend into the overlap window.  A record still unfinished
    at the end of the window is an error naming the offending header (the
    caller must raise the overlap).
    """
    records: list[SequenceRecord] = []
    for start in _record_starts(data, rng.begin, rng.end):
        nl = data.find(b"\n", start, rng.overlap_end)
        header_end = nl if nl >= 0 else rng.overlap_end
        header = data[start + 1 : header_end].rstrip(b"\r").decode("ascii", "replace")
        name = header.split()[0] if header.split() else ""
        if nl < 0:
            if rng.overlap_end < len(data):
                raise ChunkOverlapError(f"record {name!r} extends past chunk overlap window")
            body_begin = body_end = len(data)
        else:
            body_begin = nl + 1
            nxt = _next_record_start(data, body_begin)
            if nxt is not None and nxt <= rng.overlap_end:
                body_end = nxt
            elif nxt is None and rng.overlap_end == len(data):
                body_end = len(data)
            else:
                raise ChunkOverlapError(f"record {name!r} extends past chunk overlap window")
        if not name:
            raise FastaParseError("record with empty header name")
        residues = _clean_residues(data[body_begin:body_end], name)
        records.append(SequenceRecord(name, residues))
    return records


def parse_fasta_bytes(data: bytes, workers: int = 1, overlap: int = DEFAULT_OVERLAP) -> "SequenceStore":
    """Parse a whole FASTA byte string with the chunked scheme."""
    plan = plan_chunks(len(data), workers, overlap)
    per_worker = [parse_chunk(data, rng) for rng in plan.ranges]
    return SequenceStore.from_worker_records(per_worker)


def parse_fasta_file(path, workers: int = 1, overlap: int = DEFAULT_OVERLAP) -> "SequenceStore":
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_fasta_bytes(data, workers, overlap)


def prefix_counts(per_worker_counts: list[int]) -> list[int]:
    """Exclusive prefix sum: worker w assigns ids [offset_w, offset_w+count_w)."""
    offsets = []
    total = 0
    for c in per_worker_counts:
        offsets.append(total)
        total += c
    return offsets


class SequenceStore:
    """Immutable store of parsed sequences with O(1) lookup by global id."""

    def __init__(self, names: list[str], offsets: list[int], buffer: bytes):
        if len(offsets) != len(names) + 1:
            raise ValueError("offsets must have one more entry than names")
        self.names = names
        self.offsets = offsets
        self.buffer = buffer

    @classmethod
    def from_records(cls, records: list[SequenceRecord]) -> "SequenceStore":
        names = [r.name for r in records]
        offsets = [0]
        buf = bytearray()
        for r in records:
            buf.extend(r.residues)
            offsets.append(len(buf))
        return cls(names, offsets, bytes(buf))

    @classmethod
    def from_worker_records(cls, per_worker: list[list[SequenceRecord]]) -> "SequenceStore":
        """Merge per-worker parses in worker order; concatenation realizes
        the prefix-sum id assignment."""
        merged: list[SequenceRecord] = []
        for recs in per_worker:
            merged.extend(recs)
        return cls.from_records(merged)

    def __len__(self) -> int:
        return len(self.names)

    def name(self, gid: int) -> str:
        return self.names[gid]

    def length(self, gid: int) -> int:
        return self.offsets[gid + 1] - self.offsets[gid]

    def residues(self, gid: int) -> bytes:
        return self.buffer[self.offsets[gid] : self.offsets[gid + 1]]

    def sequence(self, gid: int) -> Sequence:
        return Sequence(gid, self.names[gid], self.offsets[gid], self.length(gid))

    def records(self) -> list[SequenceRecord]:
        return [SequenceRecord(self.names[g], self.residues(g)) for g in range(len(self))]

    def byte_balanced_holdings(self, workers: int) -> list[range]:
        """Contiguous global-id ranges assigning sequences to workers by the
        byte position of their start in the residue buffer: the linear
        decomposition used before 2D redistribution."""
        total = self.offsets[-1]
        n = len(self)
        if workers < 1:
            raise ValueError("workers must be >= 1")
        if total == 0:
            bounds = [w * n // workers for w in range(workers + 1)]
            return [range(bounds[w], bounds[w + 1]) for w in range(workers)]
        holdings = []
        gid = 0
        for w in range(workers):
            byte_end = (w + 1) * total // workers
            begin = gid
            while gid < n and self.offsets[gid] < byte_end:
                gid += 1
            holdings.append(range(begin, gid))
        if gid < n:
            holdings[-1] = range(holdings[-1].start, n)
        return holdings
