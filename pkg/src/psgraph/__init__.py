"""psgraph: protein similarity graphs via sparse k-mer matrices.

The pipeline parses FASTA sequences, detects candidate pairs by exact or
substitute k-mer overlap expressed as semiring sparse matrix products,
aligns candidates with Smith-Waterman or x-drop seed-and-extend, filters
by similarity, and emits a weighted graph.  A virtual process grid
reproduces the distributed 2D decomposition, overlapped sequence
exchange, and symmetric work assignment at desk scale.
"""

from .align import AlignmentResult, SimilarityEdge, smith_waterman, xdrop_extend
from .graph import SimilarityGraph, connected_components, weighted_precision_recall
from .grid import BlockOwnership, CommLedger, GridConfig, GridResult, assign_work, plan_blocks, plan_requests, run_grid
from .pipeline import CandidatePair, PipelineConfig, build_A, build_S, compute_B, extract_pairs
from .report import RunReport
from .seqstore import SequenceStore, parse_fasta_bytes, parse_fasta_file, plan_chunks
from .spmat import CommonKmers, DcscMatrix, Semiring, Triplets, spgemm, transpose
from .subkmer import ExpenseMatrix, MinMaxHeap, ScoringMatrix, SubKmer, blosum62, build_expense, find_sub_kmers

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "BlockOwnership",
    "CandidatePair",
    "CommLedger",
    "CommonKmers",
    "DcscMatrix",
    "ExpenseMatrix",
    "GridConfig",
    "GridResult",
    "MinMaxHeap",
    "PipelineConfig",
    "RunReport",
    "ScoringMatrix",
    "Semiring",
    "SequenceStore",
    "SimilarityEdge",
    "SimilarityGraph",
    "SubKmer",
    "Triplets",
    "assign_work",
    "blosum62",
    "build_A",
    "build_S",
    "build_expense",
    "compute_B",
    "connected_components",
    "extract_pairs",
    "find_sub_kmers",
    "parse_fasta_bytes",
    "parse_fasta_file",
    "plan_blocks",
    "plan_chunks",
    "plan_requests",
    "run_grid",
    "smith_waterman",
    "spgemm",
    "transpose",
    "weighted_precision_recall",
    "xdrop_extend",
]
