"""Run report: stage timings, matrix/pair counters, and their rendering
as text, JSON, and figures saved next to the graph output."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


@dataclass
class RunReport:
    """Counters and wall times of one pipeline run."""

    n_sequences: int = 0
    stage_seconds: dict[str, float] = field(default_factory=dict)
    nnz_a: int = 0
    nnz_s: int = 0
    nnz_b: int = 0
    pairs_before: int = 0
    pairs_after: int = 0
    alignments: int = 0
    edges_kept: int = 0
    grid_q: int = 1
    config: dict = field(default_factory=dict)

    @property
    def total_seconds(self) -> float:
        return sum(self.stage_seconds.values())

    @property
    def align_pct(self) -> float:
        total = self.total_seconds
        if total <= 0:
            return 0.0
        return 100.0 * self.stage_seconds.get("align", 0.0) / total

    def to_text(self) -> str:
        lines = [
            "psgraph run report",
            f"  sequences          {self.n_sequences}",
            f"  grid               {self.grid_q}x{self.grid_q}",
            f"  nnz A / S / B      {self.nnz_a} / {self.nnz_s} / {self.nnz_b}",
            f"  pairs before/after {self.pairs_before} / {self.pairs_after}",
            f"  alignments         {self.alignments}",
            f"  edges kept         {self.edges_kept}",
            f"  alignment time     {self.align_pct:.1f}%",
            "  stage seconds:",
        ]
        for stage, sec in self.stage_seconds.items():
            lines.append(f"    {stage:<12} {sec:.3f}")
        lines.append(f"    {'total':<12} {self.total_seconds:.3f}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "n_sequences": self.n_sequences,
            "grid_q": self.grid_q,
            "stage_seconds": self.stage_seconds,
            "total_seconds": self.total_seconds,
            "align_pct": self.align_pct,
            "nnz": {"A": self.nnz_a, "S": self.nnz_s, "B": self.nnz_b},
            "pairs_before_threshold": self.pairs_before,
            "pairs_after_threshold": self.pairs_after,
            "alignments": self.alignments,
            "edges_kept": self.edges_kept,
            "config": self.config,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def save_figures(self, prefix) -> list[Path]:
        """Render stage-time and counter charts as ``<prefix>_stages.png``
        and ``<prefix>_counts.png``."""
        prefix = Path(prefix)
        paths = []

        stages = list(self.stage_seconds)
        secs = [self.stage_seconds[s] for s in stages]
        fig, ax = plt.subplots(figsize=(6.4, 3.2))
        ax.barh(range(len(stages)), secs, color="#4878a8")
        ax.set_yticks(range(len(stages)))
        ax.set_yticklabels(stages)
        ax.invert_yaxis()
        ax.set_xlabel("seconds")
        ax.set_title(f"stage wall times (align {self.align_pct:.0f}%)")
        for spine in ("top", "right"):
            ax.spines[spine].set_visible(False)
        fig.tight_layout()
        p = prefix.parent / (prefix.name + "_stages.png")
        fig.savefig(p, dpi=120)
        plt.close(fig)
        paths.append(p)

        labels = ["nnz A", "nnz S", "nnz B", "pairs>t", "aligned", "edges"]
        counts = [self.nnz_a, self.nnz_s, self.nnz_b, self.pairs_after, self.alignments, self.edges_kept]
        fig, ax = plt.subplots(figsize=(6.4, 3.2))
        ax.bar(range(len(labels)), [max(c, 0) for c in counts], color="#6aa66a")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=20)
        if max(counts) > 0:
            ax.set_yscale("symlog")
        ax.set_ylabel("count")
        ax.set_title("matrix and pair counts")
        for spine in ("top", "right"):
            ax.spines[spine].set_visible(False)
        fig.tight_layout()
        p = prefix.parent / (prefix.name + "_counts.png")
        fig.savefig(p, dpi=120)
        plt.close(fig)
        paths.append(p)
        return paths

    def save(self, prefix) -> list[Path]:
        """Write ``<prefix>.txt``, ``<prefix>.json`` and the figures."""
        prefix = Path(prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        txt = prefix.parent / (prefix.name + ".txt")
        txt.write_text(self.to_text(), encoding="utf-8")
        js = prefix.parent / (prefix.name + ".json")
        js.write_text(self.to_json(), encoding="utf-8")
        return [txt, js] + self.save_figures(prefix)
