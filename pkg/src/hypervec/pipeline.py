"""End-to-end orchestration: coarsen, embed the coarsest level, then
project and smooth back up the hierarchy, with per-phase timing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from .coarsening import AssignPolicy, coarsen_hierarchy
from .core import Hypergraph, build_star_expansion, validate_embedding
from .embedding import WalkConfig, embed_star_graph, external_embed
from .refine import RefineConfig, project, refine


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of a full run.

    ``seed`` supersedes the component seeds (walk seed, tie-break seed) so
    one value reproduces a whole run. ``refine_by_level`` optionally
    overrides the shared refine settings per level, index 0 = finest.
    """

    levels: int = 0
    min_size: int = 0
    policy: AssignPolicy | None = None
    walks: WalkConfig = field(default_factory=WalkConfig)
    external_command: str | None = None
    refine: RefineConfig = field(default_factory=RefineConfig)
    refine_by_level: tuple = ()
    dim: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.levels < 0:
            raise ValueError("levels must be nonnegative")
        if self.min_size < 0:
            raise ValueError("min_size must be nonnegative")
        if self.walks.dim != self.dim:
            raise ValueError(
                f"embedding dim mismatch: walks.dim={self.walks.dim}, dim={self.dim}")

    def refine_config_for(self, level) -> RefineConfig:
        if level < len(self.refine_by_level):
            return self.refine_by_level[level]
        return self.refine


@dataclass(frozen=True)
class LevelStats:
    """Size and per-phase wall-clock cost of one hierarchy level."""

    level: int
    num_nodes: int
    num_hyperedges: int
    coarsen_time: float
    init_time: float
    refine_time: float

    @property
    def row_time(self) -> float:
        return self.coarsen_time + self.init_time + self.refine_time


@dataclass
class PipelineReport:
    """Per-level statistics plus the total wall-clock time of the run."""

    levels: list
    total_time: float

    @property
    def coarsen_total(self) -> float:
        return sum(s.coarsen_time for s in self.levels)

    @property
    def init_total(self) -> float:
        return sum(s.init_time for s in self.levels)

    @property
    def refine_total(self) -> float:
        return sum(s.refine_time for s in self.levels)

    def format_table(self) -> str:
        header = (f"{'level':>5} {'nodes':>12} {'hyperedges':>12} "
                  f"{'coarsen_s':>10} {'init_s':>10} {'refine_s':>10}")
        lines = [header, "-" * len(header)]
        for s in self.levels:
            lines.append(f"{s.level:>5} {s.num_nodes:>12} {s.num_hyperedges:>12} "
                         f"{s.coarsen_time:>10.3f} {s.init_time:>10.3f} "
                         f"{s.refine_time:>10.3f}")
        lines.append(f"{'total':>5} {'':>12} {'':>12} "
                     f"{self.coarsen_total:>10.3f} {self.init_total:>10.3f} "
                     f"{self.refine_total:>10.3f}")
        lines.append(f"wall-clock total: {self.total_time:.3f} s")
        return "\n".join(lines)

    def to_csv(self, stream):
        stream.write("level,nodes,hyperedges,coarsen_s,init_s,refine_s,total_s\n")
        for s in self.levels:
            stream.write(f"{s.level},{s.num_nodes},{s.num_hyperedges},"
                         f"{s.coarsen_time!r},{s.init_time!r},{s.refine_time!r},"
                         f"{s.row_time!r}\n")
        stream.write(f"total,,,{self.coarsen_total!r},{self.init_total!r},"
                     f"{self.refine_total!r},{self.total_time!r}\n")

    @classmethod
    def from_csv(cls, stream):
        from .core import ParseError

        lines = [ln.strip() for ln in stream if ln.strip()]
        if not lines or lines[0].split(",")[0] != "level":
            raise ParseError("not a pipeline report (missing header)", line=1)
        levels = []
        total_time = 0.0
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 7:
                raise ParseError("report row must have 7 fields", line=lineno)
            if parts[0] == "total":
                total_time = float(parts[6])
                continue
            levels.append(LevelStats(int(parts[0]), int(parts[1]), int(parts[2]),
                                     float(parts[3]), float(parts[4]),
                                     float(parts[5])))
        return cls(levels, total_time)


def run_pipeline(h: Hypergraph, cfg: PipelineConfig):
    """Coarsen, embed the coarsest star graph, project and refine back up.

    Returns ``(embedding, report)`` where the embedding covers all
    ``|V| + |E|`` star vertices of the input hypergraph. Smoothing runs at
    every level including the coarsest, so ``levels == 0`` reduces to
    embed-then-refine on the input itself; an embedding-only run is
    ``levels == 0`` with zero refinement iterations.
    """
    started = time.perf_counter()
    policy = cfg.policy
    if policy is not None:
        policy = replace(policy, tie_break_seed=cfg.seed)
    walk_cfg = replace(cfg.walks, seed=cfg.seed)

    hierarchy = coarsen_hierarchy(h, cfg.levels, min_size=cfg.min_size,
                                  policy=policy)
    stars = [build_star_expansion(level) for level in hierarchy.levels]
    num_levels = hierarchy.num_levels
    coarsest = num_levels - 1

    init_started = time.perf_counter()
    if cfg.external_command is not None:
        emb = external_embed(stars[coarsest], cfg.external_command)
        if emb.shape[1] != cfg.dim:
            raise ValueError(
                f"external embedding dim {emb.shape[1]} != configured {cfg.dim}")
    else:
        emb = embed_star_graph(stars[coarsest], walk_cfg)
    init_time = time.perf_counter() - init_started

    refine_times = [0.0] * num_levels
    t0 = time.perf_counter()
    emb = refine(stars[coarsest], emb, cfg.refine_config_for(coarsest))
    refine_times[coarsest] = time.perf_counter() - t0

    for level in range(coarsest - 1, -1, -1):
        t0 = time.perf_counter()
        emb = project(emb, hierarchy.maps[level], hierarchy.levels[level])
        emb = refine(stars[level], emb, cfg.refine_config_for(level))
        refine_times[level] = time.perf_counter() - t0

    stats = []
    for level, graph in enumerate(hierarchy.levels):
        stats.append(LevelStats(
            level=level,
            num_nodes=graph.num_nodes,
            num_hyperedges=graph.num_hyperedges,
            coarsen_time=hierarchy.coarsen_times[level - 1] if level > 0 else 0.0,
            init_time=init_time if level == coarsest else 0.0,
            refine_time=refine_times[level]))
    report = PipelineReport(stats, time.perf_counter() - started)

    validate_embedding(emb, rows=h.num_nodes + h.num_hyperedges)
    return emb, report
