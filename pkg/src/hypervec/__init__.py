"""Multi-level hypergraph embedding toolkit.

Pipeline: coarsen a hypergraph into a hierarchy by merging similar nodes,
embed the coarsest level's bipartite star expansion with a random-walk
skip-gram model (or an external tool), then project the vectors back level
by level, smoothing them over the star graph at each step. Includes the
downstream evaluations the embeddings are meant for: node classification
and hyperedge prediction.
"""

from .coarsening import (AssignPolicy, Hierarchy, MergeMap, REMOVED,
                         assign_hyperedge, coarsen_hierarchy, coarsen_level,
                         compute_hyperedge_features)
from .core import (DataError, EmptyHypergraphError, Hypergraph,
                   HypervecError, ParseError, StarGraph,
                   build_hypergraph, build_star_expansion, validate_embedding)
from .embedding import (WalkConfig, embed_star_graph, external_embed,
                        generate_walks, set_thread_count, sgns_loss,
                        train_skipgram)
from .evaluate import (ClassificationReport, LogisticModel, PredictionReport,
                       Split, auc_score, evaluate_classification,
                       evaluate_hyperedge_prediction, hyperedge_feature,
                       make_split, sample_negatives, split_hyperedge_holdout,
                       train_classifier)
from .io import (LabelTable, parse_features, parse_hypergraph, parse_labels,
                 read_embeddings, write_edgelist, write_embeddings,
                 write_hypergraph)
from .pipeline import LevelStats, PipelineConfig, PipelineReport, run_pipeline
from .refine import RefineConfig, project, refine

__version__ = "0.1.0"

__all__ = [
    "AssignPolicy", "ClassificationReport", "DataError",
    "EmptyHypergraphError", "Hierarchy",
    "Hypergraph", "HypervecError", "LabelTable", "LevelStats", "LogisticModel",
    "MergeMap", "ParseError", "PipelineConfig", "PipelineReport",
    "PredictionReport", "REMOVED", "RefineConfig", "Split", "StarGraph",
    "WalkConfig", "assign_hyperedge", "auc_score", "build_hypergraph",
    "build_star_expansion", "coarsen_hierarchy", "coarsen_level",
    "compute_hyperedge_features", "embed_star_graph",
    "evaluate_classification", "evaluate_hyperedge_prediction",
    "external_embed", "generate_walks", "hyperedge_feature", "make_split",
    "parse_features", "parse_hypergraph", "parse_labels", "project",
    "read_embeddings", "refine", "run_pipeline", "sample_negatives",
    "set_thread_count", "sgns_loss", "split_hyperedge_holdout",
    "train_classifier", "train_skipgram", "validate_embedding",
    "write_edgelist", "write_embeddings", "write_hypergraph",
]
