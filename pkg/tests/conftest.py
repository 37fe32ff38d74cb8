import pytest

from hypervec import WalkConfig, build_hypergraph, build_star_expansion
from hypervec.embedding import embed_star_graph


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the JIT kernels once so timed tests measure work, not JIT."""
    h, _ = build_hypergraph([[0, 1], [1, 2]])
    g = build_star_expansion(h)
    cfg = WalkConfig(walks_per_vertex=1, walk_length=4, window=2,
                     negative_samples=1, epochs=1, dim=4, seed=0)
    embed_star_graph(g, cfg)
    cfg_par = WalkConfig(walks_per_vertex=1, walk_length=4, window=2,
                         negative_samples=1, epochs=1, dim=4, seed=0, workers=2)
    embed_star_graph(g, cfg_par)
    yield
