import io
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypervec import (DataError, ParseError, build_hypergraph,
                      build_star_expansion, parse_features, parse_hypergraph,
                      parse_labels, read_embeddings, write_edgelist,
                      write_embeddings, write_hypergraph)
from hypervec.io import atomic_output


def _parse(text, **kw):
    return parse_hypergraph(io.StringIO(text), **kw)


class TestHmetisParser:
    def test_basic(self):
        pins, weights = _parse("2 3\n1 2\n2 3\n")
        assert pins == [[0, 1], [1, 2]]
        assert weights is None

    def test_weighted(self):
        pins, weights = _parse("1 2 1\n5.0 1 2\n")
        assert pins == [[0, 1]]
        assert weights == [5.0]

    def test_id_out_of_range(self):
        with pytest.raises(ParseError, match="node id 9 exceeds declared 2"):
            _parse("1 2\n1 9\n")

    def test_id_zero_rejected(self):
        with pytest.raises(ParseError, match="node id 0"):
            _parse("1 2\n0 1\n")

    def test_comments_and_blanks_skipped(self):
        pins, _ = _parse("% a comment\n\n2 3\n% another\n1 2\n\n2 3\n")
        assert pins == [[0, 1], [1, 2]]

    def test_crlf_accepted(self):
        pins, _ = _parse("2 3\r\n1 2\r\n2 3\r\n")
        assert pins == [[0, 1], [1, 2]]

    def test_too_few_hyperedge_lines(self):
        with pytest.raises(ParseError, match="declares 2 hyperedges but body has 1"):
            _parse("2 3\n1 2\n")

    def test_extra_lines(self):
        with pytest.raises(ParseError, match="extra content"):
            _parse("1 3\n1 2\n2 3\n")

    def test_missing_header(self):
        with pytest.raises(ParseError, match="missing header"):
            _parse("")

    def test_bad_header_arity(self):
        with pytest.raises(ParseError, match="header"):
            _parse("1\n1 2\n")

    def test_unsupported_fmt(self):
        with pytest.raises(ParseError, match="unsupported format flag"):
            _parse("1 2 11\n1 2\n")

    def test_error_carries_line_number(self):
        with pytest.raises(ParseError, match="line 3"):
            _parse("% hi\n2 3\n1 x\n2 3\n")

    def test_garbage_never_crashes(self):
        for junk in ("\x00\xff\n", "a b c\n1 2\n", "2 3\n1 2\n1 2.5\n"):
            with pytest.raises(ParseError):
                _parse(junk)


class TestEdgelistParser:
    def test_pairs(self):
        pins, weights = _parse("0 1\n1 2\n", format="edgelist")
        assert pins == [[0, 1], [1, 2]]
        assert weights is None

    def test_weighted_pairs(self):
        pins, weights = _parse("0 1 2.5\n1 2 1.0\n", format="edgelist")
        assert pins == [[0, 1], [1, 2]]
        assert weights == [2.5, 1.0]

    def test_inconsistent_arity(self):
        with pytest.raises(ParseError, match="arity"):
            _parse("0 1 2.5\n1 2\n", format="edgelist")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            _parse("0 1\n", format="mystery")

    def test_star_edgelist_round_trip(self):
        h, _ = build_hypergraph([[0, 1, 2], [2, 3]], weights=[2.0, 3.0])
        g = build_star_expansion(h)
        buf = io.StringIO()
        write_edgelist(buf, g)
        pins, weights = _parse(buf.getvalue(), format="edgelist")
        assert len(pins) == g.num_edges
        rebuilt, _ = build_hypergraph(pins, weights=weights)
        assert rebuilt.num_nodes == g.num_vertices
        assert sorted(weights) == sorted([2.0] * 3 + [3.0] * 2)


class TestFeatureParser:
    def test_basic(self):
        m = parse_features(io.StringIO("0 1.0 0.0\n1 0.0 1.0\n"))
        assert m.shape == (2, 2)
        assert np.array_equal(m, np.eye(2))

    def test_ragged_rejected(self):
        with pytest.raises(ParseError, match="ragged"):
            parse_features(io.StringIO("0 1.0\n1 1.0 2.0\n"))

    def test_out_of_order_sorted(self):
        m = parse_features(io.StringIO("1 5.0\n0 3.0\n"))
        assert m[:, 0].tolist() == [3.0, 5.0]

    def test_missing_rows_listed(self):
        with pytest.raises(ParseError, match="missing feature rows for nodes: 1"):
            parse_features(io.StringIO("0 1.0\n2 1.0\n"))

    def test_duplicate_rejected(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_features(io.StringIO("0 1.0\n0 2.0\n"))


class TestLabelParser:
    def test_basic(self):
        t = parse_labels(io.StringIO("0 1\n3 0\n2 2\n"))
        assert t.ids.tolist() == [0, 2, 3]
        assert t.labels.tolist() == [1, 2, 0]
        assert t.num_classes == 3

    def test_to_dense(self):
        t = parse_labels(io.StringIO("0 1\n2 0\n"))
        assert t.to_dense(4).tolist() == [1, -1, 0, -1]
        with pytest.raises(DataError):
            t.to_dense(2)

    def test_bad_lines(self):
        for junk in ("0\n", "0 1 2\n", "0 -1\n", "x 1\n", "0 1\n0 2\n"):
            with pytest.raises(ParseError):
                parse_labels(io.StringIO(junk))


class TestEmbeddingIO:
    def test_written_form(self):
        buf = io.StringIO()
        write_embeddings(buf, np.array([[0.5, -1.25]]))
        assert buf.getvalue() == "1 2\n0 0.5 -1.25\n"

    def test_round_trip_bitwise(self):
        rng = np.random.default_rng(0)
        emb = rng.standard_normal((10, 128))
        emb[0, 0] = -0.0
        emb[1, 1] = 1e-310  # subnormal
        buf = io.StringIO()
        write_embeddings(buf, emb)
        ids, back = read_embeddings(io.StringIO(buf.getvalue()))
        assert ids.tolist() == list(range(10))
        assert back.tobytes() == emb.tobytes()

    def test_header_body_mismatch(self):
        with pytest.raises(ParseError, match="declares 2 rows"):
            read_embeddings(io.StringIO("2 2\n0 1.0 2.0\n"))

    def test_row_width_mismatch(self):
        with pytest.raises(ParseError, match="header says 2"):
            read_embeddings(io.StringIO("1 2\n0 1.0\n"))

    def test_custom_ids(self):
        buf = io.StringIO()
        write_embeddings(buf, np.zeros((2, 1)), ids=[10, 20])
        ids, _ = read_embeddings(io.StringIO(buf.getvalue()))
        assert ids.tolist() == [10, 20]

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False,
                              width=64),
                    min_size=1, max_size=40))
    @settings(max_examples=50, deadline=None)
    def test_round_trip_any_finite(self, values):
        emb = np.array(values).reshape(-1, 1)
        buf = io.StringIO()
        write_embeddings(buf, emb)
        _, back = read_embeddings(io.StringIO(buf.getvalue()))
        assert back.tobytes() == emb.tobytes()


class TestHypergraphWriter:
    def test_round_trip(self):
        h, _ = build_hypergraph([[0, 1, 2], [1, 3]], weights=[2.5, 1.0])
        buf = io.StringIO()
        write_hypergraph(buf, h)
        pins, weights = _parse(buf.getvalue())
        again, _ = build_hypergraph(pins, weights=weights)
        assert again.pin_lists() == h.pin_lists()
        assert again.hyperedge_weights.tolist() == h.hyperedge_weights.tolist()

    def test_unweighted_has_no_flag(self):
        h, _ = build_hypergraph([[0, 1]])
        buf = io.StringIO()
        write_hypergraph(buf, h)
        assert buf.getvalue().splitlines()[0] == "1 2"


class TestAtomicOutput:
    def test_success_creates_file(self, tmp_path):
        target = tmp_path / "out.txt"
        with atomic_output(str(target)) as fh:
            fh.write("done")
        assert target.read_text() == "done"

    def test_failure_leaves_nothing(self, tmp_path):
        target = tmp_path / "out.txt"
        with pytest.raises(RuntimeError):
            with atomic_output(str(target)) as fh:
                fh.write("partial")
                raise RuntimeError("boom")
        assert not target.exists()
        assert os.listdir(tmp_path) == []
