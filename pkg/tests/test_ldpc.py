"""Tests for alist I/O, encoding, BP decoding, and LLR/symbol conversions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasedec.codes import code_from_dense, hamming74, peg_code, tree_code
from phasedec.ldpc import (
    AlistError,
    LdpcCode,
    SymbolDistribution,
    decode_bp,
    llr_to_symbol_dist,
    parse_alist,
    symbol_dist_to_llr,
    write_alist,
)

TOY_ALIST = """\
6 3
2 4
1 2 2 1 1 1
4 2 2
1
1 2
1 3
1
2
3
1 2 3 4
2 5
3 6
"""


def all_codewords(code):
    k = code.k_dim
    msgs = ((np.arange(2 ** k)[:, None] >> np.arange(k)) & 1).astype(np.uint8)
    return np.array([code.encode(m) for m in msgs])


class TestAlist:
    def test_parse_toy(self):
        code = parse_alist(TOY_ALIST)
        assert code.n == 6
        assert code.num_checks == 3
        assert list(code.check_neighbors[0]) == [0, 1, 2, 3]
        assert list(code.var_neighbors[2]) == [0, 2]

    def test_reject_asymmetric_adjacency(self):
        bad = TOY_ALIST.replace("2 5", "2 4")
        with pytest.raises(AlistError):
            parse_alist(bad)

    def test_degree_mismatch_reports_line(self):
        bad = TOY_ALIST.replace("1 2 3 4", "1 2 3")
        with pytest.raises(AlistError, match="line 11"):
            parse_alist(bad)

    def test_index_out_of_range(self):
        bad = TOY_ALIST.replace("3 6", "3 7")
        with pytest.raises(AlistError, match="range"):
            parse_alist(bad)

    def test_zero_padded_entries_accepted(self):
        padded = TOY_ALIST.replace("\n1\n1 2\n", "\n1 0\n1 2\n", 1)
        code = parse_alist(padded)
        assert code.n == 6

    def test_roundtrip_random_codes(self, rng):
        for trial in range(50):
            n = int(rng.integers(4, 16))
            m = int(rng.integers(2, n))
            h = np.zeros((m, n), dtype=np.uint8)
            while h.sum(axis=1).min() == 0 or h.sum(axis=0).min() == 0:
                h = (rng.random((m, n)) < 0.35).astype(np.uint8)
            code = code_from_dense(h)
            text = write_alist(code)
            back = parse_alist(text)
            assert back.n == code.n
            assert all(np.array_equal(a, b) for a, b in
                       zip(back.check_neighbors, code.check_neighbors))
            assert write_alist(back) == text


class TestEncode:
    def test_zero_message_zero_codeword(self, hamming):
        assert np.all(hamming.encode(np.zeros(4, dtype=np.uint8)) == 0)

    def test_every_codeword_satisfies_checks(self, hamming, rng):
        for _ in range(20):
            cw = hamming.encode(rng.integers(0, 2, 4).astype(np.uint8))
            assert int(hamming.syndrome(cw).sum()) == 0

    def test_matches_hand_gf2_elimination(self):
        # H = [[1,1,0,1],[0,1,1,0]]: pivots on cols 0,1; free cols 2,3.
        # RREF: row0 = [1,0,1,1], row1 = [0,1,1,0]
        #   c0 = c2 + c3, c1 = c2 (mod 2)
        code = code_from_dense(np.array([[1, 1, 0, 1], [0, 1, 1, 0]], dtype=np.uint8))
        for msg in ([0, 0], [0, 1], [1, 0], [1, 1]):
            c2, c3 = msg
            cw = code.encode(np.array(msg, dtype=np.uint8))
            assert cw[2] == c2 and cw[3] == c3
            assert cw[0] == (c2 + c3) % 2
            assert cw[1] == c2

    def test_message_roundtrip(self, small_code, rng):
        msg = rng.integers(0, 2, small_code.k_dim).astype(np.uint8)
        assert np.array_equal(small_code.extract_message(small_code.encode(msg)), msg)

    def test_length_validation(self, hamming):
        with pytest.raises(ValueError, match="k_dim"):
            hamming.encode(np.zeros(5, dtype=np.uint8))

    def test_redundant_rows_raise_k(self):
        h = np.array([[1, 1, 0, 0], [0, 0, 1, 1], [1, 1, 1, 1]], dtype=np.uint8)
        code = code_from_dense(h)
        assert code.k_dim == 2  # rank 2, not 3
        cw = code.encode(np.array([1, 0], dtype=np.uint8))
        assert int(code.syndrome(cw).sum()) == 0


class TestDecodeBp:
    def test_noiseless_fixed_point(self, hamming, rng):
        cw = hamming.encode(rng.integers(0, 2, 4).astype(np.uint8))
        llrs = np.where(cw == 0, 20.0, -20.0)
        res = decode_bp(hamming, llrs, 30)
        assert res.converged
        assert res.iterations <= 1
        assert np.array_equal(res.hard_bits, cw)

    def test_single_flip_corrected(self, hamming, rng):
        # exhaustive ML oracle agrees with BP on the (7,4) code
        codewords = all_codewords(hamming)
        for trial in range(10):
            cw = codewords[rng.integers(0, len(codewords))]
            llrs = np.where(cw == 0, 6.0, -6.0)
            flip = rng.integers(0, 7)
            llrs[flip] = -llrs[flip]
            ml = codewords[np.argmax((llrs * (1 - 2 * codewords)).sum(axis=1))]
            res = decode_bp(hamming, llrs, 30)
            assert res.converged
            assert np.array_equal(res.hard_bits, ml)
            assert np.array_equal(res.hard_bits, cw)

    def test_extrinsic_identity(self, hamming):
        llrs = np.array([1.0, -2.0, 0.5, 3.0, -0.3, 1.2, -2.2])
        res = decode_bp(hamming, llrs, 5)
        assert res.extrinsic_llrs + llrs == pytest.approx(res.posterior_llrs)

    def test_tree_code_matches_exact_marginals(self, tree, rng):
        codewords = all_codewords(tree)
        for trial in range(5):
            llrs = rng.normal(0.0, 2.0, tree.n)
            res = decode_bp(tree, llrs, 30, early_stop=False)
            logw = (codewords * -llrs).sum(axis=1)
            w = np.exp(logw - logw.max())
            w /= w.sum()
            p_one = (w[:, None] * codewords).sum(axis=0)
            p_one_bp = 1.0 / (1.0 + np.exp(res.posterior_llrs))
            assert np.max(np.abs(p_one - p_one_bp)) < 1e-9

    def test_converged_iff_zero_syndrome(self, hamming, rng):
        for trial in range(30):
            llrs = rng.normal(0, 1.5, 7)
            res = decode_bp(hamming, llrs, 4)
            assert res.converged == (int(hamming.syndrome(res.hard_bits).sum()) == 0)

    def test_deterministic(self, small_code, rng):
        llrs = rng.normal(0, 1.0, small_code.n)
        a = decode_bp(small_code, llrs, 20)
        b = decode_bp(small_code, llrs, 20)
        assert np.array_equal(a.posterior_llrs, b.posterior_llrs)

    def test_llr_length_check(self, hamming):
        with pytest.raises(ValueError, match="length"):
            decode_bp(hamming, np.zeros(6), 5)


class TestSymbolConversions:
    def test_bpsk_uninformative(self):
        dist = llr_to_symbol_dist(np.array([0.0]), 2)
        assert dist[0] == pytest.approx([0.5, 0.5])

    def test_bpsk_capped_llr(self):
        dist = llr_to_symbol_dist(np.array([20.0]), 2)
        p1 = 1.0 / (1.0 + math.exp(20.0))
        assert dist[0, 0] == pytest.approx(1.0 - p1, rel=1e-12)
        assert dist[0, 1] == pytest.approx(p1, rel=1e-9)

    def test_bpsk_scalar_logistic(self, rng):
        llrs = rng.normal(0, 3, 16)
        dist = llr_to_symbol_dist(llrs, 2)
        assert dist[:, 1] == pytest.approx(1.0 / (1.0 + np.exp(llrs)))
        back = symbol_dist_to_llr(dist, 2)
        assert back == pytest.approx(llrs, abs=1e-9)

    @given(st.lists(st.floats(-8, 8), min_size=2, max_size=12).filter(
        lambda v: len(v) % 2 == 0))
    @settings(max_examples=60, deadline=None)
    def test_qpsk_roundtrip_identity(self, llr_list):
        llrs = np.asarray(llr_list)
        dist = llr_to_symbol_dist(llrs, 4)
        assert np.allclose(dist.sum(axis=1), 1.0)
        back = symbol_dist_to_llr(dist, 4)
        assert np.allclose(back, llrs, atol=1e-8)

    def test_symbol_distribution_validation(self):
        SymbolDistribution(np.array([0.5, 0.5])).validate()
        with pytest.raises(ValueError):
            SymbolDistribution(np.array([0.7, 0.7])).validate()
        d = SymbolDistribution.normalized(np.array([2.0, 6.0]))
        assert d.probs == pytest.approx([0.25, 0.75])


class TestPegCode:
    def test_regular_degree_and_rate(self):
        code = peg_code(128, 0.5, var_degree=3, seed=2)
        assert all(len(a) == 3 for a in code.var_neighbors)
        assert code.k_dim >= 64

    def test_no_duplicate_edges(self):
        code = peg_code(64, 0.5, seed=3)
        for nbrs in code.var_neighbors:
            assert len(set(nbrs.tolist())) == len(nbrs)

    def test_girth_at_least_four(self):
        # no two checks share more than one variable
        code = peg_code(96, 0.5, seed=4)
        sets = [set(a.tolist()) for a in code.check_neighbors]
        for i in range(len(sets)):
            for j in range(i + 1, len(sets)):
                assert len(sets[i] & sets[j]) <= 1
