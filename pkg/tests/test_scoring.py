import numpy as np
import pytest

from refdiff import (
    Direction,
    build_positional_bias,
    combine_proposal_embedding,
    discriminative_score,
    fuse_scores,
    generative_score,
    select_best,
)
from refdiff.errors import (
    DegenerateMask,
    DimMismatch,
    EmptyProposalSet,
    LengthMismatch,
    ZeroVector,
)

from oracles import naive_argmax, naive_generative_score

RNG = np.random.default_rng(321)


def test_generative_known_value():
    c = np.array([[1.0, 0.0], [0.0, 0.0]])
    mask = np.array([[1, 0], [0, 0]], dtype=np.uint8)
    assert generative_score(c, mask) == pytest.approx(1.0)


def test_generative_uniform_map_is_zero():
    c = np.full((4, 4), 0.5)
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[1:3, 1:3] = 1
    assert generative_score(c, mask) == pytest.approx(0.0)


def test_generative_full_mask_degenerate():
    c = RNG.random((4, 4))
    with pytest.raises(DegenerateMask):
        generative_score(c, np.ones((4, 4), dtype=np.uint8))
    with pytest.raises(DegenerateMask):
        generative_score(c, np.zeros((4, 4), dtype=np.uint8))


def test_generative_complement_antisymmetry():
    for _ in range(50):
        c = RNG.random((8, 8))
        mask = RNG.integers(0, 2, size=(8, 8)).astype(np.uint8)
        if mask.sum() in (0, mask.size):
            continue
        s = generative_score(c, mask)
        s_comp = generative_score(c, 1 - mask)
        assert abs(s + s_comp) <= 1e-9


def test_generative_linear_in_map():
    c = RNG.random((6, 6))
    mask = np.zeros((6, 6), dtype=np.uint8)
    mask[2:5, 1:4] = 1
    assert generative_score(3.5 * c, mask) == pytest.approx(3.5 * generative_score(c, mask))


def test_generative_bounded():
    for _ in range(20):
        c = RNG.random((5, 5))
        mask = RNG.integers(0, 2, size=(5, 5)).astype(np.uint8)
        if mask.sum() in (0, mask.size):
            continue
        assert -1.0 <= generative_score(c, mask) <= 1.0


def test_bias_empty_is_all_ones():
    bias = build_positional_bias(set(), 5, 7)
    assert np.all(bias.data == 1.0)


def test_bias_left_ramp():
    bias = build_positional_bias({Direction.LEFT}, 3, 2)
    assert np.allclose(bias.data[:, 0], [1.0, 0.5, 0.0])
    assert np.allclose(bias.data[:, 1], [1.0, 0.5, 0.0])


def test_bias_left_top_product():
    bias = build_positional_bias({Direction.LEFT, Direction.TOP}, 2, 2)
    assert np.allclose(bias.data, np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_bias_right_bottom():
    bias = build_positional_bias({Direction.RIGHT}, 4, 1)
    assert np.allclose(bias.data[:, 0], [0.0, 1 / 3, 2 / 3, 1.0])
    bias = build_positional_bias({Direction.BOTTOM}, 1, 3)
    assert np.allclose(bias.data[0, :], [0.0, 0.5, 1.0])


def test_bias_singleton_axis_is_ones():
    bias = build_positional_bias({Direction.LEFT}, 1, 4)
    assert np.all(bias.data == 1.0)


def test_bias_cosine_profile():
    bias = build_positional_bias({Direction.LEFT}, 5, 1, profile="cosine")
    col = bias.data[:, 0]
    assert col[0] == pytest.approx(1.0)
    assert col[-1] == pytest.approx(0.0)
    assert np.all(np.diff(col) < 0)
    assert col[2] == pytest.approx(0.5)


def test_bias_values_in_unit_interval():
    bias = build_positional_bias({Direction.LEFT, Direction.BOTTOM}, 9, 6)
    assert bias.data.min() >= 0.0
    assert bias.data.max() <= 1.0


def test_combine_extremes():
    e_attn = np.array([3.0, 0.0])
    e_crop = np.array([0.0, 5.0])
    assert np.allclose(combine_proposal_embedding(e_attn, e_crop, 1.0), [1.0, 0.0])
    assert np.allclose(combine_proposal_embedding(e_attn, e_crop, 0.0), [0.0, 1.0])


def test_combine_known_value():
    v = combine_proposal_embedding(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.3)
    expected = np.array([0.3, 0.7]) / np.linalg.norm([0.3, 0.7])
    assert np.allclose(v, expected, atol=1e-12)
    assert v == pytest.approx([0.3939, 0.9192], abs=1e-4)


def test_combine_errors():
    with pytest.raises(DimMismatch):
        combine_proposal_embedding(np.ones(3), np.ones(4), 0.5)
    with pytest.raises(ZeroVector):
        combine_proposal_embedding(np.zeros(3), np.zeros(3), 0.5)


def test_combine_raw_mode_skips_normalization():
    v = combine_proposal_embedding(
        np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.3, normalize=False
    )
    assert np.allclose(v, [0.3, 0.7])


def test_discriminative_self_similarity():
    r = np.array([0.6, 0.8])
    assert discriminative_score(r, r) == pytest.approx(1.0)


def test_discriminative_orthogonal():
    assert discriminative_score(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_discriminative_known_value():
    assert discriminative_score(np.array([0.6, 0.8]), np.array([1.0, 0.0])) == pytest.approx(0.6)


def test_discriminative_dim_mismatch():
    with pytest.raises(DimMismatch):
        discriminative_score(np.ones(3), np.ones(2))


def test_fuse_extremes():
    s_gen = [0.5, -0.2, 0.9]
    s_dis = [0.1, 0.8, 0.3]
    assert fuse_scores(s_gen, s_dis, 1.0) == s_gen
    assert fuse_scores(s_gen, s_dis, 0.0) == s_dis


def test_fuse_known_value():
    assert fuse_scores([0.5], [0.2], 0.1)[0] == pytest.approx(0.23)


def test_fuse_length_mismatch():
    with pytest.raises(LengthMismatch):
        fuse_scores([1.0], [1.0, 2.0], 0.5)


def test_fuse_missing_branch_rules():
    assert fuse_scores([0.5, 0.1], None, 1.0) == [0.5, 0.1]
    assert fuse_scores(None, [0.4], 0.0) == [0.4]
    with pytest.raises(LengthMismatch):
        fuse_scores([0.5], None, 0.5)
    with pytest.raises(LengthMismatch):
        fuse_scores(None, [0.5], 0.5)
    with pytest.raises(LengthMismatch):
        fuse_scores(None, None, 0.5)


def _dummy_masks(n):
    masks = []
    for i in range(n):
        m = np.zeros((4, 4), dtype=np.uint8)
        m[i % 4, (i // 4) % 4] = 1
        masks.append(m)
    return masks


def test_select_single():
    sel = select_best([0.4], _dummy_masks(1))
    assert sel.selected_index == 0


def test_select_tie_breaks_low():
    sel = select_best([0.2, 0.9, 0.9], _dummy_masks(3))
    assert sel.selected_index == 1


def test_select_random_against_scan_oracle():
    scores = list(RNG.random(50))
    sel = select_best(scores, _dummy_masks(50))
    assert sel.selected_index == naive_argmax(scores)


def test_select_empty():
    with pytest.raises(EmptyProposalSet):
        select_best([], [])


def test_constant_shift_of_generative_scores_preserves_argmax():
    for _ in range(100):
        n = int(RNG.integers(2, 12))
        s_gen = list(RNG.random(n))
        s_dis = list(RNG.random(n))
        alpha = float(RNG.random())
        delta = float(RNG.normal()) * 10
        base = fuse_scores(s_gen, s_dis, alpha)
        shifted = fuse_scores([g + delta for g in s_gen], s_dis, alpha)
        assert naive_argmax(base) == naive_argmax(shifted)
        for b, sh in zip(base, shifted):
            assert sh - b == pytest.approx(alpha * delta)


def test_generative_matches_naive_oracle():
    for _ in range(25):
        c = RNG.random((9, 7))
        mask = RNG.integers(0, 2, size=(9, 7)).astype(np.uint8)
        if mask.sum() in (0, mask.size):
            continue
        assert generative_score(c, mask) == pytest.approx(
            naive_generative_score(c, mask), abs=1e-12
        )
