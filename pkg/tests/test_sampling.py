"""Sampling oracles: seed derivation, index draws, masks, serialization."""

import numpy as np
import pytest

from mimomc import sampling as sp
from mimomc.signal_model import Scheme


def test_derive_row_seed_deterministic():
    assert sp.derive_row_seed(12345, 3, 7) == sp.derive_row_seed(12345, 3, 7)


def test_derive_row_seed_no_collisions_on_small_grid():
    seeds = {sp.derive_row_seed(12345, l, q)
             for l in range(100) for q in range(100)}
    assert len(seeds) == 100 * 100


def test_derive_row_seed_no_collisions_across_sequential_masters():
    # Sequential master seeds with varying row index must not alias; a raw
    # XOR fold of master and row would collide on master ^ row coincidences.
    seeds = {sp.derive_row_seed(m, l, 0)
             for m in range(3000) for l in range(20)}
    assert len(seeds) == 3000 * 20


def test_derive_row_seed_distinguishes_all_words():
    base = sp.derive_row_seed(1, 2, 3)
    assert sp.derive_row_seed(2, 2, 3) != base
    assert sp.derive_row_seed(1, 3, 3) != base
    assert sp.derive_row_seed(1, 2, 4) != base


def test_draw_indices_sorted_distinct_in_range():
    for seed in range(500):
        idx = sp.draw_indices(seed, 50, 10)
        assert idx.shape == (10,)
        assert np.all(np.diff(idx) > 0)
        assert idx[0] >= 0 and idx[-1] < 50


def test_draw_indices_full_and_empty_draws():
    np.testing.assert_array_equal(sp.draw_indices(3, 6, 6), np.arange(6))
    assert sp.draw_indices(3, 6, 0).size == 0


def test_draw_indices_deterministic_per_seed():
    np.testing.assert_array_equal(sp.draw_indices(42, 30, 7),
                                  sp.draw_indices(42, 30, 7))
    distinct = sum(not np.array_equal(sp.draw_indices(s, 30, 7),
                                      sp.draw_indices(s + 1, 30, 7))
                   for s in range(50))
    assert distinct > 40


def test_draw_indices_rejects_overdraw_and_negatives():
    with pytest.raises(ValueError):
        sp.draw_indices(0, 4, 5)
    with pytest.raises(ValueError):
        sp.draw_indices(0, 4, -1)


def test_draw_indices_uniform_element_marginals():
    # Drawing 2 of 4 must include each element with probability 1/2.
    hits = np.zeros(4)
    n = 100_000
    for seed in range(n):
        hits[sp.draw_indices(seed, 4, 2)] += 1
    np.testing.assert_allclose(hits / n, 0.5, atol=0.01)


def test_draw_indices_uniform_over_pairs():
    counts = {}
    n = 30_000
    for seed in range(n):
        pair = tuple(sp.draw_indices(seed, 4, 2))
        counts[pair] = counts.get(pair, 0) + 1
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / n - 1 / 6) < 0.02


def test_make_mask_rows_derive_from_master_seed():
    mask = sp.make_mask(777, 5, 12, 4, Scheme.MATCHED_FILTER, pulse_index=3)
    for l in range(5):
        seed = sp.derive_row_seed(777, l, 3)
        assert mask.per_row_seed[l] == seed
        np.testing.assert_array_equal(mask.per_row_indices[l],
                                      sp.draw_indices(seed, 12, 4))


def test_make_mask_pulses_are_independent():
    m1 = sp.make_mask(777, 8, 20, 10, Scheme.SUB_NYQUIST, pulse_index=1)
    m2 = sp.make_mask(777, 8, 20, 10, Scheme.SUB_NYQUIST, pulse_index=2)
    assert m1.per_row_indices != m2.per_row_indices


def test_make_mask_count_bounds():
    with pytest.raises(ValueError):
        sp.make_mask(0, 4, 8, 0, Scheme.MATCHED_FILTER)
    with pytest.raises(ValueError):
        sp.make_mask(0, 4, 8, 9, Scheme.MATCHED_FILTER)


def test_mask_marginal_inclusion_is_uniform():
    # Half the columns per row: every cell observed with frequency 1/2.
    counts = np.zeros((20, 20))
    n = 3000
    for seed in range(n):
        counts += sp.make_mask(seed, 20, 20, 10, Scheme.MATCHED_FILTER).bool_array()
    per_column = counts.mean(axis=0) / n
    np.testing.assert_allclose(per_column, 0.5, atol=0.01)


def test_mask_properties_and_bool_array_agree():
    mask = sp.make_mask(5, 6, 10, 3, Scheme.SUB_NYQUIST)
    b = mask.bool_array()
    assert mask.count_per_row == 3
    assert mask.num_observed == 18
    assert mask.occupancy == pytest.approx(0.3)
    assert b.sum() == 18
    for l, idx in enumerate(mask.per_row_indices):
        np.testing.assert_array_equal(np.flatnonzero(b[l]), idx)


def test_observation_mask_validates_structure():
    with pytest.raises(ValueError):
        sp.ObservationMask(n_rows=2, n_cols=4,
                           per_row_indices=((0, 1), (1, 0)),
                           per_row_seed=(1, 2), scheme=Scheme.MATCHED_FILTER)
    with pytest.raises(ValueError):
        sp.ObservationMask(n_rows=2, n_cols=4,
                           per_row_indices=((0, 1), (1, 2, 3)),
                           per_row_seed=(1, 2), scheme=Scheme.MATCHED_FILTER)
    with pytest.raises(ValueError):
        sp.ObservationMask(n_rows=2, n_cols=4,
                           per_row_indices=((0, 4), (1, 2)),
                           per_row_seed=(1, 2), scheme=Scheme.MATCHED_FILTER)


def test_observe_is_a_projection():
    rng = np.random.default_rng(1)
    full = rng.standard_normal((6, 10)) + 1j * rng.standard_normal((6, 10))
    mask = sp.make_mask(9, 6, 10, 4, Scheme.MATCHED_FILTER)
    once = sp.observe(full, mask)
    twice = sp.observe(once.values, mask)
    np.testing.assert_array_equal(once.values, twice.values)
    b = mask.bool_array()
    assert np.all(once.values[~b] == 0)
    np.testing.assert_array_equal(once.values[b], full[b])


def test_observe_is_self_adjoint():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
    y = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
    mask = sp.make_mask(3, 5, 8, 4, Scheme.SUB_NYQUIST)
    px = sp.observe(x, mask).values
    py = sp.observe(y, mask).values
    lhs = np.vdot(px, y)
    rhs = np.vdot(x, py)
    assert abs(lhs - rhs) < 1e-12


def test_extract_and_assemble_round_trip():
    rng = np.random.default_rng(3)
    full = rng.standard_normal((7, 16)) + 1j * rng.standard_normal((7, 16))
    mask = sp.make_mask(21, 7, 16, 5, Scheme.SUB_NYQUIST, pulse_index=2)
    forwarded = sp.extract_row_samples(full, mask)
    rebuilt = sp.assemble_fusion_matrix(forwarded, Scheme.SUB_NYQUIST, 7, 16)
    np.testing.assert_array_equal(rebuilt.values, sp.observe(full, mask).values)
    assert rebuilt.mask.per_row_indices == mask.per_row_indices


def test_assemble_with_wrong_seed_places_samples_elsewhere():
    rng = np.random.default_rng(4)
    full = rng.standard_normal((4, 12)) + 1j * rng.standard_normal((4, 12))
    mask = sp.make_mask(31, 4, 12, 5, Scheme.MATCHED_FILTER)
    forwarded = sp.extract_row_samples(full, mask)
    l, samples, seed = forwarded[0]
    assert not np.array_equal(sp.draw_indices(seed + 1, 12, 5),
                              sp.draw_indices(seed, 12, 5))
    forwarded[0] = (l, samples, seed + 1)
    rebuilt = sp.assemble_fusion_matrix(forwarded, Scheme.MATCHED_FILTER, 4, 12)
    assert np.max(np.abs(rebuilt.values - sp.observe(full, mask).values)) > 1e-12


def test_assemble_validates_row_coverage_and_counts():
    rng = np.random.default_rng(5)
    full = rng.standard_normal((3, 8)).astype(complex)
    mask = sp.make_mask(1, 3, 8, 2, Scheme.MATCHED_FILTER)
    forwarded = sp.extract_row_samples(full, mask)
    with pytest.raises(ValueError):
        sp.assemble_fusion_matrix(forwarded[:2], Scheme.MATCHED_FILTER, 3, 8)
    dup = [forwarded[0], forwarded[0], forwarded[2]]
    with pytest.raises(ValueError):
        sp.assemble_fusion_matrix(dup, Scheme.MATCHED_FILTER, 3, 8)
    uneven = [forwarded[0], (1, forwarded[1][1][:1], forwarded[1][2]),
              forwarded[2]]
    with pytest.raises(ValueError):
        sp.assemble_fusion_matrix(uneven, Scheme.MATCHED_FILTER, 3, 8)


def test_mask_csv_round_trip(tmp_path):
    mask = sp.make_mask(99, 6, 14, 4, Scheme.SUB_NYQUIST, pulse_index=2)
    path = tmp_path / "mask.csv"
    sp.mask_to_csv(mask, path)
    back = sp.mask_from_csv(path)
    assert back.n_rows == mask.n_rows
    assert back.n_cols == mask.n_cols
    assert back.scheme == mask.scheme
    assert back.per_row_seed == mask.per_row_seed
    assert back.per_row_indices == mask.per_row_indices


def test_observed_matrix_shape_checked():
    mask = sp.make_mask(2, 3, 6, 2, Scheme.MATCHED_FILTER)
    with pytest.raises(ValueError):
        sp.ObservedMatrix(values=np.zeros((3, 5)), mask=mask)
