import math

import numpy as np
import pytest

from tsprep.tensor_core import (
    Channel,
    ChannelLayout,
    ChannelStats,
    Dataset,
    append_time_channel,
    channel_stats,
    pad_to_longest,
    standardise,
)


def test_pad_shapes_and_padding():
    series = [np.ones((2, 3)), np.full((5, 3), 2.0)]
    X, lengths = pad_to_longest(series)
    assert X.shape == (2, 5, 3)
    np.testing.assert_array_equal(lengths, [2, 5])
    assert np.isnan(X[0, 2:, :]).all()
    assert not np.isnan(X[1]).any()


def test_pad_single_series_identity():
    X, lengths = pad_to_longest([np.arange(6.0).reshape(3, 2)])
    assert X.shape == (1, 3, 2)
    assert not np.isnan(X).any()


def test_pad_errors():
    with pytest.raises(ValueError, match="no series"):
        pad_to_longest([])
    with pytest.raises(ValueError, match="channel-count"):
        pad_to_longest([np.ones((2, 3)), np.ones((2, 4))])
    with pytest.raises(ValueError, match="at least one step"):
        pad_to_longest([np.ones((0, 3))])


def test_append_time_channel_and_inverse():
    X, lengths = pad_to_longest([np.ones((2, 1)), np.ones((4, 1))])
    times = [np.arange(2.0), np.arange(4.0)]
    out = append_time_channel(X, times)
    assert out.shape == (2, 4, 2)
    np.testing.assert_array_equal(out[1, :, 0], [0, 1, 2, 3])
    assert np.isnan(out[0, 2:, 0]).all()
    np.testing.assert_array_equal(out[:, :, 1:], X)  # dropping channel 0 recovers input


def test_append_time_channel_passthrough_stamps():
    X = np.zeros((1, 3, 1))
    out = append_time_channel(X, [np.array([0.0, 37.0, 90.0])])
    np.testing.assert_array_equal(out[0, :, 0], [0, 37, 90])


def test_channel_stats_mean():
    X = np.array([[[1.0], [3.0], [np.nan]]])
    stats = channel_stats(X, np.array([3]))
    assert stats.mean[0] == 2.0
    assert stats.count[0] == 2
    assert stats.available[0]


def test_channel_stats_mode_smallest_tie():
    X = np.array([[[0.0], [0.0], [1.0]]])
    stats = channel_stats(X, np.array([3]), categorical=[0])
    assert stats.mode[0] == 0.0
    # tie: {2.0 x2, 1.0 x2} -> smallest value wins
    X2 = np.array([[[2.0], [1.0], [2.0], [1.0]]])
    stats2 = channel_stats(X2, np.array([4]), categorical=[0])
    assert stats2.mode[0] == 1.0


def test_channel_stats_unobserved_channel():
    X = np.full((2, 3, 2), np.nan)
    X[:, :, 0] = 1.0
    stats = channel_stats(X, np.array([3, 3]))
    assert stats.available[0] and not stats.available[1]
    assert math.isnan(stats.mean[1])


def layout_for(n_data, time=True):
    channels = []
    if time:
        channels.append(Channel("time", "time", 0))
    channels += [Channel(f"d{i}", "data", i + 1) for i in range(n_data)]
    return ChannelLayout(tuple(channels))


def test_standardise_train_definitional():
    rng = np.random.RandomState(0)
    X = rng.randn(6, 10, 3) * 4 + 7
    X[:, :, 0] = np.arange(10)  # time channel
    layout = layout_for(2)
    stats = channel_stats(X[:, :, 1:], np.full(6, 10), categorical=())
    out = standardise(X, layout, stats)
    for c in (1, 2):
        observed = out[:, :, c][~np.isnan(out[:, :, c])]
        assert abs(observed.mean()) < 1e-12
        assert abs(observed.std(ddof=0) - 1) < 1e-12
    np.testing.assert_array_equal(out[:, :, 0], X[:, :, 0])  # time untouched


def test_standardise_constant_channel_zeroes():
    X = np.full((2, 3, 2), 5.0)
    X[:, :, 0] = 0.0
    layout = layout_for(1)
    stats = channel_stats(X[:, :, 1:], np.array([3, 3]))
    out = standardise(X, layout, stats)
    np.testing.assert_array_equal(out[:, :, 1], np.zeros((2, 3)))


def test_standardise_validation_uses_train_stats():
    # hand oracle on a 4-sequence set: 2 train rows define mean/std, the
    # transform of the 2 validation rows is checked value by value
    X = np.zeros((4, 2, 2))
    X[:, :, 0] = [[0, 1]] * 4
    X[0, :, 1] = [1.0, 3.0]
    X[1, :, 1] = [5.0, 7.0]
    X[2, :, 1] = [10.0, 20.0]
    X[3, :, 1] = [-2.0, 4.0]
    layout = layout_for(1)
    stats = channel_stats(X[:2, :, 1:], np.array([2, 2]))
    mu = (1 + 3 + 5 + 7) / 4.0
    sd = math.sqrt(((1 - mu) ** 2 + (3 - mu) ** 2 + (5 - mu) ** 2 + (7 - mu) ** 2) / 4.0)
    assert stats.mean[0] == mu and abs(stats.std[0] - sd) < 1e-15
    out = standardise(X, layout, stats)
    np.testing.assert_allclose(out[2, :, 1], [(10 - mu) / sd, (20 - mu) / sd], rtol=1e-15)
    np.testing.assert_allclose(out[3, :, 1], [(-2 - mu) / sd, (4 - mu) / sd], rtol=1e-15)
    # validation rows are NOT mean 0 / std 1 under train statistics
    val = out[2:, :, 1]
    assert abs(val.mean()) > 0.1


def test_standardise_keeps_nan_and_mask_delta():
    X = np.zeros((1, 2, 4))
    X[0, :, 0] = [0, 1]
    X[0, :, 1] = [np.nan, 2.0]
    X[0, :, 2] = [1.0, 0.0]  # mask block
    X[0, :, 3] = [0.0, 1.0]  # delta block
    layout = ChannelLayout(
        (
            Channel("time", "time", 0),
            Channel("d0", "data", 1),
            Channel("mask_d0", "mask", 1),
            Channel("delta_d0", "delta", 1),
        )
    )
    stats = channel_stats(X[:, :, 1:2], np.array([2]))
    out = standardise(X, layout, stats)
    assert math.isnan(out[0, 0, 1])
    np.testing.assert_array_equal(out[0, :, 2], X[0, :, 2])
    np.testing.assert_array_equal(out[0, :, 3], X[0, :, 3])


def test_layout_enforces_block_order():
    with pytest.raises(ValueError, match="ordered"):
        ChannelLayout((Channel("mask_x", "mask", 1), Channel("x", "data", 1)))


def make_dataset(has_test=True, split="train"):
    n = 6
    X = np.arange(n * 2 * 1, dtype=float).reshape(n, 2, 1)
    y = np.arange(n, dtype=float).reshape(n, 1)
    lengths = np.full(n, 2, dtype=np.int64)
    codes = np.array([0, 0, 1, 1, 2, 2] if has_test else [0, 0, 0, 1, 1, 1], dtype=np.int8)
    stats = channel_stats(X, lengths)
    return Dataset(
        X_full=X,
        y_full=y,
        length_full=lengths,
        layout=ChannelLayout((Channel("d0", "data", 1),)),
        stats=stats,
        split_of_index=codes,
        split=split,
        has_test=has_test,
    )


def test_dataset_split_views():
    ds = make_dataset(split="val")
    assert ds.X.shape == (2, 2, 1)
    np.testing.assert_array_equal(ds.y, ds.y_val)
    np.testing.assert_array_equal(ds.X_train, ds.X_full[:2])
    np.testing.assert_array_equal(ds.length_test, [2, 2])
    assert ds.split_size("train") == 2
    assert ds.splits == ("train", "val", "test")


def test_dataset_without_test_split_raises():
    ds = make_dataset(has_test=False)
    with pytest.raises(ValueError, match="no test split"):
        _ = ds.X_test
    assert ds.splits == ("train", "val")


def test_dataset_unknown_split_rejected():
    ds = make_dataset()
    with pytest.raises(ValueError, match="unknown split"):
        ds.tensors("dev")
