import os
import subprocess
import sys

import numpy as np
import pytest

from stereofuse import _kernels
from stereofuse.disparity import (
    DisparityParams,
    compute_disparity_map,
    disparity_naive_oracle,
    sad_cost,
    to_grayscale,
)
from stereofuse.imgio import pgm16_decode, pgm16_encode

from conftest import shifted_pair

needs_numba = pytest.mark.skipif(
    not _kernels.HAVE_NUMBA, reason="numba unavailable or disabled"
)


class TestGrayscale:
    @pytest.mark.parametrize(
        "rgb,expected",
        [((255, 255, 255), 255), ((0, 0, 0), 0), ((255, 0, 0), 76)],
    )
    def test_luma_values(self, rgb, expected):
        img = np.full((2, 2, 3), rgb, dtype=np.uint8)
        assert to_grayscale(img)[0, 0] == expected

    def test_rejects_single_channel(self):
        with pytest.raises(ValueError, match="3-channel"):
            to_grayscale(np.zeros((4, 4), dtype=np.uint8))

    def test_rejects_non_uint8(self):
        with pytest.raises(ValueError, match="8-bit"):
            to_grayscale(np.zeros((4, 4, 3), dtype=np.float32))


class TestSadCost:
    def test_identical_blocks_cost_zero(self):
        img = np.random.default_rng(0).integers(0, 256, (9, 9), dtype=np.uint8)
        assert sad_cost(img, img, 4, 4, 0, DisparityParams()) == 0

    def test_unit_difference_counts_block_pixels(self):
        left = np.full((9, 9), 10, dtype=np.uint8)
        right = np.full((9, 9), 9, dtype=np.uint8)
        assert sad_cost(left, right, 4, 4, 0, DisparityParams()) == 25

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(7)
        left = rng.integers(0, 256, (9, 9), dtype=np.uint8)
        right = rng.integers(0, 256, (9, 9), dtype=np.uint8)
        params = DisparityParams(max_disparity=4)
        for v in range(2, 7):
            for u in range(2, 7):
                for d in range(0, u - 2 + 1):
                    expected = 0
                    for dy in range(-2, 3):
                        for dx in range(-2, 3):
                            expected += abs(
                                int(left[v + dy, u + dx]) - int(right[v + dy, u + dx - d])
                            )
                    assert sad_cost(left, right, u, v, d, params) == expected

    def test_out_of_bounds_block(self):
        img = np.zeros((9, 9), dtype=np.uint8)
        with pytest.raises(ValueError, match="out of bounds"):
            sad_cost(img, img, 1, 4, 0, DisparityParams())
        with pytest.raises(ValueError, match="out of bounds"):
            sad_cost(img, img, 4, 4, 3, DisparityParams())


class TestComputeDisparityMap:
    def test_identical_images_all_invalid(self):
        img = np.random.default_rng(1).integers(0, 256, (24, 40), dtype=np.uint8)
        params = DisparityParams(max_disparity=8, block_step=1)
        assert compute_disparity_map(img, img, params).max() == 0

    def test_shifted_pair_recovers_shift(self):
        k = 7
        left, right = shifted_pair(96, 48, k, seed=5)
        params = DisparityParams(max_disparity=16, block_step=1)
        dmap = compute_disparity_map(left, right, params)
        margin = k + 2
        interior = dmap[margin:-margin, margin:-margin]
        assert np.array_equal(interior, np.full_like(interior, k))

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(9)
        left = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        right = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        params = DisparityParams(max_disparity=10, block_step=1)
        assert np.array_equal(
            compute_disparity_map(left, right, params),
            disparity_naive_oracle(left, right, params),
        )

    def test_output_range(self):
        left, right = shifted_pair(64, 32, 3, seed=2)
        params = DisparityParams(max_disparity=12, block_step=1)
        dmap = compute_disparity_map(left, right, params)
        assert dmap.min() >= 0
        assert dmap.max() <= 12

    def test_deterministic_across_runs(self):
        left, right = shifted_pair(48, 48, 5, seed=3)
        params = DisparityParams(max_disparity=8)
        a = compute_disparity_map(left, right, params)
        b = compute_disparity_map(left, right, params)
        assert np.array_equal(a, b)

    def test_constant_images_tie_break_to_zero(self):
        img = np.full((20, 40), 128, dtype=np.uint8)
        params = DisparityParams(max_disparity=8, block_step=1)
        assert compute_disparity_map(img, img, params).max() == 0

    def test_block_mode_stamps_whole_blocks(self):
        k = 5
        left, right = shifted_pair(80, 40, k, seed=8)
        params = DisparityParams(max_disparity=12)  # step = block width = 5
        dmap = compute_disparity_map(left, right, params)
        margin = k + 5
        interior = dmap[margin:-margin, margin:-margin]
        assert np.array_equal(interior, np.full_like(interior, k))
        # values are constant over each 5x5 tile
        tiles = dmap[: 40 // 5 * 5, : 80 // 5 * 5].reshape(8, 5, 16, 5)
        assert (tiles == tiles[:, :1, :, :1]).all()

    def test_dimension_mismatch(self):
        a = np.zeros((16, 16), dtype=np.uint8)
        b = np.zeros((16, 18), dtype=np.uint8)
        with pytest.raises(ValueError, match="mismatch"):
            compute_disparity_map(a, b, DisparityParams(max_disparity=4))

    @pytest.mark.parametrize(
        "params",
        [
            DisparityParams(block_w=4),
            DisparityParams(block_h=0),
            DisparityParams(max_disparity=0),
            DisparityParams(block_step=0),
            DisparityParams(tie_break="largest-d"),
        ],
    )
    def test_invalid_params(self, params):
        img = np.zeros((16, 16), dtype=np.uint8)
        with pytest.raises(ValueError):
            compute_disparity_map(img, img, params)

    def test_max_disparity_must_fit_image(self):
        img = np.zeros((16, 16), dtype=np.uint8)
        with pytest.raises(ValueError, match="max_disparity"):
            compute_disparity_map(img, img, DisparityParams(max_disparity=16))


@needs_numba
class TestBackendEquivalence:
    @pytest.mark.parametrize("step", [1, 3, 5])
    def test_backends_bit_identical(self, step):
        rng = np.random.default_rng(100 + step)
        left = rng.integers(0, 256, (37, 53), dtype=np.uint8)
        right = rng.integers(0, 256, (37, 53), dtype=np.uint8)
        params = DisparityParams(max_disparity=14, block_step=step)
        a = compute_disparity_map(left, right, params, backend="numba")
        b = compute_disparity_map(left, right, params, backend="numpy")
        assert np.array_equal(a, b)

    def test_non_square_block_backends_agree(self):
        rng = np.random.default_rng(55)
        left = rng.integers(0, 256, (41, 47), dtype=np.uint8)
        right = rng.integers(0, 256, (41, 47), dtype=np.uint8)
        params = DisparityParams(block_w=7, block_h=3, max_disparity=9, block_step=2)
        a = compute_disparity_map(left, right, params, backend="numba")
        b = compute_disparity_map(left, right, params, backend="numpy")
        assert np.array_equal(a, b)

    def test_unknown_backend_rejected(self):
        img = np.zeros((16, 16), dtype=np.uint8)
        with pytest.raises(ValueError, match="backend"):
            compute_disparity_map(img, img, DisparityParams(max_disparity=4), backend="gpu")


def test_env_flag_selects_numpy_fallback():
    code = (
        "import numpy as np\n"
        "from stereofuse import _kernels\n"
        "from stereofuse.disparity import DisparityParams, compute_disparity_map\n"
        "assert not _kernels.HAVE_NUMBA\n"
        "assert _kernels.default_backend() == 'numpy'\n"
        "rng = np.random.default_rng(4)\n"
        "left = rng.integers(0, 256, (24, 36), dtype=np.uint8)\n"
        "right = rng.integers(0, 256, (24, 36), dtype=np.uint8)\n"
        "d = compute_disparity_map(left, right, DisparityParams(max_disparity=8))\n"
        "print(int(d.sum()))\n"
    )
    env = dict(os.environ, STEREOFUSE_NUMBA="0")
    result = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert result.returncode == 0, result.stderr
    # same inputs through the in-process (numba or numpy) path
    rng = np.random.default_rng(4)
    left = rng.integers(0, 256, (24, 36), dtype=np.uint8)
    right = rng.integers(0, 256, (24, 36), dtype=np.uint8)
    d = compute_disparity_map(left, right, DisparityParams(max_disparity=8))
    assert int(result.stdout.strip()) == int(d.sum())


class TestPgm16:
    def test_round_trip(self):
        rng = np.random.default_rng(12)
        dmap = rng.integers(0, 65, (17, 23)).astype(np.int32)
        assert np.array_equal(pgm16_decode(pgm16_encode(dmap)), dmap)

    def test_header_and_endianness(self):
        dmap = np.array([[258]], dtype=np.int32)
        data = pgm16_encode(dmap)
        assert data.startswith(b"P5\n1 1\n65535\n")
        assert data[-2:] == bytes([1, 2])  # big-endian 0x0102

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="range"):
            pgm16_encode(np.array([[70000]], dtype=np.int64))
        with pytest.raises(ValueError, match="range"):
            pgm16_encode(np.array([[-1]], dtype=np.int32))

    def test_decode_rejects_other_formats(self):
        with pytest.raises(ValueError, match="P5"):
            pgm16_decode(b"P2\n1 1\n255\n0")
        with pytest.raises(ValueError, match="maxval"):
            pgm16_decode(b"P5\n1 1\n255\n\x00")

    def test_decode_skips_comments(self):
        data = b"P5\n# a comment\n2 1\n65535\n" + bytes([0, 5, 0, 6])
        assert np.array_equal(pgm16_decode(data), np.array([[5, 6]]))
