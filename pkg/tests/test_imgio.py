import logging

import numpy as np
import pytest
import tifffile
from PIL import Image

from thermopan import imgio
from thermopan.imgio import ThermalFrame, gen_synthetic_dataset, load_thermal, pair_dataset, save_image


def _write_png(path, arr):
    Image.fromarray(arr).save(path)


class TestLoadThermal:
    def test_16bit_lossless(self, tmp_path):
        arr = np.array([[0, 32768, 65535]], dtype=np.uint16)
        tifffile.imwrite(tmp_path / "t.tif", arr)
        f = load_thermal(tmp_path / "t.tif")
        np.testing.assert_array_equal(f.pixels, [[0, 32768, 65535]])
        assert f.bit_depth == 16 and not f.normalized

    def test_8bit(self, tmp_path):
        _write_png(tmp_path / "t.png", np.full((4, 5), 255, dtype=np.uint8))
        f = load_thermal(tmp_path / "t.png")
        assert f.bit_depth == 8
        assert np.all(f.pixels == 255)

    def test_16bit_png(self, tmp_path):
        arr = np.array([[1, 60000], [7, 3]], dtype=np.uint16)
        Image.fromarray(arr).save(tmp_path / "t.png")
        f = load_thermal(tmp_path / "t.png")
        np.testing.assert_array_equal(f.pixels, arr)
        assert f.bit_depth == 16

    def test_rgb_rejected(self, tmp_path):
        _write_png(tmp_path / "c.png", np.zeros((4, 4, 3), dtype=np.uint8))
        with pytest.raises(ValueError, match="thermal input must be single-channel"):
            load_thermal(tmp_path / "c.png")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_thermal(tmp_path / "nope.tif")

    def test_unsupported_format(self, tmp_path):
        (tmp_path / "x.bmp").write_bytes(b"BM")
        with pytest.raises(ValueError, match="unsupported"):
            load_thermal(tmp_path / "x.bmp")

    def test_float_tiff_rejected(self, tmp_path):
        tifffile.imwrite(tmp_path / "f.tif", np.zeros((3, 3), dtype=np.float32))
        with pytest.raises(ValueError):
            load_thermal(tmp_path / "f.tif")


class TestSaveImage:
    def test_one_at_depth8(self, tmp_path):
        save_image(np.ones((2, 2)), tmp_path / "a.png", 8)
        assert np.asarray(Image.open(tmp_path / "a.png")).max() == 255

    def test_half_at_depth16(self, tmp_path):
        # round(0.5 * 65535) = round(32767.5) = 32768
        save_image(np.full((2, 2), 0.5), tmp_path / "a.tif", 16)
        assert np.all(tifffile.imread(tmp_path / "a.tif") == 32768)

    def test_out_of_range_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            save_image(np.full((2, 2), 1.2), tmp_path / "a.png", 8)
        with pytest.raises(ValueError):
            save_image(np.full((2, 2), -0.1), tmp_path / "a.png", 8)

    @pytest.mark.parametrize("depth,suffix", [(8, ".png"), (16, ".tif"), (8, ".tif")])
    def test_save_load_save_idempotent(self, tmp_path, rng, depth, suffix):
        img = rng.random((9, 7, 3))
        save_image(img, tmp_path / f"a{suffix}", depth)
        once = imgio.load_image(tmp_path / f"a{suffix}")
        save_image(once, tmp_path / f"b{suffix}", depth)
        twice = imgio.load_image(tmp_path / f"b{suffix}")
        np.testing.assert_array_equal(once, twice)
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()

    def test_16bit_tiff_is_single_strip_uncompressed(self, tmp_path):
        save_image(np.random.default_rng(0).random((40, 30)), tmp_path / "s.tif", 16)
        with tifffile.TiffFile(tmp_path / "s.tif") as tf:
            page = tf.pages[0]
            assert page.compression == 1
            assert len(page.dataoffsets) == 1
            assert page.dtype == np.uint16


class TestThermalRoundTrip:
    def test_raw_frame(self, tmp_path, rng):
        px = rng.integers(0, 65536, size=(13, 11)).astype(float)
        frame = ThermalFrame(px, 16)
        imgio.save_thermal(frame, tmp_path / "f.tif")
        np.testing.assert_array_equal(load_thermal(tmp_path / "f.tif").pixels, px)

    def test_non_integer_raw_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            imgio.save_thermal(ThermalFrame(np.full((2, 2), 1.5)), tmp_path / "f.tif")

    def test_frame_invariants(self):
        with pytest.raises(ValueError):
            ThermalFrame(np.full((2, 2), 2.0), normalized=True)
        with pytest.raises(ValueError):
            ThermalFrame(np.zeros((2, 2)), min_raw=3, max_raw=1)


def _touch_pair(root, stem, th_shape=(8, 8), vis_shape=(8, 8)):
    (root / "thermal").mkdir(exist_ok=True)
    (root / "visible").mkdir(exist_ok=True)
    if th_shape:
        tifffile.imwrite(root / "thermal" / f"{stem}.tif", np.zeros(th_shape, dtype=np.uint16))
    if vis_shape:
        _write_png(root / "visible" / f"{stem}.png", np.zeros((*vis_shape, 3), dtype=np.uint8))


class TestPairDataset:
    def test_matched_sorted(self, tmp_path):
        _touch_pair(tmp_path, "b")
        _touch_pair(tmp_path, "a")
        pairs = pair_dataset(tmp_path / "thermal", tmp_path / "visible")
        assert [p.id for p in pairs] == ["a", "b"]

    def test_unmatched_reported(self, tmp_path, caplog):
        _touch_pair(tmp_path, "a", vis_shape=None)
        _touch_pair(tmp_path, "b", th_shape=None)
        with caplog.at_level(logging.WARNING):
            pairs = pair_dataset(tmp_path / "thermal", tmp_path / "visible")
        assert pairs == []
        msgs = [r.getMessage() for r in caplog.records if "unmatched" in r.getMessage()]
        assert len(msgs) == 2

    def test_size_mismatch_excluded(self, tmp_path, caplog):
        _touch_pair(tmp_path, "a", th_shape=(100, 100), vis_shape=(200, 200))
        _touch_pair(tmp_path, "b")
        with caplog.at_level(logging.WARNING):
            pairs = pair_dataset(tmp_path / "thermal", tmp_path / "visible")
        assert [p.id for p in pairs] == ["b"]
        assert any("a rejected: size mismatch" in r.getMessage() for r in caplog.records)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            pair_dataset(tmp_path / "x", tmp_path / "y")


class TestSynthetic:
    def test_deterministic(self):
        a = gen_synthetic_dataset(3, 2, 40, 48)
        b = gen_synthetic_dataset(3, 2, 40, 48)
        for x, y in zip(a, b):
            assert x.id == y.id
            np.testing.assert_array_equal(x.thermal.pixels, y.thermal.pixels)
            np.testing.assert_array_equal(x.visible, y.visible)

    def test_seed_changes_output(self):
        a = gen_synthetic_dataset(1, 1, 32, 32)[0]
        b = gen_synthetic_dataset(2, 1, 32, 32)[0]
        assert not np.array_equal(a.thermal.pixels, b.thermal.pixels)

    def test_contract(self):
        ds = gen_synthetic_dataset(1, 4, 64, 64)
        assert len(ds) == 4
        for s in ds:
            assert s.thermal.shape == (64, 64) and s.visible.shape == (64, 64, 3)
            assert not s.thermal.normalized and s.thermal.bit_depth == 16
            assert s.thermal.pixels.max() > 1.0
            assert np.all(s.thermal.pixels == np.round(s.thermal.pixels))
            assert 0.0 <= s.visible.min() and s.visible.max() <= 1.0

    def test_spike_rate_binomial(self):
        ds = gen_synthetic_dataset(11, 10, 256, 256)
        spikes = sum(int(np.isin(s.thermal.pixels, [200.0, 60000.0]).sum()) for s in ds)
        n = 10 * 256 * 256
        mean = imgio.SPIKE_PROB * n
        sd = np.sqrt(n * imgio.SPIKE_PROB * (1 - imgio.SPIKE_PROB))
        assert abs(spikes - mean) <= 3 * sd

    def test_temperature_to_colour_relation(self):
        # sky is cold and bright blue-white, foliage green, hot objects gray
        s = gen_synthetic_dataset(5, 1, 128, 128)[0]
        vis, th = s.visible, s.thermal.pixels
        sky = np.all(np.abs(vis - imgio.SKY_COLOR) < 0.05, axis=-1)
        hot = np.all(np.abs(vis - imgio.HOT_COLOR) < 0.05, axis=-1)
        assert sky.any() and hot.any()
        assert np.median(th[sky]) < np.median(th[hot])

    @pytest.mark.parametrize("kw", [dict(n=0, h=32, w=32), dict(n=1, h=31, w=32), dict(n=1, h=32, w=16)])
    def test_preconditions(self, kw):
        with pytest.raises(ValueError):
            gen_synthetic_dataset(0, **kw)

    def test_save_dataset_layout(self, tmp_path):
        ds = gen_synthetic_dataset(1, 2, 32, 32)
        imgio.save_dataset(ds, tmp_path)
        back = imgio.load_dataset(tmp_path)
        assert [s.id for s in back] == [s.id for s in ds]
        np.testing.assert_array_equal(back[0].thermal.pixels, ds[0].thermal.pixels)
        assert np.abs(back[0].visible - ds[0].visible).max() <= 0.5 / 255 + 1e-12
