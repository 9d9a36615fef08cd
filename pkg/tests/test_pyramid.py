import numpy as np
import pytest

from zoomstack import DimensionError, LaplacianPyramid, build_laplacian, recompose


class TestBuild:
    def test_constant_image(self):
        pyr = build_laplacian(np.full((16, 16, 3), 0.42))
        for band in pyr.bands:
            assert np.max(np.abs(band)) < 1e-12
        assert np.allclose(pyr.residual, 0.42)

    def test_band_shapes(self):
        pyr = build_laplacian(np.zeros((64, 64, 1)))
        assert [b.shape for b in pyr.bands] == [
            (64, 64, 1), (32, 32, 1), (16, 16, 1), (8, 8, 1)]
        assert pyr.residual.shape == (4, 4, 1)

    def test_rectangular(self):
        pyr = build_laplacian(np.zeros((64, 32, 1)))
        assert pyr.residual.shape == (8, 4, 1)

    def test_min_band_size(self):
        pyr = build_laplacian(np.zeros((64, 64, 1)), min_band=16)
        assert pyr.residual.shape == (16, 16, 1)
        assert pyr.band_count == 2

    @pytest.mark.parametrize("shape", [(48, 48, 1), (20, 16, 1), (16, 17, 1)])
    def test_bad_dims(self, shape):
        with pytest.raises(DimensionError):
            build_laplacian(np.zeros(shape))

    def test_perfect_reconstruction(self, rng):
        for _ in range(100):
            img = rng.uniform(-1, 1, (32, 32, 3))
            assert np.max(np.abs(recompose(build_laplacian(img)) - img)) < 1e-6

    def test_impulse_energy(self):
        img = np.zeros((16, 16, 1))
        img[5, 9, 0] = 1.0
        rec = recompose(build_laplacian(img))
        assert rec.sum() == pytest.approx(1.0, abs=1e-6)
        assert rec[5, 9, 0] == pytest.approx(1.0, abs=1e-6)


class TestRecompose:
    def test_zero_pyramid(self):
        pyr = build_laplacian(np.zeros((16, 16, 2)))
        assert not recompose(pyr).any()

    def test_linearity(self, rng):
        # recompose(a*P + b*Q) == a*recompose(P) + b*recompose(Q)
        x, y = rng.uniform(-1, 1, (2, 32, 32, 1))
        p, q = build_laplacian(x), build_laplacian(y)
        a, b = 0.7, -1.3
        mixed = LaplacianPyramid(
            bands=tuple(a * pb + b * qb for pb, qb in zip(p.bands, q.bands)),
            residual=a * p.residual + b * q.residual,
        )
        want = a * recompose(p) + b * recompose(q)
        assert np.max(np.abs(recompose(mixed) - want)) < 1e-6

    def test_band_shape_mismatch(self):
        pyr = build_laplacian(np.zeros((16, 16, 1)))
        broken = LaplacianPyramid(bands=(pyr.bands[0][:8],) + pyr.bands[1:],
                                  residual=pyr.residual)
        with pytest.raises(DimensionError):
            recompose(broken)
