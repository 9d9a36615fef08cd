import numpy as np
import pytest

from zoomstack import (
    ValidationError,
    ZoomSchedule,
    export_sequence,
    render_frame,
    zoom_values,
)
from zoomstack.fixtures import synthetic_stack
from zoomstack.storage import load_png


@pytest.fixture(scope="module")
def stack():
    return synthetic_stack(ZoomSchedule(p=2, N=3, H=32, W=32, C=3), seed=17)


class TestRenderFrame:
    def test_integer_zoom_levels_exact(self, stack):
        for i in range(3):
            frame = render_frame(stack, float(2**i))
            assert np.array_equal(frame, stack.render(i))

    def test_fully_zoomed_out(self, stack):
        assert np.array_equal(render_frame(stack, 1.0), stack.render(0))

    def test_shape_preserved(self, stack):
        assert render_frame(stack, 1.7).shape == (32, 32, 3)

    def test_boundary_continuity(self, stack):
        # frames just below and at a level switch stay close on smooth stacks
        for boundary in (2.0, 4.0):
            a = render_frame(stack, boundary * (1 - 1e-3))
            b = render_frame(stack, boundary)
            assert np.mean(np.abs(a - b)) < 3e-2

    def test_out_of_range(self, stack):
        with pytest.raises(ValidationError):
            render_frame(stack, 0.5)
        with pytest.raises(ValidationError):
            render_frame(stack, 4.5)


class TestZoomValues:
    def test_two_frames_hit_endpoints_exactly(self, stack):
        assert zoom_values(stack, 2) == [1.0, 4.0]

    def test_geometric_spacing(self, stack):
        zs = zoom_values(stack, 7)
        ratios = [zs[i + 1] / zs[i] for i in range(6)]
        assert max(ratios) - min(ratios) < 1e-9

    def test_nine_frame_closed_form(self, stack):
        # N=3, p=2, F=9: z_k = 2^(k/4), ratio 2^(1/4)
        zs = zoom_values(stack, 9)
        want = [2 ** (k / 4) for k in range(9)]
        assert np.allclose(zs, want, rtol=1e-12)
        assert zs[2] == pytest.approx(np.sqrt(2.0))
        assert zs[4] == pytest.approx(2.0)

    def test_monotone(self, stack):
        zs = zoom_values(stack, 13)
        assert all(b > a for a, b in zip(zs, zs[1:]))

    def test_too_few(self, stack):
        with pytest.raises(ValidationError):
            zoom_values(stack, 1)


class TestExportSequence:
    def test_files_and_manifest(self, stack, tmp_path):
        entries = export_sequence(stack, 5, tmp_path)
        assert [name for name, _ in entries] == [
            f"frame_{k:04d}.png" for k in range(5)]
        manifest = (tmp_path / "manifest.txt").read_text().splitlines()
        assert len(manifest) == 5
        for (name, z), line in zip(entries, manifest):
            fname, zstr = line.split()
            assert fname == name
            assert float(zstr) == z
            assert (tmp_path / name).exists()

    def test_frames_match_direct_renders(self, stack, tmp_path):
        entries = export_sequence(stack, 3, tmp_path)
        for name, z in entries:
            png = load_png(tmp_path / name)
            direct = render_frame(stack, z)
            assert np.max(np.abs(png - direct)) <= 1.0 / 255.0

    def test_zooms_strictly_increase(self, stack, tmp_path):
        entries = export_sequence(stack, 6, tmp_path)
        zs = [z for _, z in entries]
        assert all(b > a for a, b in zip(zs, zs[1:]))
