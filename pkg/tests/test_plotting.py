import math

from rectenna.plotting import plot_impedance, plot_sweep
from rectenna.rectifier import SweepResult, SweepRow

RES = SweepResult((SweepRow(-20, 0.07, 0.05, 56 - 531j), SweepRow(-15, 0.24, 0.18, 70 - 611j),
                   SweepRow(-10, math.nan, math.nan, complex(math.nan, math.nan), error="x"),
                   SweepRow(-5, 1.29, 0.52, 129 - 923j)))


class TestFigures:
    def test_sweep_png_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        plot_sweep(RES, a)
        plot_sweep(RES, b)
        assert a.read_bytes()[:4] == b"\x89PNG"
        assert a.read_bytes() == b.read_bytes()

    def test_impedance_png(self, tmp_path):
        out = tmp_path / "z.png"
        plot_impedance([-20, -15, -5], [56 - 531j, 70 - 611j, 129 - 923j], out)
        assert out.stat().st_size > 1000
