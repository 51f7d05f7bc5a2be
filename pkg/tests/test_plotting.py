import re

import numpy as np
import pytest

from ltsa.plotting import nice_ticks, scatter_svg, strip_svg, write_svg


@pytest.mark.parametrize("lo,hi", [(0, 1), (-3.2, 17.9), (1e-4, 3e-4), (-1, -0.5), (0, 1000)])
def test_nice_ticks(lo, hi):
    t = nice_ticks(lo, hi)
    assert 3 <= len(t) <= 12
    steps = np.diff(t)
    np.testing.assert_allclose(steps, steps[0])
    mant = steps[0] / 10 ** np.floor(np.log10(steps[0]))
    assert min(abs(mant - s) for s in (1, 2, 5, 10)) < 1e-9
    assert lo <= t[0] + 1e-12 and t[-1] <= hi + 1e-12


def test_scatter_canvas_and_points():
    x = np.linspace(0, 1, 40)
    svg = scatter_svg(x, x**2, values=x, title="a<b", xlabel="x", ylabel="y")
    assert 'width="800" height="600"' in svg
    assert svg.count("<circle") >= 40
    assert "a&lt;b" in svg
    ticks = re.findall(r"<text[^>]*>([-0-9.e]+)</text>", svg)
    assert len(ticks) >= 4


def test_scatter_labels_legend():
    svg = scatter_svg([0, 1, 2], [0, 1, 0], labels=[0, 1, 1])
    assert "#1f77b4" in svg and "#d62728" in svg


def test_deterministic_bytes(tmp_path):
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((2, 100))
    write_svg(tmp_path / "a.svg", scatter_svg(x, y, values=y))
    write_svg(tmp_path / "b.svg", scatter_svg(x.copy(), y.copy(), values=y.copy()))
    a = (tmp_path / "a.svg").read_bytes()
    assert a == (tmp_path / "b.svg").read_bytes() and b"\r" not in a


def test_strip():
    svg = strip_svg(np.arange(9.0), labels=np.repeat([0, 1, 2], 3))
    assert svg.count("<line") >= 9


def test_invalid():
    with pytest.raises(ValueError):
        scatter_svg([], [])
    with pytest.raises(ValueError):
        scatter_svg([1, 2], [1])
    with pytest.raises(ValueError):
        scatter_svg([1, np.nan], [1, 2])
    with pytest.raises(ValueError):
        strip_svg([])
