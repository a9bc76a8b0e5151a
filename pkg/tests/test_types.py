import pytest
from hypothesis import given, strategies as st

from gazemetrics.types import (
    GazeSample,
    Rect,
    ViewportState,
    format_ms,
    page_to_screen,
    screen_to_page,
)


def vp(t=0, win=(0.0, 0.0), scroll=(0.0, 0.0), dpr=1.0):
    return ViewportState(t_us=t, win_x=win[0], win_y=win[1], scroll_x=scroll[0], scroll_y=scroll[1], dpr=dpr)


class TestScreenToPage:
    def test_identity_transform(self):
        assert screen_to_page((500.0, 300.0), vp()) == (500.0, 300.0)

    def test_window_offset_and_scroll(self):
        # page = (screen - win) / dpr + scroll
        assert screen_to_page((500.0, 300.0), vp(win=(100.0, 50.0), scroll=(0.0, 400.0))) == (400.0, 650.0)

    def test_device_pixel_ratio(self):
        assert screen_to_page((400.0, 200.0), vp(dpr=2.0)) == (200.0, 100.0)

    @given(
        sx=st.floats(-5000, 5000),
        sy=st.floats(-5000, 5000),
        wx=st.floats(-2000, 2000),
        wy=st.floats(-2000, 2000),
        ox=st.floats(0, 10000),
        oy=st.floats(0, 10000),
        dpr=st.floats(0.5, 4),
    )
    def test_round_trip(self, sx, sy, wx, wy, ox, oy, dpr):
        v = vp(win=(wx, wy), scroll=(ox, oy), dpr=dpr)
        px, py = page_to_screen(screen_to_page((sx, sy), v), v)
        assert px == pytest.approx(sx, abs=1e-9)
        assert py == pytest.approx(sy, abs=1e-9)


class TestRect:
    def test_half_open_containment(self):
        r = Rect(10, 20, 30, 40)
        assert r.contains(10, 20)
        assert r.contains(39.999, 59.999)
        assert not r.contains(40, 30)
        assert not r.contains(30, 60)

    def test_negative_size_rejected(self):
        with pytest.raises(ValueError):
            Rect(0, 0, -1, 5)

    def test_contains_rect_inclusive(self):
        outer = Rect(0, 0, 100, 100)
        assert outer.contains_rect(Rect(0, 0, 100, 100))
        assert not outer.contains_rect(Rect(50, 50, 60, 10))


class TestValidation:
    def test_gaze_sample_requires_paired_3d(self):
        with pytest.raises(ValueError):
            GazeSample(t_us=0, screen_x=0, screen_y=0, origin_3d=(0.0, 0.0, 0.0))

    def test_viewport_rejects_bad_dpr(self):
        with pytest.raises(ValueError):
            vp(dpr=0.0)


def test_format_ms():
    assert format_ms(96657) == "96.657"
    assert format_ms(None) == ""
    assert format_ms(200_000) == "200.000"
