"""Core domain types and coordinate conventions shared by the whole engine.

Conventions that everything downstream relies on:

* Timestamps are integer microseconds in the gaze source's clock and are
  carried through unchanged (never re-quantized).
* Durations are kept in microseconds internally and converted to
  milliseconds (3 decimals) only at export boundaries.
* The canonical coordinate space is page CSS pixels.  Raw samples arrive in
  device (screen) pixels and are converted with the current viewport state.
* Point containment in rectangles is half-open: ``[x, x+w) x [y, y+h)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

Point = tuple[float, float]
Vec3 = tuple[float, float, float]


class GazeError(Exception):
    """Base class for engine errors."""


class DegenerateGeometryError(GazeError):
    """3D gaze origin and position coincide; no direction can be formed."""


class TimestampOrderError(GazeError):
    """A timestamp violates the required ordering."""


class ManifestInvalidError(GazeError):
    """A layout manifest violates its structural invariants."""


class ConfigMismatchError(GazeError):
    """Supplied processing config conflicts with a recorded session's config."""


@dataclass(frozen=True, slots=True)
class Rect:
    """Axis-aligned rectangle in page CSS pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative rect size: {self.w}x{self.h}")

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.x + other.w <= self.x + self.w
            and other.y + other.h <= self.y + self.h
        )

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @staticmethod
    def from_list(box: Sequence[float]) -> "Rect":
        if len(box) != 4:
            raise ValueError(f"box must be [x, y, w, h], got {box!r}")
        return Rect(float(box[0]), float(box[1]), float(box[2]), float(box[3]))


@dataclass(frozen=True, slots=True)
class GazeSample:
    """One timestamped raw eye-tracker observation.

    ``screen_x``/``screen_y`` are device pixels.  The optional 3D fields are
    millimetres in the tracker's user coordinate system; when absent the
    engine falls back to a :class:`ScreenModel` based direction estimate.
    """

    t_us: int
    screen_x: float
    screen_y: float
    origin_3d: Vec3 | None = None
    pos_3d: Vec3 | None = None
    valid: bool = True

    def __post_init__(self) -> None:
        if (self.origin_3d is None) != (self.pos_3d is None):
            raise ValueError("origin_3d and pos_3d must be given together")


@dataclass(frozen=True, slots=True)
class ViewportState:
    """Browser window placement needed to convert screen to page coordinates.

    Applies to all samples with timestamp >= t_us until superseded.
    win_x/win_y are device pixels, scroll_x/scroll_y CSS pixels.
    """

    t_us: int
    win_x: float
    win_y: float
    scroll_x: float
    scroll_y: float
    dpr: float

    def __post_init__(self) -> None:
        if self.dpr <= 0:
            raise ValueError(f"dpr must be positive, got {self.dpr}")


@dataclass(frozen=True, slots=True)
class WordAoi:
    word_index: int
    char_index: int
    sentence_index: int
    paragraph_id: int
    text: str
    box: Rect


@dataclass(frozen=True, slots=True)
class ParagraphAoi:
    paragraph_id: int
    box: Rect


@dataclass(frozen=True, slots=True)
class MediaAoi:
    media_id: int
    kind: str  # "image" | "video"
    box: Rect


@dataclass(frozen=True, slots=True)
class LayoutManifest:
    """Snapshot of a page: its text plus word/paragraph/media geometry."""

    url: str
    page_text: str
    words: tuple[WordAoi, ...]
    paragraphs: tuple[ParagraphAoi, ...]
    media: tuple[MediaAoi, ...] = ()

    def validate(self) -> None:
        """Raise :class:`ManifestInvalidError` on any structural violation."""
        para_ids = {p.paragraph_id for p in self.paragraphs}
        for i, w in enumerate(self.words):
            if w.word_index != i:
                raise ManifestInvalidError(
                    f"word_index not contiguous: expected {i}, got {w.word_index}"
                )
            if w.paragraph_id not in para_ids:
                raise ManifestInvalidError(
                    f"word {i} references unknown paragraph {w.paragraph_id}"
                )
            got = self.page_text[w.char_index : w.char_index + len(w.text)]
            if got != w.text:
                raise ManifestInvalidError(
                    f"word {i}: page_text at {w.char_index} is {got!r}, not {w.text!r}"
                )


@dataclass(frozen=True, slots=True)
class Fixation:
    """A finalized dwell event, optionally mapped to a word or media AOI.

    ``centroid`` is the arithmetic mean of the run's page points; it is None
    only when no viewport state was available for any sample of the run.
    """

    start_us: int
    end_us: int
    centroid: Point | None
    sample_count: int
    word_index: int | None = None
    media_id: int | None = None
    aoi_box: Rect | None = None
    fixation_group: int = 0

    def __post_init__(self) -> None:
        if self.end_us <= self.start_us:
            raise ValueError("fixation must span a positive duration")
        if self.sample_count < 1:
            raise ValueError("fixation needs at least one sample")

    @property
    def duration_us(self) -> int:
        return self.end_us - self.start_us


@dataclass(frozen=True, slots=True)
class Saccade:
    """A finalized rapid movement with its derived measures.

    The event interval starts at the last sample before the movement and
    ends at the last sample classified as moving.  ``direction`` is the unit
    vector end - start in page coordinates; for zero-length (degenerate)
    saccades it is (0, 0) and ``degenerate`` is set.
    """

    start_us: int
    end_us: int
    start_pt: Point | None
    end_pt: Point | None
    seq_index: int
    length_px: float
    amplitude_deg: float
    peak_velocity_dps: float
    direction: Point
    degenerate: bool = False
    paragraph_id: int | None = None
    aoi_seq_index: int | None = None

    def __post_init__(self) -> None:
        if self.end_us <= self.start_us:
            raise ValueError("saccade must span a positive duration")

    @property
    def duration_us(self) -> int:
        return self.end_us - self.start_us


@dataclass(frozen=True, slots=True)
class WordMetrics:
    """Per-word fixation and reading measures, microsecond-exact.

    Optional fields are None when undefined (word never fixated, or no valid
    first pass).  ``fpr`` is None while a first pass is still open mid-session
    and resolves to False at session end if no exit was ever observed.
    """

    word_index: int
    tfd_us: int = 0
    f_count: int = 0
    afd_us: float = 0.0
    mifd_us: int = 0
    mafd_us: int = 0
    tff_ts_us: int | None = None
    ttff_us: int | None = None
    ffd_us: int | None = None
    fpffd_us: int | None = None
    fp_group: int | None = None
    fpr: bool | None = None
    fpd_us: int | None = None
    rpd_us: int | None = None
    srpd_us: int | None = None
    rrd_us: int = 0


@dataclass(frozen=True, slots=True)
class ScreenModel:
    """Physical display model, used only when samples carry no 3D geometry.

    The fallback places a virtual eye ``eye_distance_mm`` straight ahead of
    the screen center and derives gaze directions from screen positions.
    """

    width_px: float = 1920.0
    height_px: float = 1080.0
    width_mm: float = 531.0
    height_mm: float = 298.7
    eye_distance_mm: float = 650.0

    def __post_init__(self) -> None:
        for name in ("width_px", "height_px", "width_mm", "height_mm", "eye_distance_mm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def screen_to_page(p: Point, v: ViewportState) -> Point:
    """Convert a screen (device px) point to page CSS pixels."""
    return (
        (p[0] - v.win_x) / v.dpr + v.scroll_x,
        (p[1] - v.win_y) / v.dpr + v.scroll_y,
    )


def page_to_screen(p: Point, v: ViewportState) -> Point:
    """Inverse of :func:`screen_to_page`."""
    return (
        (p[0] - v.scroll_x) * v.dpr + v.win_x,
        (p[1] - v.scroll_y) * v.dpr + v.win_y,
    )


def us_to_ms(us: int | float) -> float:
    return us / 1000.0


def format_ms(us: int | float | None) -> str:
    """Render a microsecond duration as milliseconds with 3 decimals."""
    if us is None:
        return ""
    return f"{us / 1000.0:.3f}"
