"""Streaming velocity-threshold identification of fixations and saccades.

Each incoming sample gets an angular velocity (degrees/second of gaze
direction change against a trailing sample) and is labeled fixation when the
velocity is below the threshold, saccade when at or above it.  Label
transitions finalize the pending event:

* A fixation event spans the first to the last sample of its run.  The first
  sample after a stream reset carries no velocity (Unknown) and is adopted
  by whatever run follows it.
* A saccade event is anchored at the last sample *before* the run, because
  the movement that produced the first saccade-labeled velocity happened in
  the gap leading up to it.  Its endpoint is the run's last sample.

Runs whose span is zero (fewer than two distinct timestamps) cannot satisfy
the event contracts and are dropped, counted in ``stats``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .types import (
    DegenerateGeometryError,
    GazeSample,
    Point,
    ScreenModel,
    Vec3,
)

_RAD_TO_DEG = 180.0 / math.pi


class Label(Enum):
    FIXATION = "fixation"
    SACCADE = "saccade"
    UNKNOWN = "unknown"


@dataclass(frozen=True, slots=True)
class IvtConfig:
    """Classifier tuning.

    ``window_samples`` = 2 compares each sample with its predecessor; larger
    windows compare with the sample ``window_samples - 1`` back.  During
    warm-up the oldest available sample is used so only the first sample of
    a stream stays Unknown.
    """

    threshold_dps: float = 30.0
    window_samples: int = 2
    min_fixation_us: int = 0
    max_gap_us: int = 100_000

    def __post_init__(self) -> None:
        if self.threshold_dps <= 0:
            raise ValueError("threshold_dps must be positive")
        if self.window_samples < 2:
            raise ValueError("window_samples must be at least 2")
        if self.max_gap_us <= 0:
            raise ValueError("max_gap_us must be positive")


@dataclass(frozen=True, slots=True)
class SampleLabel:
    sample: GazeSample
    label: Label
    velocity_dps: float = 0.0


@dataclass(frozen=True, slots=True)
class RawFixation:
    """Fixation run as emitted by the classifier, before AOI mapping."""

    start_us: int
    end_us: int
    centroid: Point | None
    sample_count: int


@dataclass(frozen=True, slots=True)
class RawSaccade:
    """Saccade run as emitted by the classifier, before measures/mapping."""

    start_us: int
    end_us: int
    start_pt: Point | None
    end_pt: Point | None
    start_dir: Vec3
    end_dir: Vec3
    peak_velocity_dps: float
    sample_count: int


def gaze_direction(s: GazeSample, m: ScreenModel) -> Vec3:
    """Unit gaze direction for a sample.

    Uses the tracker's 3D origin/position when present; otherwise derives a
    direction from a virtual eye ``m.eye_distance_mm`` in front of the screen
    center toward the sample's physical location on the display.
    """
    if s.origin_3d is not None:
        ox, oy, oz = s.origin_3d
        px, py, pz = s.pos_3d  # type: ignore[misc]  # paired by GazeSample
        dx, dy, dz = px - ox, py - oy, pz - oz
        n = math.sqrt(dx * dx + dy * dy + dz * dz)
        if n == 0.0:
            raise DegenerateGeometryError("gaze origin equals gaze position")
        return (dx / n, dy / n, dz / n)
    x_mm = (s.screen_x - m.width_px / 2.0) * (m.width_mm / m.width_px)
    y_mm = (s.screen_y - m.height_px / 2.0) * (m.height_mm / m.height_px)
    d = m.eye_distance_mm
    n = math.sqrt(x_mm * x_mm + y_mm * y_mm + d * d)
    return (x_mm / n, y_mm / n, d / n)


def angular_velocity(d_prev: Vec3, d_cur: Vec3, dt_us: int) -> float:
    """Angular velocity in degrees/second between two unit directions."""
    if dt_us <= 0:
        raise ValueError(f"dt_us must be positive, got {dt_us}")
    dot = d_prev[0] * d_cur[0] + d_prev[1] * d_cur[1] + d_prev[2] * d_cur[2]
    if dot > 1.0:
        dot = 1.0
    elif dot < -1.0:
        dot = -1.0
    angle_deg = math.acos(dot) * _RAD_TO_DEG
    return angle_deg / (dt_us / 1_000_000.0)


@dataclass
class _Run:
    label: Label
    start_us: int
    end_us: int
    sample_count: int = 0
    # fixation centroid accumulation (page points only; samples without a
    # viewport transform contribute to timing but not to the centroid)
    sum_x: float = 0.0
    sum_y: float = 0.0
    pt_count: int = 0
    # saccade geometry
    anchor_pt: Point | None = None
    anchor_dir: Vec3 | None = None
    end_pt: Point | None = None
    end_dir: Vec3 | None = None
    peak_velocity: float = 0.0


class IvtClassifier:
    """One streaming classifier instance per session gaze stream.

    Drive with :meth:`classify` in timestamp order and :meth:`finalize_stream`
    at end of stream.  Instances are independent; a single instance must only
    be fed by one producer.
    """

    def __init__(self, config: IvtConfig | None = None, screen: ScreenModel | None = None):
        self.config = config or IvtConfig()
        self.screen = screen or ScreenModel()
        self.stats = {
            "samples": 0,
            "rejected_out_of_order": 0,
            "skipped_invalid": 0,
            "skipped_degenerate": 0,
            "dropped_zero_span": 0,
            "dropped_short_fixation": 0,
            "resets": 0,
        }
        self._window: deque[tuple[int, Vec3]] = deque(maxlen=self.config.window_samples - 1)
        self._prev: tuple[int, Point | None, Vec3] | None = None
        self._run: _Run | None = None
        self._pending_first: tuple[int, Point | None, Vec3] | None = None
        self._last_t: int | None = None

    def classify(
        self, s: GazeSample, page_pt: Point | None
    ) -> tuple[SampleLabel, list[RawFixation | RawSaccade]]:
        """Label one sample; returns the label plus any events it finalized."""
        self.stats["samples"] += 1
        if not s.valid:
            self.stats["skipped_invalid"] += 1
            return SampleLabel(s, Label.UNKNOWN), []
        if self._last_t is not None and s.t_us <= self._last_t:
            self.stats["rejected_out_of_order"] += 1
            return SampleLabel(s, Label.UNKNOWN), []

        events: list[RawFixation | RawSaccade] = []
        if self._prev is not None and s.t_us - self._prev[0] > self.config.max_gap_us:
            events.extend(self._finalize_pending())
            self._reset()
            self.stats["resets"] += 1

        try:
            d = gaze_direction(s, self.screen)
        except DegenerateGeometryError:
            self.stats["skipped_degenerate"] += 1
            return SampleLabel(s, Label.UNKNOWN), events

        self._last_t = s.t_us
        if self._prev is None:
            # First sample after a reset: no velocity yet.  It will be adopted
            # by the first run (member of a fixation, anchor of a saccade).
            self._pending_first = (s.t_us, page_pt, d)
            self._window.append((s.t_us, d))
            self._prev = (s.t_us, page_pt, d)
            return SampleLabel(s, Label.UNKNOWN), events

        ref_t, ref_d = self._window[0]
        v = angular_velocity(ref_d, d, s.t_us - ref_t)
        label = Label.SACCADE if v >= self.config.threshold_dps else Label.FIXATION

        if self._run is None:
            anchor = self._pending_first
            self._pending_first = None
            self._start_run(label, s.t_us, page_pt, d, v, anchor)
        elif label is self._run.label:
            self._extend_run(s.t_us, page_pt, d, v)
        else:
            events.extend(self._finalize_pending())
            # A new saccade anchors at the sample the movement started from;
            # a new fixation consists of its own samples only.
            anchor = self._prev if label is Label.SACCADE else None
            self._start_run(label, s.t_us, page_pt, d, v, anchor)

        self._window.append((s.t_us, d))
        self._prev = (s.t_us, page_pt, d)
        return SampleLabel(s, label, v), events

    def finalize_stream(self) -> list[RawFixation | RawSaccade]:
        """Close and emit any pending event, then reset for a new stream."""
        events = self._finalize_pending()
        self._reset()
        return events

    # -- run management -------------------------------------------------

    def _start_run(
        self,
        label: Label,
        t_us: int,
        pt: Point | None,
        d: Vec3,
        v: float,
        anchor: tuple[int, Point | None, Vec3] | None,
    ) -> None:
        run = _Run(label=label, start_us=t_us, end_us=t_us)
        if label is Label.FIXATION:
            if anchor is not None:
                run.start_us = anchor[0]
                run.sample_count += 1
                if anchor[1] is not None:
                    run.sum_x += anchor[1][0]
                    run.sum_y += anchor[1][1]
                    run.pt_count += 1
        else:
            if anchor is not None:
                run.start_us = anchor[0]
                run.anchor_pt = anchor[1]
                run.anchor_dir = anchor[2]
        self._run = run
        self._extend_run(t_us, pt, d, v)

    def _extend_run(self, t_us: int, pt: Point | None, d: Vec3, v: float) -> None:
        run = self._run
        assert run is not None
        run.end_us = t_us
        run.sample_count += 1
        if run.label is Label.FIXATION:
            if pt is not None:
                run.sum_x += pt[0]
                run.sum_y += pt[1]
                run.pt_count += 1
        else:
            run.end_pt = pt
            run.end_dir = d
            if v > run.peak_velocity:
                run.peak_velocity = v

    def _finalize_pending(self) -> list[RawFixation | RawSaccade]:
        run = self._run
        self._run = None
        if run is None:
            return []
        if run.end_us <= run.start_us:
            self.stats["dropped_zero_span"] += 1
            return []
        if run.label is Label.FIXATION:
            duration = run.end_us - run.start_us
            if self.config.min_fixation_us > 0 and duration < self.config.min_fixation_us:
                self.stats["dropped_short_fixation"] += 1
                return []
            centroid: Point | None = None
            if run.pt_count > 0:
                centroid = (run.sum_x / run.pt_count, run.sum_y / run.pt_count)
            return [
                RawFixation(
                    start_us=run.start_us,
                    end_us=run.end_us,
                    centroid=centroid,
                    sample_count=run.sample_count,
                )
            ]
        assert run.anchor_dir is not None and run.end_dir is not None
        return [
            RawSaccade(
                start_us=run.start_us,
                end_us=run.end_us,
                start_pt=run.anchor_pt,
                end_pt=run.end_pt,
                start_dir=run.anchor_dir,
                end_dir=run.end_dir,
                peak_velocity_dps=run.peak_velocity,
                sample_count=run.sample_count,
            )
        ]

    def _reset(self) -> None:
        self._window.clear()
        self._prev = None
        self._run = None
        self._pending_first = None
