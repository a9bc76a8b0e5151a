"""Independent brute-force reference implementation.

Everything here is recomputed from scratch with whole-stream scans and no
incremental state, so it can serve as an oracle for the streaming engine:

* classification materializes per-sample labels first and segments them into
  runs afterwards;
* word mapping scans the full word list per fixation instead of using the
  hit index;
* every per-word measure is re-derived independently by scanning the
  complete fixation list.

Shared with the engine are only the type definitions and the CSV formatter;
all decisions (velocities, boundaries, windows) are re-made here from the
documented rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .ivt import IvtConfig
from .types import (
    Fixation,
    GazeSample,
    LayoutManifest,
    Point,
    ScreenModel,
    Vec3,
    WordMetrics,
)

_LINE_OVERLAP_FRACTION = 0.5  # same published rule as the engine's index


# -- batch classification --------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Accepted:
    t_us: int
    pt: Point | None
    direction: Vec3
    velocity: float | None  # None for the first sample of a segment
    segment: int


def _direction(s: GazeSample, m: ScreenModel) -> Vec3 | None:
    if s.origin_3d is not None:
        assert s.pos_3d is not None
        dx = s.pos_3d[0] - s.origin_3d[0]
        dy = s.pos_3d[1] - s.origin_3d[1]
        dz = s.pos_3d[2] - s.origin_3d[2]
        n = math.sqrt(dx * dx + dy * dy + dz * dz)
        if n == 0.0:
            return None
        return (dx / n, dy / n, dz / n)
    x_mm = (s.screen_x - m.width_px / 2.0) * (m.width_mm / m.width_px)
    y_mm = (s.screen_y - m.height_px / 2.0) * (m.height_mm / m.height_px)
    d = m.eye_distance_mm
    n = math.sqrt(x_mm * x_mm + y_mm * y_mm + d * d)
    return (x_mm / n, y_mm / n, d / n)


def classify_batch(
    samples: list[GazeSample],
    config: IvtConfig,
    screen: ScreenModel,
    page_pts: list[Point | None] | None = None,
) -> list[Fixation]:
    """Label the whole stream, segment into runs, and emit fixations.

    ``page_pts`` defaults to the samples' screen coordinates (identity
    viewport).  Fixation groups are not assigned here; see
    :func:`assign_groups`.
    """
    accepted: list[_Accepted] = []
    recent: list[_Accepted] = []  # trailing window within the current segment
    last_t: int | None = None
    segment = 0
    for i, s in enumerate(samples):
        if not s.valid:
            continue
        if last_t is not None and s.t_us <= last_t:
            continue
        d = _direction(s, screen)
        if d is None:
            continue
        pt = page_pts[i] if page_pts is not None else (s.screen_x, s.screen_y)
        if recent and s.t_us - recent[-1].t_us > config.max_gap_us:
            segment += 1
            recent = []
        if not recent:
            v = None
        else:
            ref = recent[0]
            v = _angular_velocity(ref.direction, d, s.t_us - ref.t_us)
        a = _Accepted(s.t_us, pt, d, v, segment)
        accepted.append(a)
        recent.append(a)
        if len(recent) > config.window_samples - 1:
            recent.pop(0)
        last_t = s.t_us

    fixations: list[Fixation] = []
    start = 0
    for i in range(1, len(accepted) + 1):
        if i == len(accepted) or accepted[i].segment != accepted[start].segment:
            fixations.extend(_segment_fixations(accepted[start:i], config))
            start = i
    return fixations


def _angular_velocity(a: Vec3, b: Vec3, dt_us: int) -> float:
    dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    if dot > 1.0:
        dot = 1.0
    elif dot < -1.0:
        dot = -1.0
    return math.acos(dot) * (180.0 / math.pi) / (dt_us / 1_000_000.0)


def _segment_fixations(seg: list[_Accepted], config: IvtConfig) -> list[Fixation]:
    if len(seg) < 2:
        return []
    labels = ["?"] + [
        "S" if a.velocity is not None and a.velocity >= config.threshold_dps else "F"
        for a in seg[1:]
    ]
    # The leading velocity-less sample joins the first run.
    labels[0] = labels[1]
    fixations: list[Fixation] = []
    i = 0
    while i < len(seg):
        j = i
        while j < len(seg) and labels[j] == labels[i]:
            j += 1
        if labels[i] == "F":
            run = seg[i:j]
            span = run[-1].t_us - run[0].t_us
            keep = span > 0 and (config.min_fixation_us <= 0 or span >= config.min_fixation_us)
            if keep:
                pts = [a.pt for a in run if a.pt is not None]
                centroid: Point | None = None
                if pts:
                    sx = 0.0
                    sy = 0.0
                    for p in pts:
                        sx += p[0]
                        sy += p[1]
                    centroid = (sx / len(pts), sy / len(pts))
                fixations.append(
                    Fixation(
                        start_us=run[0].t_us,
                        end_us=run[-1].t_us,
                        centroid=centroid,
                        sample_count=len(run),
                    )
                )
        i = j
    return fixations


# -- brute-force word mapping ----------------------------------------------


def _cluster_lines(manifest: LayoutManifest) -> list[list[int]]:
    lines: list[list[int]] = []
    spans: list[tuple[float, float]] = []
    for w in manifest.words:
        b = w.box
        if lines:
            top, bottom = spans[-1]
            overlap = min(bottom, b.bottom) - max(top, b.y)
            if overlap > _LINE_OVERLAP_FRACTION * min(bottom - top, b.h):
                lines[-1].append(w.word_index)
                spans[-1] = (min(top, b.y), max(bottom, b.bottom))
                continue
        lines.append([w.word_index])
        spans.append((b.y, b.bottom))
    return lines


def map_point_brute(pt: Point, manifest: LayoutManifest) -> int | None:
    """Scan every line and word, applying the 1/3-2/3 gap rule directly."""
    x, y = pt
    for members in _cluster_lines(manifest):
        boxes = [manifest.words[i].box for i in members]
        top = min(b.y for b in boxes)
        bottom = max(b.bottom for b in boxes)
        if not (top <= y < bottom):
            continue
        order = sorted(members, key=lambda i: manifest.words[i].box.x)
        for pos, wi in enumerate(order):
            b = manifest.words[wi].box
            left = b.x
            if pos > 0:
                prev = manifest.words[order[pos - 1]].box
                left = prev.right + (b.x - prev.right) / 3.0
            right = b.right
            if pos < len(order) - 1:
                nxt = manifest.words[order[pos + 1]].box
                right = b.right + (nxt.x - b.right) / 3.0
            if left <= x < right:
                return wi
        return None
    return None


def map_fixations_brute(fixations: list[Fixation], manifest: LayoutManifest) -> list[Fixation]:
    out: list[Fixation] = []
    for f in fixations:
        if f.centroid is None:
            out.append(f)
            continue
        wi = map_point_brute(f.centroid, manifest)
        if wi is not None:
            out.append(replace(f, word_index=wi, aoi_box=manifest.words[wi].box))
            continue
        hit = f
        for m in manifest.media:
            if m.box.contains(*f.centroid):
                hit = replace(f, media_id=m.media_id, aoi_box=m.box)
                break
        out.append(hit)
    return out


def assign_groups(fixations: list[Fixation]) -> list[Fixation]:
    """Number maximal same-word runs; unmapped fixations get their own group."""
    out: list[Fixation] = []
    group = 0
    prev_word: int | None = None
    for i, f in enumerate(fixations):
        if i == 0 or f.word_index is None or f.word_index != prev_word:
            group += 1
        prev_word = f.word_index
        out.append(replace(f, fixation_group=group))
    return out


# -- brute-force per-word metrics --------------------------------------------


def brute_word_metrics(
    word_index: int,
    fixations: list[Fixation],
    first_pass_mode: str,
    session_start_us: int,
    stimulus_onset_us: int,
) -> WordMetrics:
    """Derive one word's metrics by scanning the complete fixation list."""
    w = word_index
    mine = [f for f in fixations if f.word_index == w]
    if not mine:
        return WordMetrics(word_index=w)
    durs = [f.duration_us for f in mine]
    tfd = sum(durs)
    count = len(durs)
    first = mine[0]

    mapped = [f for f in fixations if f.word_index is not None]
    k = next(i for i, f in enumerate(mapped) if f.word_index == w)
    if first_pass_mode == "first_visit":
        fp_valid = True
    else:
        fp_valid = all(f.word_index <= w for f in mapped[:k])

    fpffd = fp_group = fpd = rpd = srpd = None
    fpr: bool | None = None
    rrd = tfd
    if fp_valid:
        j = k
        while j < len(mapped) and mapped[j].word_index == w:
            j += 1
        visit = mapped[k:j]
        fpd = sum(f.duration_us for f in visit)
        fpffd = visit[0].duration_us
        fp_group = visit[0].fixation_group
        fpr = mapped[j].word_index < w if j < len(mapped) else False
        close = len(mapped)
        for c in range(k, len(mapped)):
            if mapped[c].word_index > w:
                close = c
                break
        window = mapped[k:close]
        rpd = sum(f.duration_us for f in window)
        srpd = sum(f.duration_us for f in window if f.word_index == w)
        rrd = tfd - fpd

    return WordMetrics(
        word_index=w,
        tfd_us=tfd,
        f_count=count,
        afd_us=tfd / count,
        mifd_us=min(durs),
        mafd_us=max(durs),
        tff_ts_us=first.start_us - session_start_us,
        ttff_us=first.start_us - stimulus_onset_us,
        ffd_us=first.duration_us,
        fpffd_us=fpffd,
        fp_group=fp_group,
        fpr=fpr,
        fpd_us=fpd,
        rpd_us=rpd,
        srpd_us=srpd,
        rrd_us=rrd,
    )


def oracle_metrics(
    fixations: list[Fixation],
    manifest: LayoutManifest,
    first_pass_mode: str,
    session_start_us: int,
    stimulus_onset_us: int | None = None,
    regroup: bool = True,
) -> list[WordMetrics]:
    """Metrics for all manifest words from a chronological fixation list."""
    if stimulus_onset_us is None:
        stimulus_onset_us = session_start_us
    if regroup:
        fixations = assign_groups(fixations)
    return [
        brute_word_metrics(w.word_index, fixations, first_pass_mode, session_start_us, stimulus_onset_us)
        for w in manifest.words
    ]


def oracle_from_log(
    samples: list[GazeSample],
    manifest: LayoutManifest,
    config: IvtConfig | None = None,
    screen: ScreenModel | None = None,
    first_pass_mode: str = "strict",
) -> list[WordMetrics]:
    """Full reference pipeline: classify, map, and derive all word metrics.

    Log coordinates are taken as page coordinates (identity viewport), which
    matches how the replay tool presents logs to the engine.
    """
    config = config or IvtConfig()
    screen = screen or ScreenModel()
    fixations = classify_batch(samples, config, screen)
    fixations = map_fixations_brute(fixations, manifest)
    valid = [s for s in samples if s.valid]
    start = valid[0].t_us if valid else 0
    return oracle_metrics(fixations, manifest, first_pass_mode, session_start_us=start)
