"""Geometric assignment of fixations to words and saccades to paragraphs.

Words are grouped into lines by vertical box overlap.  Within a line the
whitespace gap between two neighbours is split 1/3 to the previous word and
2/3 to the next, so each line is tiled by disjoint half-open intervals
``[left_i, boundary_i)``.  A point on the exact boundary therefore belongs
to the next word.  Gaps between lines are not split: points there map to
nothing.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, replace

from .types import (
    Fixation,
    LayoutManifest,
    ManifestInvalidError,
    Point,
    Rect,
    Saccade,
)

# Two boxes count as the same line when they overlap vertically by more than
# half the smaller box height; tolerates slight baseline jitter in captured
# manifests.
_LINE_OVERLAP_FRACTION = 0.5
_GAP_EPS = 1e-9


@dataclass(frozen=True, slots=True)
class _Line:
    top: float
    bottom: float
    left: float
    right: float
    # boundaries[i] separates word_indices[i] from word_indices[i+1]
    boundaries: tuple[float, ...]
    word_indices: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class WordHitIndex:
    """Per-line word intervals with the gap split pre-applied."""

    lines: tuple[_Line, ...]
    line_tops: tuple[float, ...]


def build_index(layout: LayoutManifest) -> WordHitIndex:
    """Group words into lines and precompute extended word boundaries."""
    lines_acc: list[list[int]] = []
    spans: list[tuple[float, float]] = []  # running (top, bottom) per line
    for w in layout.words:
        box = w.box
        placed = False
        if lines_acc:
            top, bottom = spans[-1]
            overlap = min(bottom, box.bottom) - max(top, box.y)
            limit = _LINE_OVERLAP_FRACTION * min(bottom - top, box.h)
            if overlap > limit:
                lines_acc[-1].append(w.word_index)
                spans[-1] = (min(top, box.y), max(bottom, box.bottom))
                placed = True
        if not placed:
            lines_acc.append([w.word_index])
            spans.append((box.y, box.bottom))

    lines: list[_Line] = []
    for members, (top, bottom) in zip(lines_acc, spans):
        members.sort(key=lambda i: layout.words[i].box.x)
        boundaries: list[float] = []
        for a_idx, b_idx in zip(members, members[1:]):
            a, b = layout.words[a_idx].box, layout.words[b_idx].box
            gap = b.x - a.right
            if gap < -_GAP_EPS:
                raise ManifestInvalidError(
                    f"words {a_idx} and {b_idx} overlap on a line "
                    f"(right={a.right}, next left={b.x})"
                )
            boundaries.append(a.right + max(gap, 0.0) / 3.0)
        lines.append(
            _Line(
                top=top,
                bottom=bottom,
                left=layout.words[members[0]].box.x,
                right=layout.words[members[-1]].box.right,
                boundaries=tuple(boundaries),
                word_indices=tuple(members),
            )
        )
    lines.sort(key=lambda ln: ln.top)
    return WordHitIndex(lines=tuple(lines), line_tops=tuple(ln.top for ln in lines))


def map_point_to_word(p: Point, idx: WordHitIndex) -> int | None:
    """Word whose extended box contains the point, or None on a miss.

    Lines are assumed vertically disjoint after clustering (single-column
    text flow); the candidate line is found by bisecting line tops.
    """
    x, y = p
    i = bisect_right(idx.line_tops, y) - 1
    if i < 0:
        return None
    line = idx.lines[i]
    if y >= line.bottom:
        return None
    if x < line.left or x >= line.right:
        return None
    return line.word_indices[bisect_right(line.boundaries, x)]


class AoiMapper:
    """Maps finalized events against the currently active manifest.

    A manifest replacement swaps the hit index atomically; events finalized
    afterwards map against the new layout.  Per-paragraph saccade counters
    are session-scoped and survive manifest updates.
    """

    def __init__(self, manifest: LayoutManifest):
        manifest.validate()
        self.manifest = manifest
        self.index = build_index(manifest)
        self._paragraph_counts: dict[int, int] = {}

    def replace_manifest(self, manifest: LayoutManifest) -> None:
        manifest.validate()
        index = build_index(manifest)
        self.manifest = manifest
        self.index = index

    def map_fixation(self, f: Fixation) -> Fixation:
        """Assign the word (or media) AOI containing the fixation centroid."""
        if f.centroid is None:
            return f
        w = map_point_to_word(f.centroid, self.index)
        if w is not None:
            return replace(f, word_index=w, aoi_box=self.manifest.words[w].box)
        cx, cy = f.centroid
        for m in self.manifest.media:
            if m.box.contains(cx, cy):
                return replace(f, media_id=m.media_id, aoi_box=m.box)
        return f

    def map_saccade(self, s: Saccade) -> Saccade:
        """Assign a paragraph iff both endpoints lie in the same paragraph box."""
        if s.start_pt is None or s.end_pt is None:
            return s
        for p in self.manifest.paragraphs:
            if p.box.contains(*s.start_pt) and p.box.contains(*s.end_pt):
                n = self._paragraph_counts.get(p.paragraph_id, 0) + 1
                self._paragraph_counts[p.paragraph_id] = n
                return replace(s, paragraph_id=p.paragraph_id, aoi_seq_index=n)
        return s
