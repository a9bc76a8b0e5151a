"""Incremental per-word fixation and reading measures.

Definitions (all computed over fixations mapped to words; fixations that hit
nothing or hit media contribute to no word's measures and to no windows, and
do not interrupt a visit):

* Visit: maximal run of consecutive mapped fixations on the same word.
* First pass of word w: w's first visit.  In ``strict`` mode it only counts
  when no word with a higher index had been fixated before it started; in
  ``first_visit`` mode every first visit counts.
* FpD / FpFFD / Fp_group: summed duration, first-fixation duration, and
  fixation-group number of that visit.
* FpR: whether the first mapped fixation after the first pass landed on an
  earlier word.  Unknown (absent) while the pass is still open mid-session;
  resolves to False at session end when no exit was observed.
* RPD (go-past): all fixation time from first-pass onset until, exclusively,
  the first fixation on any later word; sRPD restricts that window to the
  word itself.  Windows still open at session end report their current sum.
* RRD: fixation time on the word after its first pass ended (TFD - FpD), or
  all of TFD when there is no first pass.

Fixation groups number maximal same-word runs sequentially over the session;
every unmapped fixation occupies a group of its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .ivt import RawSaccade
from .types import (
    Fixation,
    LayoutManifest,
    Saccade,
    TimestampOrderError,
    WordMetrics,
    format_ms,
)

FIRST_PASS_MODES = ("strict", "first_visit")

METRICS_CSV_HEADER = (
    "word_index,text,char_index,sentence_index,TFD,AFD,MiFD,MaFD,F_count,"
    "TFF_ts,TTFF,FFD,FpFFD,Fp_group,FpR,FpD,RPD,sRPD,RRD"
)

_FP_NONE, _FP_OPEN, _FP_CLOSED, _FP_INVALID = range(4)


class _WordState:
    __slots__ = (
        "tfd",
        "count",
        "mifd",
        "mafd",
        "first_start",
        "ffd",
        "fp_status",
        "fpd",
        "fpffd",
        "fp_group",
        "fpr",
        "rpd",
        "srpd",
    )

    def __init__(self) -> None:
        self.tfd = 0
        self.count = 0
        self.mifd = 0
        self.mafd = 0
        self.first_start: int | None = None
        self.ffd: int | None = None
        self.fp_status = _FP_NONE
        self.fpd = 0
        self.fpffd: int | None = None
        self.fp_group: int | None = None
        self.fpr: bool | None = None
        self.rpd = 0
        self.srpd = 0


def build_saccade(raw: RawSaccade, seq_index: int) -> Saccade:
    """Derive the stored measures for a finalized saccade run."""
    degenerate = False
    direction = (0.0, 0.0)
    length = 0.0
    if raw.start_pt is None or raw.end_pt is None:
        degenerate = True
    else:
        dx = raw.end_pt[0] - raw.start_pt[0]
        dy = raw.end_pt[1] - raw.start_pt[1]
        length = math.hypot(dx, dy)
        if length > 0.0:
            direction = (dx / length, dy / length)
        else:
            degenerate = True
    dot = (
        raw.start_dir[0] * raw.end_dir[0]
        + raw.start_dir[1] * raw.end_dir[1]
        + raw.start_dir[2] * raw.end_dir[2]
    )
    dot = max(-1.0, min(1.0, dot))
    amplitude = math.degrees(math.acos(dot))
    return Saccade(
        start_us=raw.start_us,
        end_us=raw.end_us,
        start_pt=raw.start_pt,
        end_pt=raw.end_pt,
        seq_index=seq_index,
        length_px=length,
        amplitude_deg=amplitude,
        peak_velocity_dps=raw.peak_velocity_dps,
        direction=direction,
        degenerate=degenerate,
    )


class ReadingState:
    """Session-scoped incremental metric state.

    One instance per session, mutated only by that session's event lane.
    Snapshots handed out by :meth:`word_metrics` are immutable copies.
    """

    def __init__(self, first_pass_mode: str = "strict"):
        if first_pass_mode not in FIRST_PASS_MODES:
            raise ValueError(f"first_pass_mode must be one of {FIRST_PASS_MODES}")
        self.first_pass_mode = first_pass_mode
        self.fixations: list[Fixation] = []
        self.saccades: list[Saccade] = []
        self.session_start_us: int | None = None
        self.stimulus_onset_us: int | None = None
        self._words: dict[int, _WordState] = {}
        self._open_windows: set[int] = set()
        self._group_counter = 0
        self._prev_fix_word: int | None = None
        self._last_mapped_word: int | None = None
        self._max_mapped: int | None = None
        self._last_fix_start: int | None = None
        self._finalized = False

    def note_session_start(self, t_us: int) -> None:
        if self.session_start_us is None:
            self.session_start_us = t_us

    def note_stimulus_onset(self, t_us: int) -> None:
        if self.stimulus_onset_us is None:
            self.stimulus_onset_us = t_us

    # -- event intake ----------------------------------------------------

    def on_fixation(self, f: Fixation) -> Fixation:
        """Fold one mapped fixation in; returns it with its group assigned."""
        if self._last_fix_start is not None and f.start_us < self._last_fix_start:
            raise TimestampOrderError(
                f"fixation at {f.start_us} arrived after one at {self._last_fix_start}"
            )
        self._last_fix_start = f.start_us
        if self.session_start_us is None:
            self.session_start_us = f.start_us
        if self.stimulus_onset_us is None:
            self.stimulus_onset_us = self.session_start_us

        if self._group_counter == 0:
            self._group_counter = 1
        elif f.word_index is None or f.word_index != self._prev_fix_word:
            self._group_counter += 1
        group = self._group_counter
        self._prev_fix_word = f.word_index
        f = replace(f, fixation_group=group)
        self.fixations.append(f)

        w = f.word_index
        if w is None:
            return f
        dur = f.duration_us
        ws = self._words.get(w)
        if ws is None:
            ws = self._words[w] = _WordState()

        # Regression-path windows: a window for u closes, exclusively, at the
        # first fixation on a word past u; surviving windows accumulate.
        if self._open_windows:
            passed = [u for u in self._open_windows if w > u]
            for u in passed:
                self._open_windows.discard(u)
            for u in self._open_windows:
                st = self._words[u]
                st.rpd += dur
                if u == w:
                    st.srpd += dur

        prev_word = self._last_mapped_word
        if prev_word is not None and prev_word != w:
            prev_ws = self._words[prev_word]
            if prev_ws.fp_status == _FP_OPEN:
                prev_ws.fp_status = _FP_CLOSED
                prev_ws.fpr = w < prev_word
        if prev_word != w and ws.count == 0:
            # First visit of w begins with this fixation.
            if self.first_pass_mode == "first_visit" or (
                self._max_mapped is None or self._max_mapped <= w
            ):
                ws.fp_status = _FP_OPEN
                ws.fpffd = dur
                ws.fp_group = group
                ws.rpd = dur
                ws.srpd = dur
                self._open_windows.add(w)
            else:
                ws.fp_status = _FP_INVALID
        if ws.fp_status == _FP_OPEN:
            ws.fpd += dur

        ws.tfd += dur
        ws.count += 1
        if ws.count == 1:
            ws.mifd = dur
            ws.mafd = dur
            ws.first_start = f.start_us
            ws.ffd = dur
        else:
            if dur < ws.mifd:
                ws.mifd = dur
            if dur > ws.mafd:
                ws.mafd = dur
        self._last_mapped_word = w
        if self._max_mapped is None or w > self._max_mapped:
            self._max_mapped = w
        return f

    def on_saccade(self, s: Saccade) -> None:
        """Append a finalized, mapped saccade to the session record."""
        self.saccades.append(s)

    @property
    def next_saccade_seq(self) -> int:
        return len(self.saccades) + 1

    def finalize(self) -> None:
        """Close the stream: first passes still open get FpR = no regression."""
        if self._finalized:
            return
        self._finalized = True
        for ws in self._words.values():
            if ws.fp_status == _FP_OPEN and ws.fpr is None:
                ws.fpr = False

    # -- snapshots ---------------------------------------------------------

    def word_metrics(self, word_index: int) -> WordMetrics:
        """Current snapshot for one word; open windows report their sum so far."""
        ws = self._words.get(word_index)
        if ws is None:
            return WordMetrics(word_index=word_index)
        has_fp = ws.fp_status in (_FP_OPEN, _FP_CLOSED)
        assert ws.first_start is not None
        t0 = self.session_start_us if self.session_start_us is not None else ws.first_start
        onset = self.stimulus_onset_us if self.stimulus_onset_us is not None else t0
        return WordMetrics(
            word_index=word_index,
            tfd_us=ws.tfd,
            f_count=ws.count,
            afd_us=ws.tfd / ws.count,
            mifd_us=ws.mifd,
            mafd_us=ws.mafd,
            tff_ts_us=ws.first_start - t0,
            ttff_us=ws.first_start - onset,
            ffd_us=ws.ffd,
            fpffd_us=ws.fpffd if has_fp else None,
            fp_group=ws.fp_group if has_fp else None,
            fpr=ws.fpr if has_fp else None,
            fpd_us=ws.fpd if has_fp else None,
            rpd_us=ws.rpd if has_fp else None,
            srpd_us=ws.srpd if has_fp else None,
            rrd_us=ws.tfd - ws.fpd if has_fp else ws.tfd,
        )

    def touched_words(self) -> list[int]:
        return sorted(self._words)


# -- export formatting ---------------------------------------------------


def metrics_csv_row(wm: WordMetrics, word_text: str, char_index: int, sentence_index: int) -> list[str]:
    if wm.f_count == 0:
        return [
            str(wm.word_index),
            word_text,
            str(char_index),
            str(sentence_index),
            "0.000",
            "0.000",
            "0.000",
            "0.000",
            "0",
        ] + [""] * 10
    return [
        str(wm.word_index),
        word_text,
        str(char_index),
        str(sentence_index),
        format_ms(wm.tfd_us),
        format_ms(wm.afd_us),
        format_ms(wm.mifd_us),
        format_ms(wm.mafd_us),
        str(wm.f_count),
        format_ms(wm.tff_ts_us),
        format_ms(wm.ttff_us),
        format_ms(wm.ffd_us),
        format_ms(wm.fpffd_us),
        "" if wm.fp_group is None else str(wm.fp_group),
        "" if wm.fpr is None else str(int(wm.fpr)),
        format_ms(wm.fpd_us),
        format_ms(wm.rpd_us),
        format_ms(wm.srpd_us),
        format_ms(wm.rrd_us),
    ]


def metrics_csv(manifest: LayoutManifest, rows: list[WordMetrics]) -> str:
    """Render the per-word metrics table; durations in ms with 3 decimals."""
    import csv
    import io

    by_index = {wm.word_index: wm for wm in rows}
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(METRICS_CSV_HEADER.split(","))
    for w in manifest.words:
        wm = by_index.get(w.word_index, WordMetrics(word_index=w.word_index))
        writer.writerow(metrics_csv_row(wm, w.text, w.char_index, w.sentence_index))
    return out.getvalue()


def metrics_to_json(wm: WordMetrics) -> dict:
    """Wire representation: same values a CSV export would show (ms, 3dp)."""

    def ms(us: int | float | None) -> float | None:
        return None if us is None else float(format_ms(us))

    return {
        "word_index": wm.word_index,
        "TFD": ms(wm.tfd_us) or 0.0,
        "AFD": ms(wm.afd_us) or 0.0,
        "MiFD": ms(wm.mifd_us) or 0.0,
        "MaFD": ms(wm.mafd_us) or 0.0,
        "F_count": wm.f_count,
        "TFF_ts": ms(wm.tff_ts_us) if wm.f_count else None,
        "TTFF": ms(wm.ttff_us) if wm.f_count else None,
        "FFD": ms(wm.ffd_us) if wm.f_count else None,
        "FpFFD": ms(wm.fpffd_us),
        "Fp_group": wm.fp_group,
        "FpR": None if wm.fpr is None else int(wm.fpr),
        "FpD": ms(wm.fpd_us),
        "RPD": ms(wm.rpd_us),
        "sRPD": ms(wm.srpd_us),
        "RRD": ms(wm.rrd_us) or 0.0,
    }
