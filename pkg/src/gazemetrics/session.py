"""Per-session orchestration and persistence.

Drives classifier -> AOI mapper -> metrics for one gaze stream, measures
per-sample processing time, and owns the append-only session store:

* ``<id>.jsonl``   one record per line, ``rec`` in {manifest, fixation,
  saccade, viewport, flush, end}
* ``<id>.meta.json``    ids, config snapshot, clock anchors (atomic rewrite)
* ``<id>.metrics.csv``  final per-word export, written at session end
* ``<id>.latency.json`` processing-time stats, diagnostics only

Events are serialized when finalized and buffered; ``flush`` appends the
buffer plus a flush marker carrying the metrics of words touched since the
last flush.  Sample timestamps come from the source clock; wall time is used
only for the flush cadence and latency measurement, so replaying a stream
faster than real time cannot change any exported metric.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import protocol
from .aoi import AoiMapper
from .ivt import IvtClassifier, IvtConfig, RawFixation, RawSaccade
from .manifest import manifest_from_dict, manifest_to_dict
from .metrics import (
    FIRST_PASS_MODES,
    ReadingState,
    build_saccade,
    metrics_csv,
    metrics_to_json,
)
from .types import (
    Fixation,
    GazeError,
    LayoutManifest,
    ManifestInvalidError,
    Saccade,
    ScreenModel,
    ViewportState,
    WordMetrics,
    screen_to_page,
)

_COMPACT = {"separators": (",", ":")}


@dataclass(frozen=True, slots=True)
class FlushPolicy:
    interval_us: int = 5_000_000
    flush_on_state_change: bool = True

    def __post_init__(self) -> None:
        if self.interval_us <= 0:
            raise ValueError("interval_us must be positive")


@dataclass(frozen=True, slots=True)
class SessionConfig:
    ivt: IvtConfig = field(default_factory=IvtConfig)
    screen: ScreenModel = field(default_factory=ScreenModel)
    first_pass_mode: str = "strict"
    flush: FlushPolicy = field(default_factory=FlushPolicy)

    def __post_init__(self) -> None:
        if self.first_pass_mode not in FIRST_PASS_MODES:
            raise ValueError(f"first_pass_mode must be one of {FIRST_PASS_MODES}")

    def to_dict(self) -> dict:
        return {
            "ivt": {
                "threshold_dps": self.ivt.threshold_dps,
                "window_samples": self.ivt.window_samples,
                "min_fixation_us": self.ivt.min_fixation_us,
                "max_gap_us": self.ivt.max_gap_us,
            },
            "screen": {
                "width_px": self.screen.width_px,
                "height_px": self.screen.height_px,
                "width_mm": self.screen.width_mm,
                "height_mm": self.screen.height_mm,
                "eye_distance_mm": self.screen.eye_distance_mm,
            },
            "first_pass_mode": self.first_pass_mode,
            "flush": {
                "interval_us": self.flush.interval_us,
                "flush_on_state_change": self.flush.flush_on_state_change,
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "SessionConfig":
        return SessionConfig(
            ivt=IvtConfig(**d["ivt"]),
            screen=ScreenModel(**d["screen"]),
            first_pass_mode=d["first_pass_mode"],
            flush=FlushPolicy(**d["flush"]),
        )


class SessionPipeline:
    """Processing lane for one session; drive from a single producer."""

    def __init__(
        self,
        session_id: str,
        participant: str = "",
        config: SessionConfig | None = None,
        store_dir: str | Path | None = None,
    ):
        self.session_id = session_id
        self.participant = participant
        self.config = config or SessionConfig()
        self.classifier = IvtClassifier(self.config.ivt, self.config.screen)
        self.state = ReadingState(self.config.first_pass_mode)
        self.mapper: AoiMapper | None = None
        self.manifests: list[LayoutManifest] = []
        self.end_us: int | None = None
        self.sample_times_ns: list[int] = []
        self.counters = {
            "gaze": 0,
            "malformed": 0,
            "unknown_type": 0,
            "rejected_closed": 0,
            "io_errors": 0,
        }
        self.listeners: list[Callable[[dict], None]] = []

        self._viewport: ViewportState | None = None
        self._pending_viewports: list[ViewportState] = []
        self._last_sample_t: int | None = None
        self._open = True
        self._ended = False
        self._store_dir = Path(store_dir) if store_dir is not None else None
        if self._store_dir is not None:
            self._store_dir.mkdir(parents=True, exist_ok=True)
        self._pending_lines: list[str] = []
        self._touched_since_flush: set[int] = set()
        self._flush_seq = 0
        self._last_flush_wall = time.monotonic()

    # -- ingestion ---------------------------------------------------------

    def ingest_text(self, frame: str | bytes) -> None:
        """Parse and process one frame, timing gaze samples end to end."""
        t0 = time.perf_counter_ns()
        try:
            msg = json.loads(frame)
        except (ValueError, TypeError):
            self.counters["malformed"] += 1
            return
        if not isinstance(msg, dict):
            self.counters["malformed"] += 1
            return
        self.ingest(msg)
        if msg.get("type") == "gaze":
            self.sample_times_ns.append(time.perf_counter_ns() - t0)

    def ingest(self, msg: dict) -> None:
        if not self._open:
            self.counters["rejected_closed"] += 1
            return
        kind = msg.get("type")
        try:
            if kind == "gaze":
                self._ingest_gaze(msg)
            elif kind == "viewport":
                self._ingest_viewport(msg)
            elif kind == "layout":
                self._ingest_layout(msg)
            elif kind == "tabstate":
                if self.config.flush.flush_on_state_change:
                    self.flush()
            elif kind == "end":
                self.end_session()
            else:
                self.counters["unknown_type"] += 1
        except (protocol.ProtocolError, ManifestInvalidError, GazeError):
            self.counters["malformed"] += 1

    def _ingest_gaze(self, msg: dict) -> None:
        s = protocol.gaze_from_msg(msg)
        self.counters["gaze"] += 1
        while self._pending_viewports and self._pending_viewports[0].t_us <= s.t_us:
            self._viewport = self._pending_viewports.pop(0)
        page_pt = None
        if self._viewport is not None:
            page_pt = screen_to_page((s.screen_x, s.screen_y), self._viewport)
        label, events = self.classifier.classify(s, page_pt)
        if s.valid:
            if self.state.session_start_us is None:
                self.state.note_session_start(s.t_us)
                if self.manifests:
                    self.state.note_stimulus_onset(s.t_us)
            self._last_sample_t = s.t_us
        for ev in events:
            self._handle_event(ev)
        interval_s = self.config.flush.interval_us / 1e6
        if time.monotonic() - self._last_flush_wall >= interval_s:
            self.flush()

    def _ingest_viewport(self, msg: dict) -> None:
        v = protocol.viewport_from_msg(msg)
        self._pending_viewports.append(v)
        self._record({"rec": "viewport", **protocol.viewport_to_msg(v)})

    def _ingest_layout(self, msg: dict) -> None:
        m = protocol.layout_from_msg(msg)
        m.validate()
        if self.mapper is None:
            self.mapper = AoiMapper(m)
        else:
            self.mapper.replace_manifest(m)
        self.manifests.append(m)
        if self._last_sample_t is not None:
            self.state.note_stimulus_onset(self._last_sample_t)
        self._record({"rec": "manifest", "manifest": manifest_to_dict(m)})

    def _handle_event(self, ev: RawFixation | RawSaccade) -> None:
        if isinstance(ev, RawFixation):
            f = Fixation(
                start_us=ev.start_us,
                end_us=ev.end_us,
                centroid=ev.centroid,
                sample_count=ev.sample_count,
            )
            if self.mapper is not None:
                f = self.mapper.map_fixation(f)
            f = self.state.on_fixation(f)
            self._record({"rec": "fixation", **protocol.fixation_fields(f)})
            if self.listeners:
                self._notify(protocol.fixation_end_msg(f))
            if f.word_index is not None:
                self._touched_since_flush.add(f.word_index)
                if self.listeners:
                    self._notify(protocol.metrics_update_msg(self.state.word_metrics(f.word_index)))
        else:
            s = build_saccade(ev, self.state.next_saccade_seq)
            if self.mapper is not None:
                s = self.mapper.map_saccade(s)
            self.state.on_saccade(s)
            self._record({"rec": "saccade", **protocol.saccade_fields(s)})
            if self.listeners:
                self._notify(protocol.saccade_msg(s))

    def _notify(self, msg: dict) -> None:
        for fn in self.listeners:
            fn(msg)

    def _record(self, rec: dict) -> None:
        if self._store_dir is not None:
            self._pending_lines.append(json.dumps(rec, **_COMPACT))

    # -- persistence ---------------------------------------------------------

    @property
    def jsonl_path(self) -> Path | None:
        return None if self._store_dir is None else self._store_dir / f"{self.session_id}.jsonl"

    @property
    def meta_path(self) -> Path | None:
        return None if self._store_dir is None else self._store_dir / f"{self.session_id}.meta.json"

    def flush(self) -> bool:
        """Persist buffered records; no-op (and no write) when nothing is new."""
        self._last_flush_wall = time.monotonic()
        if self._store_dir is None or not self._pending_lines:
            return False
        snapshot = [
            metrics_to_json(self.state.word_metrics(w))
            for w in sorted(self._touched_since_flush)
        ]
        marker = json.dumps(
            {"rec": "flush", "seq": self._flush_seq + 1, "metrics": snapshot}, **_COMPACT
        )
        try:
            with open(self.jsonl_path, "a", encoding="utf-8") as f:
                f.write("\n".join(self._pending_lines) + "\n" + marker + "\n")
            self._write_meta()
        except OSError:
            self.counters["io_errors"] += 1
            return False
        self._pending_lines = []
        self._touched_since_flush.clear()
        self._flush_seq += 1
        return True

    def _meta_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "participant": self.participant,
            "url": self.manifests[-1].url if self.manifests else None,
            "config": self.config.to_dict(),
            "session_start_us": self.state.session_start_us,
            "stimulus_onset_us": self.state.stimulus_onset_us,
            "end_us": self.end_us,
            "ended": self._ended,
        }

    def _write_meta(self) -> None:
        assert self.meta_path is not None
        tmp = self.meta_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._meta_dict(), **_COMPACT), encoding="utf-8")
        tmp.replace(self.meta_path)

    def end_session(self) -> None:
        """Finalize pending events, close windows as of now, flush, export."""
        if self._ended:
            return
        for ev in self.classifier.finalize_stream():
            self._handle_event(ev)
        self.state.finalize()
        self.end_us = self._last_sample_t
        self._ended = True
        self._record({"rec": "end", "end_us": self.end_us})
        self.flush()
        if self._store_dir is not None:
            csv_path = self._store_dir / f"{self.session_id}.metrics.csv"
            csv_path.write_text(self.export_metrics_csv(), encoding="utf-8")
            lat = self.latency_stats()
            if lat is not None:
                (self._store_dir / f"{self.session_id}.latency.json").write_text(
                    json.dumps(lat, **_COMPACT), encoding="utf-8"
                )
        self._open = False

    # -- exports ---------------------------------------------------------

    def word_metrics_rows(self) -> list[WordMetrics]:
        if not self.manifests:
            return []
        return [self.state.word_metrics(w.word_index) for w in self.manifests[-1].words]

    def export_metrics_csv(self) -> str:
        if not self.manifests:
            from .metrics import METRICS_CSV_HEADER

            return METRICS_CSV_HEADER + "\n"
        return metrics_csv(self.manifests[-1], self.word_metrics_rows())

    def latency_stats(self) -> dict | None:
        if not self.sample_times_ns:
            return None
        import numpy as np

        us = np.asarray(self.sample_times_ns, dtype=np.float64) / 1000.0
        return {
            "n": int(us.size),
            "mean_us": float(us.mean()),
            "sd_us": float(us.std(ddof=1)) if us.size > 1 else 0.0,
            "p50_us": float(np.percentile(us, 50)),
            "p99_us": float(np.percentile(us, 99)),
        }


# -- reload --------------------------------------------------------------


@dataclass(slots=True)
class LoadedSession:
    session_id: str
    participant: str
    config: SessionConfig
    manifest: LayoutManifest | None
    fixations: list[Fixation]
    saccades: list[Saccade]
    viewports: list[ViewportState]
    session_start_us: int | None
    stimulus_onset_us: int | None
    end_us: int | None
    ended: bool


def load_session(store_dir: str | Path, session_id: str) -> LoadedSession:
    store = Path(store_dir)
    meta = json.loads((store / f"{session_id}.meta.json").read_text(encoding="utf-8"))
    manifest: LayoutManifest | None = None
    fixations: list[Fixation] = []
    saccades: list[Saccade] = []
    viewports: list[ViewportState] = []
    end_us = None
    jsonl = store / f"{session_id}.jsonl"
    if jsonl.exists():
        with open(jsonl, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                kind = rec.get("rec")
                if kind == "fixation":
                    fixations.append(protocol.fixation_from_fields(rec))
                elif kind == "saccade":
                    saccades.append(protocol.saccade_from_fields(rec))
                elif kind == "manifest":
                    manifest = manifest_from_dict(rec["manifest"])
                elif kind == "viewport":
                    viewports.append(protocol.viewport_from_msg(rec))
                elif kind == "end":
                    end_us = rec.get("end_us")
    return LoadedSession(
        session_id=session_id,
        participant=meta.get("participant", ""),
        config=SessionConfig.from_dict(meta["config"]),
        manifest=manifest,
        fixations=fixations,
        saccades=saccades,
        viewports=viewports,
        session_start_us=meta.get("session_start_us"),
        stimulus_onset_us=meta.get("stimulus_onset_us"),
        end_us=end_us if end_us is not None else meta.get("end_us"),
        ended=bool(meta.get("ended", False)) or end_us is not None,
    )


def export_loaded_metrics(loaded: LoadedSession) -> str:
    """Re-derive the metrics CSV from a persisted session's event log."""
    state = ReadingState(loaded.config.first_pass_mode)
    if loaded.session_start_us is not None:
        state.note_session_start(loaded.session_start_us)
    if loaded.stimulus_onset_us is not None:
        state.note_stimulus_onset(loaded.stimulus_onset_us)
    for f in loaded.fixations:
        state.on_fixation(f)
    for s in loaded.saccades:
        state.on_saccade(s)
    if loaded.ended:
        state.finalize()
    if loaded.manifest is None:
        from .metrics import METRICS_CSV_HEADER

        return METRICS_CSV_HEADER + "\n"
    rows = [state.word_metrics(w.word_index) for w in loaded.manifest.words]
    return metrics_csv(loaded.manifest, rows)
