"""Per-sample latency benchmark for the full processing pipeline.

Frames are pre-serialized and fed to the pipeline as fast as possible;
timing covers message parse through metric update (socket transport
excluded).  The default budget is the inter-sample period of a 1200 Hz
tracker, 833 microseconds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import protocol
from .replay import identity_viewport
from .session import SessionConfig, SessionPipeline
from .types import GazeSample, LayoutManifest

_COMPACT = {"separators": (",", ":")}

DEFAULT_BUDGET_US = 833.0


@dataclass(frozen=True, slots=True)
class BenchReport:
    n: int
    mean_us: float
    sd_us: float
    p50_us: float
    p99_us: float
    fixations: int
    saccades: int
    budget_us: float

    @property
    def passed(self) -> bool:
        return self.mean_us < self.budget_us

    def render(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"samples              {self.n}\n"
            f"mean per-sample      {self.mean_us / 1000.0:.4f} ms\n"
            f"sd                   {self.sd_us / 1000.0:.4f} ms\n"
            f"p50                  {self.p50_us / 1000.0:.4f} ms\n"
            f"p99                  {self.p99_us / 1000.0:.4f} ms\n"
            f"fixations/saccades   {self.fixations}/{self.saccades}\n"
            f"budget               {self.budget_us / 1000.0:.4f} ms -> {verdict}"
        )


def run_bench(
    samples: list[GazeSample],
    manifest: LayoutManifest,
    config: SessionConfig | None = None,
    budget_us: float = DEFAULT_BUDGET_US,
    store_dir=None,
    session_id: str = "bench",
) -> BenchReport:
    pipeline = SessionPipeline(session_id, config=config, store_dir=store_dir)
    frames = [json.dumps(protocol.layout_to_msg(manifest), **_COMPACT)]
    if samples:
        frames.append(
            json.dumps(protocol.viewport_to_msg(identity_viewport(samples[0].t_us)), **_COMPACT)
        )
    frames.extend(json.dumps(protocol.gaze_to_msg(s), **_COMPACT) for s in samples)
    ingest = pipeline.ingest_text
    for frame in frames:
        ingest(frame)
    pipeline.end_session()
    stats = pipeline.latency_stats() or {
        "n": 0,
        "mean_us": 0.0,
        "sd_us": 0.0,
        "p50_us": 0.0,
        "p99_us": 0.0,
    }
    return BenchReport(
        n=stats["n"],
        mean_us=stats["mean_us"],
        sd_us=stats["sd_us"],
        p50_us=stats["p50_us"],
        p99_us=stats["p99_us"],
        fixations=len(pipeline.state.fixations),
        saccades=len(pipeline.state.saccades),
        budget_us=budget_us,
    )
