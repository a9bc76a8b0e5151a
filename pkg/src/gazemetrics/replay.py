"""Replay a recorded gaze log into a running engine over the wire protocol.

The client connects as a source, announces the layout and an identity
viewport (log coordinates are page coordinates), then streams gaze messages
honoring the log's inter-sample gaps scaled by 1/speed.  Speed 0 streams as
fast as possible.  Pacing uses absolute deadlines so sleep overshoot does
not accumulate.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from websockets.sync.client import connect

from . import protocol
from .types import GazeSample, LayoutManifest, ViewportState

_COMPACT = {"separators": (",", ":")}


@dataclass(frozen=True, slots=True)
class ReplayResult:
    samples_sent: int
    wall_seconds: float


def identity_viewport(t_us: int) -> ViewportState:
    return ViewportState(t_us=t_us, win_x=0.0, win_y=0.0, scroll_x=0.0, scroll_y=0.0, dpr=1.0)


def replay(
    samples: list[GazeSample],
    manifest: LayoutManifest,
    target: str,
    speed: float = 1.0,
    session: str = "replay",
    participant: str = "",
) -> ReplayResult:
    if speed < 0:
        raise ValueError("speed must be >= 0")
    t_start = time.perf_counter()
    with connect(target, max_size=None) as ws:
        ws.send(json.dumps(protocol.hello_msg("source", session, participant), **_COMPACT))
        ws.send(json.dumps(protocol.layout_to_msg(manifest), **_COMPACT))
        if samples:
            vp = identity_viewport(samples[0].t_us)
            ws.send(json.dumps(protocol.viewport_to_msg(vp), **_COMPACT))
            t0_us = samples[0].t_us
            for s in samples:
                if speed > 0:
                    deadline = t_start + (s.t_us - t0_us) / 1e6 / speed
                    delay = deadline - time.perf_counter()
                    if delay > 0:
                        time.sleep(delay)
                ws.send(json.dumps(protocol.gaze_to_msg(s), **_COMPACT))
        ws.send(json.dumps(protocol.end_msg(), **_COMPACT))
    return ReplayResult(samples_sent=len(samples), wall_seconds=time.perf_counter() - t_start)
