"""JSON wire protocol: one message object per socket text frame.

Client -> server: hello, gaze, layout, viewport, tabstate, end.
Server -> viewer: snapshot, fixation_end, saccade, metrics_update.

Parsing and serialization preserve field values exactly; optional gaze 3D
fields are omitted (not null) when absent.
"""

from __future__ import annotations

from .manifest import manifest_from_dict, manifest_to_dict
from .metrics import metrics_to_json
from .types import Fixation, GazeSample, LayoutManifest, Rect, Saccade, ViewportState, WordMetrics

ROLES = ("source", "layout", "viewer")
TAB_STATES = ("visible", "hidden", "closed")


class ProtocolError(ValueError):
    pass


def hello_msg(role: str, session: str, participant: str = "") -> dict:
    return {"type": "hello", "role": role, "session": session, "participant": participant}


def parse_hello(d: dict) -> tuple[str, str, str]:
    """Returns (role, session, participant); session may be empty, in which
    case the server assigns one."""
    role = d.get("role")
    session = d.get("session", "")
    if role not in ROLES:
        raise ProtocolError(f"unknown role {role!r}")
    if not isinstance(session, str):
        raise ProtocolError("session id must be a string")
    return role, session, str(d.get("participant", ""))


def gaze_to_msg(s: GazeSample) -> dict:
    msg: dict = {"type": "gaze", "t_us": s.t_us, "sx": s.screen_x, "sy": s.screen_y}
    if s.origin_3d is not None and s.pos_3d is not None:
        msg["origin"] = list(s.origin_3d)
        msg["pos"] = list(s.pos_3d)
    msg["valid"] = s.valid
    return msg


def gaze_from_msg(d: dict) -> GazeSample:
    try:
        origin = d.get("origin")
        pos = d.get("pos")
        return GazeSample(
            t_us=int(d["t_us"]),
            screen_x=float(d["sx"]),
            screen_y=float(d["sy"]),
            origin_3d=tuple(float(v) for v in origin) if origin is not None else None,  # type: ignore[arg-type]
            pos_3d=tuple(float(v) for v in pos) if pos is not None else None,  # type: ignore[arg-type]
            valid=bool(d.get("valid", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed gaze message: {exc}") from exc


def viewport_to_msg(v: ViewportState) -> dict:
    return {
        "type": "viewport",
        "t_us": v.t_us,
        "win_x": v.win_x,
        "win_y": v.win_y,
        "scroll_x": v.scroll_x,
        "scroll_y": v.scroll_y,
        "dpr": v.dpr,
    }


def viewport_from_msg(d: dict) -> ViewportState:
    try:
        return ViewportState(
            t_us=int(d["t_us"]),
            win_x=float(d["win_x"]),
            win_y=float(d["win_y"]),
            scroll_x=float(d["scroll_x"]),
            scroll_y=float(d["scroll_y"]),
            dpr=float(d["dpr"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed viewport message: {exc}") from exc


def layout_to_msg(m: LayoutManifest) -> dict:
    return {"type": "layout", **manifest_to_dict(m)}


def layout_from_msg(d: dict) -> LayoutManifest:
    return manifest_from_dict(d)


def tabstate_msg(state: str) -> dict:
    if state not in TAB_STATES:
        raise ProtocolError(f"unknown tab state {state!r}")
    return {"type": "tabstate", "state": state}


def end_msg() -> dict:
    return {"type": "end"}


def _rect_or_none(r: Rect | None) -> list[float] | None:
    return None if r is None else r.as_list()


def fixation_fields(f: Fixation) -> dict:
    return {
        "start_us": f.start_us,
        "end_us": f.end_us,
        "duration_us": f.duration_us,
        "centroid": list(f.centroid) if f.centroid is not None else None,
        "sample_count": f.sample_count,
        "word_index": f.word_index,
        "media_id": f.media_id,
        "aoi_box": _rect_or_none(f.aoi_box),
        "fixation_group": f.fixation_group,
    }


def fixation_from_fields(d: dict) -> Fixation:
    centroid = d.get("centroid")
    box = d.get("aoi_box")
    return Fixation(
        start_us=int(d["start_us"]),
        end_us=int(d["end_us"]),
        centroid=tuple(centroid) if centroid is not None else None,  # type: ignore[arg-type]
        sample_count=int(d["sample_count"]),
        word_index=d.get("word_index"),
        media_id=d.get("media_id"),
        aoi_box=Rect.from_list(box) if box is not None else None,
        fixation_group=int(d.get("fixation_group", 0)),
    )


def saccade_fields(s: Saccade) -> dict:
    return {
        "start_us": s.start_us,
        "end_us": s.end_us,
        "duration_us": s.duration_us,
        "start_pt": list(s.start_pt) if s.start_pt is not None else None,
        "end_pt": list(s.end_pt) if s.end_pt is not None else None,
        "seq_index": s.seq_index,
        "paragraph_id": s.paragraph_id,
        "aoi_seq_index": s.aoi_seq_index,
        "length_px": s.length_px,
        "amplitude_deg": s.amplitude_deg,
        "peak_velocity_dps": s.peak_velocity_dps,
        "direction": list(s.direction),
        "degenerate": s.degenerate,
    }


def saccade_from_fields(d: dict) -> Saccade:
    start_pt = d.get("start_pt")
    end_pt = d.get("end_pt")
    return Saccade(
        start_us=int(d["start_us"]),
        end_us=int(d["end_us"]),
        start_pt=tuple(start_pt) if start_pt is not None else None,  # type: ignore[arg-type]
        end_pt=tuple(end_pt) if end_pt is not None else None,  # type: ignore[arg-type]
        seq_index=int(d["seq_index"]),
        length_px=float(d["length_px"]),
        amplitude_deg=float(d["amplitude_deg"]),
        peak_velocity_dps=float(d["peak_velocity_dps"]),
        direction=(float(d["direction"][0]), float(d["direction"][1])),
        degenerate=bool(d.get("degenerate", False)),
        paragraph_id=d.get("paragraph_id"),
        aoi_seq_index=d.get("aoi_seq_index"),
    )


def fixation_end_msg(f: Fixation) -> dict:
    return {"type": "fixation_end", **fixation_fields(f)}


def saccade_msg(s: Saccade) -> dict:
    return {"type": "saccade", **saccade_fields(s)}


def metrics_update_msg(wm: WordMetrics) -> dict:
    return {"type": "metrics_update", "word_index": wm.word_index, "metrics": metrics_to_json(wm)}


def snapshot_msg(manifest: LayoutManifest | None, metrics: list[WordMetrics]) -> dict:
    return {
        "type": "snapshot",
        "manifest": manifest_to_dict(manifest) if manifest is not None else None,
        "metrics": [metrics_to_json(wm) for wm in metrics],
    }
