import json

import pytest

from gazemetrics import protocol
from gazemetrics.manifest import make_grid_manifest
from gazemetrics.replay import identity_viewport
from gazemetrics.session import SessionConfig, SessionPipeline
from gazemetrics.types import LayoutManifest, ParagraphAoi, Rect, WordAoi

LINE_Y, LINE_H = 100.0, 20.0


@pytest.fixture(scope="session")
def grid40():
    return make_grid_manifest(40)


def line_manifest(spans, y=LINE_Y, media=()):
    """Manifest with one word per (x_start, x_end) span on a single line."""
    words = []
    chunks = []
    char = 0
    for i, (x0, x1) in enumerate(spans):
        text = f"w{i}"
        words.append(
            WordAoi(
                word_index=i,
                char_index=char,
                sentence_index=0,
                paragraph_id=0,
                text=text,
                box=Rect(x0, y, x1 - x0, LINE_H),
            )
        )
        chunks.append(text)
        char += len(text) + 1
    page = " ".join(chunks)
    para = ParagraphAoi(paragraph_id=0, box=Rect(0, 0, 1000, 1000))
    m = LayoutManifest(url="test://", page_text=page, words=tuple(words), paragraphs=(para,), media=tuple(media))
    m.validate()
    return m


def run_pipeline(samples, manifest, config=None, store_dir=None, session_id="test", end=True):
    """Feed a sample list through a fresh pipeline with identity viewport."""
    pipe = SessionPipeline(session_id, config=config or SessionConfig(), store_dir=store_dir)
    pipe.ingest(protocol.layout_to_msg(manifest))
    if samples:
        pipe.ingest(protocol.viewport_to_msg(identity_viewport(samples[0].t_us)))
    for s in samples:
        pipe.ingest(protocol.gaze_to_msg(s))
    if end:
        pipe.end_session()
    return pipe


def send_json(ws, msg):
    ws.send(json.dumps(msg, separators=(",", ":")))
