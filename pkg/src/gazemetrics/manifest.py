"""Layout manifest JSON format and synthetic manifest construction.

The on-disk / on-wire shape (all geometry page CSS px):

    {
      "url": str,
      "page_text": str,
      "words": [{"i": int, "char": int, "sent": int, "para": int,
                 "text": str, "box": [x, y, w, h]}, ...],
      "paragraphs": [{"id": int, "box": [x, y, w, h]}, ...],
      "media": [{"id": int, "kind": "image"|"video", "box": [...]}, ...]
    }
"""

from __future__ import annotations

import json
from pathlib import Path

from .types import (
    LayoutManifest,
    ManifestInvalidError,
    MediaAoi,
    ParagraphAoi,
    Rect,
    WordAoi,
)


def manifest_to_dict(m: LayoutManifest) -> dict:
    return {
        "url": m.url,
        "page_text": m.page_text,
        "words": [
            {
                "i": w.word_index,
                "char": w.char_index,
                "sent": w.sentence_index,
                "para": w.paragraph_id,
                "text": w.text,
                "box": w.box.as_list(),
            }
            for w in m.words
        ],
        "paragraphs": [{"id": p.paragraph_id, "box": p.box.as_list()} for p in m.paragraphs],
        "media": [{"id": a.media_id, "kind": a.kind, "box": a.box.as_list()} for a in m.media],
    }


def manifest_from_dict(d: dict) -> LayoutManifest:
    try:
        words = tuple(
            WordAoi(
                word_index=int(w["i"]),
                char_index=int(w["char"]),
                sentence_index=int(w["sent"]),
                paragraph_id=int(w["para"]),
                text=str(w["text"]),
                box=Rect.from_list(w["box"]),
            )
            for w in d["words"]
        )
        paragraphs = tuple(
            ParagraphAoi(paragraph_id=int(p["id"]), box=Rect.from_list(p["box"]))
            for p in d["paragraphs"]
        )
        media = tuple(
            MediaAoi(media_id=int(a["id"]), kind=str(a["kind"]), box=Rect.from_list(a["box"]))
            for a in d.get("media", [])
        )
        return LayoutManifest(
            url=str(d["url"]),
            page_text=str(d["page_text"]),
            words=words,
            paragraphs=paragraphs,
            media=media,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestInvalidError(f"malformed manifest: {exc}") from exc


def load_manifest(path: str | Path) -> LayoutManifest:
    m = manifest_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    m.validate()
    return m


def save_manifest(m: LayoutManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(m)), encoding="utf-8")


_FILLER = (
    "reading on screens leaves a trace of where the eyes rest and how "
    "long they linger before moving on to the next word or line"
).split()


def make_grid_manifest(
    n_words: int,
    words_per_line: int = 10,
    lines_per_paragraph: int = 5,
    char_w: float = 9.0,
    line_h: float = 18.0,
    line_gap: float = 8.0,
    word_gap: float = 9.0,
    margin: float = 20.0,
    url: str = "synthetic://grid",
) -> LayoutManifest:
    """Deterministic single-column manifest for tests and benchmarks.

    Words cycle through a small vocabulary; every sentence is closed with a
    period on its last word so sentence indices exercise real segmentation.
    """
    texts = []
    for i in range(n_words):
        t = _FILLER[i % len(_FILLER)]
        if i % 12 == 11 or i == n_words - 1:
            t += "."
        texts.append(t)

    words: list[WordAoi] = []
    page_parts: list[str] = []
    char_cursor = 0
    sent = 0
    for i, t in enumerate(texts):
        line = i // words_per_line
        col = i % words_per_line
        para = line // lines_per_paragraph
        x = margin + col * (12 * char_w + word_gap)
        y = margin + line * (line_h + line_gap)
        words.append(
            WordAoi(
                word_index=i,
                char_index=char_cursor,
                sentence_index=sent,
                paragraph_id=para,
                text=t,
                box=Rect(x, y, len(t) * char_w, line_h),
            )
        )
        page_parts.append(t)
        char_cursor += len(t) + 1
        if t.endswith("."):
            sent += 1

    paragraphs: list[ParagraphAoi] = []
    for pid in sorted({w.paragraph_id for w in words}):
        member = [w.box for w in words if w.paragraph_id == pid]
        x0 = min(b.x for b in member) - 4
        y0 = min(b.y for b in member) - 4
        x1 = max(b.right for b in member) + 4
        y1 = max(b.bottom for b in member) + 4
        paragraphs.append(ParagraphAoi(paragraph_id=pid, box=Rect(x0, y0, x1 - x0, y1 - y0)))

    m = LayoutManifest(
        url=url,
        page_text=" ".join(page_parts),
        words=tuple(words),
        paragraphs=tuple(paragraphs),
    )
    m.validate()
    return m
