"""Raw gaze log CSV: ``t_us,sx,sy,ox,oy,oz,px,py,pz,valid``.

The six 3D columns (gaze origin / gaze position, millimetres) may be empty
per row; ``valid`` is 0/1.  Timestamps must be non-decreasing; duplicates
and regressions are left to the classifier's ordering guard.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

from .types import GazeError, GazeSample

GAZE_LOG_HEADER = ["t_us", "sx", "sy", "ox", "oy", "oz", "px", "py", "pz", "valid"]


class GazeLogError(GazeError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def write_gaze_log(samples: Iterable[GazeSample], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(GAZE_LOG_HEADER)
        for s in samples:
            if s.origin_3d is not None and s.pos_3d is not None:
                o = [repr(v) for v in s.origin_3d]
                p = [repr(v) for v in s.pos_3d]
            else:
                o = ["", "", ""]
                p = ["", "", ""]
            writer.writerow([s.t_us, repr(s.screen_x), repr(s.screen_y), *o, *p, int(s.valid)])
            n += 1
    return n


def read_gaze_log(path: str | Path) -> list[GazeSample]:
    samples: list[GazeSample] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != GAZE_LOG_HEADER:
            raise GazeLogError(f"unexpected header {header!r}", line=1)
        prev_t: int | None = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(GAZE_LOG_HEADER):
                raise GazeLogError(f"expected {len(GAZE_LOG_HEADER)} fields, got {len(row)}", lineno)
            try:
                t_us = int(row[0])
                sx, sy = float(row[1]), float(row[2])
                has_3d = any(v != "" for v in row[3:9])
                if has_3d:
                    origin = (float(row[3]), float(row[4]), float(row[5]))
                    pos = (float(row[6]), float(row[7]), float(row[8]))
                else:
                    origin = pos = None
                valid = row[9].strip() in ("1", "true", "True")
                s = GazeSample(t_us=t_us, screen_x=sx, screen_y=sy, origin_3d=origin, pos_3d=pos, valid=valid)
            except (ValueError, IndexError) as exc:
                raise GazeLogError(str(exc), lineno) from exc
            if prev_t is not None and t_us < prev_t:
                raise GazeLogError(f"timestamp {t_us} decreases (previous {prev_t})", lineno)
            prev_t = t_us
            samples.append(s)
    return samples
