"""Synthetic reading gaze generation.

Produces samples that dwell on word centers in reading order with optional
skips, regressions, and Gaussian position noise.  Movements between words
are instantaneous (one inter-sample jump), which the classifier sees as a
high-velocity sample.  With noise 0 and all probabilities 0 every word is
fixated exactly once in order, which gives fully predictable metrics.

Samples are emitted in page coordinates; replaying them with an identity
viewport (window at origin, no scroll, dpr 1) reproduces the same geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import GazeSample, LayoutManifest


@dataclass(frozen=True, slots=True)
class ReadingProfile:
    rate_hz: float = 300.0
    fixation_mean_ms: float = 200.0
    fixation_sd_ms: float = 40.0
    fixation_min_ms: float = 80.0
    p_skip: float = 0.0
    p_regress: float = 0.0
    regress_max_back: int = 3
    noise_px: float = 0.0
    passes: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        if not 0 <= self.p_skip <= 1 or not 0 <= self.p_regress <= 1:
            raise ValueError("probabilities must be in [0, 1]")
        if self.passes < 1:
            raise ValueError("passes must be >= 1")


def simulate(manifest: LayoutManifest, profile: ReadingProfile) -> list[GazeSample]:
    """Generate a gaze sample stream reading the manifest's words."""
    rng = np.random.default_rng(profile.seed)
    dt_us = max(1, round(1_000_000 / profile.rate_hz))
    samples: list[GazeSample] = []
    t = 1_000_000

    def centers() -> list[tuple[float, float]]:
        return [(w.box.x + w.box.w / 2.0, w.box.y + w.box.h / 2.0) for w in manifest.words]

    word_centers = centers()

    def dwell(word: int) -> int:
        nonlocal t
        dur_ms = max(
            profile.fixation_min_ms,
            float(rng.normal(profile.fixation_mean_ms, profile.fixation_sd_ms)),
        )
        n = max(2, round(dur_ms * profile.rate_hz / 1000.0))
        cx, cy = word_centers[word]
        for _ in range(n):
            x, y = cx, cy
            if profile.noise_px > 0:
                x += float(rng.normal(0.0, profile.noise_px))
                y += float(rng.normal(0.0, profile.noise_px))
            samples.append(GazeSample(t_us=t, screen_x=x, screen_y=y))
            t += dt_us
        return n

    n_words = len(manifest.words)
    for _ in range(profile.passes):
        i = 0
        while i < n_words:
            if profile.p_skip > 0 and rng.random() < profile.p_skip:
                i += 1
                continue
            dwell(i)
            if i > 0 and profile.p_regress > 0 and rng.random() < profile.p_regress:
                back = int(rng.integers(1, profile.regress_max_back + 1))
                dwell(max(0, i - back))
            i += 1
    return samples
