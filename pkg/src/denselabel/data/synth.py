"""Synthetic labeled recordings: per-class sinusoids with controllable mess."""

from __future__ import annotations

import numpy as np

from .types import LabeledSequence, SynthSpec


def _draw_segments(spec: SynthSpec, rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """(class, start, end) covering exactly [0, total_frames)."""
    segments = []
    pos = 0
    prev = None
    while pos < spec.total_frames:
        if spec.num_classes == 1:
            cls = 0
        else:
            # Never repeat the previous class, so every boundary is a real
            # transition.
            choices = [c for c in range(spec.num_classes) if c != prev]
            cls = int(rng.choice(choices))
        lo, hi = spec.duration_ranges[cls]
        dur = int(rng.integers(lo, hi + 1))
        end = min(pos + dur, spec.total_frames)
        segments.append((cls, pos, end))
        prev = cls
        pos = end
    return segments


def synth_generate(spec: SynthSpec) -> LabeledSequence:
    """Build one fully labeled sequence from a ``SynthSpec``.

    Each segment's signal is its class sinusoid evaluated on the global time
    axis with a per-segment random phase, plus Gaussian noise. ``crossfade``
    blends neighboring waveforms across transitions and ``boundary_jitter``
    shifts label boundaries off the true signal change, so boundary frames
    become genuinely ambiguous.
    """
    rng = np.random.default_rng(spec.seed)
    segments = _draw_segments(spec, rng)
    t_all = np.arange(spec.total_frames, dtype=np.float64) / spec.sample_rate_hz
    chan_phase = np.arange(spec.num_channels) * (2.0 * np.pi / max(spec.num_channels, 1))
    seg_phase = rng.uniform(0.0, 2.0 * np.pi, size=len(segments))

    def wave(seg_idx: int, frame_lo: int, frame_hi: int) -> np.ndarray:
        cls, _, _ = segments[seg_idx]
        t = t_all[frame_lo:frame_hi, None]
        arg = 2.0 * np.pi * spec.base_freqs[cls] * t + seg_phase[seg_idx] + chan_phase
        return spec.amplitudes[cls] * np.sin(arg)

    frames = np.empty((spec.total_frames, spec.num_channels), dtype=np.float64)
    labels = np.empty(spec.total_frames, dtype=np.int64)
    for i, (cls, start, end) in enumerate(segments):
        frames[start:end] = wave(i, start, end)
        labels[start:end] = cls

    if spec.crossfade > 0:
        cf = spec.crossfade
        for i in range(len(segments) - 1):
            b = segments[i + 1][1]
            lo = max(b - cf, segments[i][1])
            hi = min(b + cf, segments[i + 1][2])
            if hi <= lo:
                continue
            w = (np.arange(lo, hi, dtype=np.float64) - (b - cf)) / (2.0 * cf)
            w = np.clip(w, 0.0, 1.0)[:, None]
            frames[lo:hi] = (1.0 - w) * wave(i, lo, hi) + w * wave(i + 1, lo, hi)

    for i, (cls, start, end) in enumerate(segments):
        sigma = spec.noise_sigmas[cls]
        if sigma > 0:
            frames[start:end] += rng.normal(0.0, sigma, size=(end - start, spec.num_channels))

    if spec.boundary_jitter > 0:
        j = spec.boundary_jitter
        for i in range(len(segments) - 1):
            left_cls, left_start, b = segments[i]
            right_cls, _, right_end = segments[i + 1]
            shift = int(rng.integers(-j, j + 1))
            b_new = int(np.clip(b + shift, left_start + 1, right_end - 1))
            if b_new > b:
                labels[b:b_new] = left_cls
            elif b_new < b:
                labels[b_new:b] = right_cls

    return LabeledSequence(
        frames=frames,
        labels=labels,
        source_id=f"synth_seed{spec.seed}",
        sample_rate_hz=spec.sample_rate_hz,
    )


def synth_hapt_like(
    num_experiments: int,
    frames_per_experiment: int,
    seed: int,
    num_classes: int = 12,
    noise_sigma: float = 0.3,
) -> list[LabeledSequence]:
    """Six-channel stand-in recordings shaped like the smartphone dataset.

    Classes are sinusoids with evenly spaced frequencies; short unlabeled
    gaps separate activity bouts the way postural transitions leave holes in
    the real labels.
    """
    seqs = []
    for k in range(num_experiments):
        spec = SynthSpec.uniform(
            num_classes=num_classes,
            duration_range=(300, 900),
            total_frames=frames_per_experiment,
            seed=seed + 1000 * k,
            base_freq=0.5,
            freq_step=0.45,
            noise_sigma=noise_sigma,
            num_channels=6,
        )
        seq = synth_generate(spec)
        gap_rng = np.random.default_rng(seed + 1000 * k + 1)
        labels = seq.labels.copy()
        for _ in range(max(1, frames_per_experiment // 4000)):
            gap_start = int(gap_rng.integers(0, max(1, frames_per_experiment - 50)))
            labels[gap_start : gap_start + int(gap_rng.integers(10, 50))] = -1
        seqs.append(
            LabeledSequence(
                frames=seq.frames,
                labels=labels,
                source_id=f"exp{k + 1:02d}_user{k + 1:02d}",
                sample_rate_hz=seq.sample_rate_hz,
            )
        )
    return seqs
