"""Deterministic artifact writers: 16-bit PCM WAV and trace CSV.

Volts map to full scale against a fixed 10 V peak reference; samples beyond
+/-10 V clip to the 16-bit rails and are counted.  Formatting is fixed-width
and locale-independent so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

WAV_FULL_SCALE_VOLTS = 10.0
_PEAK_WORD = 32767


def encode_pcm16(samples: np.ndarray) -> tuple[np.ndarray, int]:
    """Quantize volts to int16 words; returns (words, clip_count)."""
    raw = np.rint(np.asarray(samples, dtype=float) * (_PEAK_WORD / WAV_FULL_SCALE_VOLTS))
    clipped = int(np.count_nonzero((raw > _PEAK_WORD) | (raw < -_PEAK_WORD)))
    words = np.clip(raw, -_PEAK_WORD, _PEAK_WORD).astype("<i2")
    return words, clipped


def write_wav(samples, channels: int, path, sample_rate: int) -> int:
    """Write a PCM 16-bit RIFF/WAVE file; returns the clipped-sample count.

    `samples` is one array for mono or a (left, right) pair for stereo.
    """
    if channels == 1:
        buffers = [np.asarray(samples, dtype=float)]
    elif channels == 2:
        left, right = samples
        buffers = [np.asarray(left, dtype=float), np.asarray(right, dtype=float)]
        if len(buffers[0]) != len(buffers[1]):
            raise ValueError("stereo channels must have equal length")
    else:
        raise ValueError("channels must be 1 or 2")
    for buf in buffers:
        if buf.size and not np.all(np.isfinite(buf)):
            raise ValueError("samples must be finite")

    n = len(buffers[0])
    clip_count = 0
    if channels == 1:
        words, clip_count = encode_pcm16(buffers[0])
    else:
        interleaved = np.empty(n * 2)
        interleaved[0::2] = buffers[0]
        interleaved[1::2] = buffers[1]
        words, clip_count = encode_pcm16(interleaved)

    data_size = n * channels * 2
    byte_rate = sample_rate * channels * 2
    header = b"RIFF" + struct.pack("<I", 36 + data_size) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, channels, sample_rate,
                                    byte_rate, channels * 2, 16)
    header += b"data" + struct.pack("<I", data_size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(words.tobytes())
    return clip_count


def write_trace_csv(traces: dict[str, np.ndarray], path, decimate: int,
                    sample_rate: int) -> int:
    """Write probe traces: header `time_s,<label>,...`, one row per
    decimate-th sample, times to 6 decimals and values to 6 significant
    digits.  Returns the number of data rows."""
    if decimate < 1:
        raise ValueError("decimate must be a positive integer")
    labels = list(traces)
    lengths = {len(traces[label]) for label in labels}
    if len(lengths) > 1:
        raise ValueError("trace buffers must have equal length")
    n = lengths.pop() if lengths else 0
    rows = 0
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["time_s"] + labels) + "\n")
        columns = [traces[label] for label in labels]
        for i in range(0, n, decimate):
            cells = [f"{i / sample_rate:.6f}"]
            cells.extend(f"{float(col[i]):.6g}" for col in columns)
            fh.write(",".join(cells) + "\n")
            rows += 1
    return rows


def remove_if_exists(path) -> None:
    try:
        Path(path).unlink()
    except FileNotFoundError:
        pass
