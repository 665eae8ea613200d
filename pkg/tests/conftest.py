import numpy as np
import pytest

from sidpatch.sid import SidChip, SidConfig


@pytest.fixture
def chip():
    return SidChip(SidConfig(sample_rate_hz=44100.0))


def make_chip(sample_rate=44100.0, clock=985248.0):
    return SidChip(SidConfig(sample_rate_hz=sample_rate, clock_hz=clock))


def gate_on_voice(chip, voice=0, freq=7493, waveform=0x20, sustain=15,
                  attack=0, release=0):
    """Poke one voice into a steady gated tone at full volume."""
    base = voice * 7
    chip.poke(24, 15)
    chip.poke(base + 0, freq & 0xFF)
    chip.poke(base + 1, freq >> 8)
    chip.poke(base + 5, attack << 4)
    chip.poke(base + 6, (sustain << 4) | release)
    chip.poke(base + 4, waveform | 0x01)


def measured_frequency(buf, sample_rate, drop=1.0):
    """Fundamental from the span between first and last falling edge."""
    edges = np.where(np.diff(buf) < -drop * np.max(np.abs(buf)) * 0.5)[0]
    assert len(edges) >= 2, "need at least two falling edges"
    span_s = (edges[-1] - edges[0]) / sample_rate
    return (len(edges) - 1) / span_s
