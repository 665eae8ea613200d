"""Oscillator waveforms, frequency law, sync/ring, noise, phase exactness."""

import numpy as np
import pytest

from sidpatch.sid import PHASE_MASK, SidChip, SidConfig

from conftest import gate_on_voice, make_chip, measured_frequency

CLOCK = 985248.0
SR = 44100.0


def expected_hz(freq_register, clock=CLOCK):
    return freq_register * clock / float(1 << 24)


def test_no_waveform_bits_silent():
    chip = make_chip()
    chip.poke(24, 15)
    chip.poke(0, 0xFF)
    chip.poke(1, 0x3F)
    chip.poke(6, 0xF0)
    chip.poke(4, 0x01)  # gate only
    assert chip.voice_sample(0) == 0.0
    buf = chip.render(1000)
    assert np.all(buf == 0.0)


def test_sawtooth_pinned_440():
    chip = make_chip()
    gate_on_voice(chip, freq=7493, waveform=0x20)
    buf = chip.render(int(2 * SR))
    measured = measured_frequency(buf, SR)
    assert measured == pytest.approx(440.0, abs=0.5)
    assert measured == pytest.approx(expected_hz(7493), rel=0.005)


def test_frequency_oracle_random_registers():
    rng = np.random.default_rng(2024)
    for freq in rng.integers(256, 30001, size=8):
        chip = make_chip()
        gate_on_voice(chip, freq=int(freq), waveform=0x20)
        buf = chip.render(int(2 * SR))
        measured = measured_frequency(buf, SR)
        assert measured == pytest.approx(expected_hz(int(freq)), rel=0.005)


def test_pulse_duty_cycle_half_scale():
    chip = make_chip()
    gate_on_voice(chip, freq=7493, waveform=0x40)
    chip.poke(2, 0x00)
    chip.poke(3, 0x08)  # pulse width 2048
    buf = chip.render(int(SR))
    duty = np.count_nonzero(buf > 0) / len(buf)
    assert duty == pytest.approx(0.5, abs=0.01)


def test_pulse_duty_follows_width():
    chip = make_chip()
    gate_on_voice(chip, freq=7493, waveform=0x40)
    chip.poke(2, 0x00)
    chip.poke(3, 0x04)  # pulse width 1024 -> 25 %
    buf = chip.render(int(SR))
    duty = np.count_nonzero(buf > 0) / len(buf)
    assert duty == pytest.approx(0.25, abs=0.01)


def test_ring_mod_with_test_bit_modulator_is_signed_triangle():
    # Modulator (voice 3 for voice 1) frozen at phase 0 by its test bit:
    # its triangle sign is a constant, so the output is a plain triangle
    # scaled by that constant.
    chip = make_chip()
    gate_on_voice(chip, freq=4000, waveform=0x10)
    chip.poke(4, 0x15)       # triangle + ring + gate
    chip.poke(14 + 4, 0x08)  # voice 3 test bit
    ringed = chip.render(2000)

    plain = make_chip()
    gate_on_voice(plain, freq=4000, waveform=0x10)
    reference = plain.render(2000)
    assert np.allclose(ringed, -reference, atol=1e-12)


def test_hard_sync_locks_to_modulator_rate():
    # Voice 1 synced to voice 3, with voice 1 slower than the modulator: its
    # saw never completes a natural cycle, so every falling edge is a sync
    # reset and the measured rate equals the modulator's wrap rate.
    chip = make_chip()
    chip.poke(24, 15)
    chip.poke(6, 0xF0)
    own_freq = 3000
    chip.poke(0, own_freq & 0xFF)
    chip.poke(1, own_freq >> 8)
    mod_freq = 8000
    chip.poke(14, mod_freq & 0xFF)
    chip.poke(15, mod_freq >> 8)
    chip.poke(14 + 4, 0x20)  # voice 3 runs sawtooth (not gated; just wraps)
    chip.poke(4, 0x23)       # voice 1 saw + sync + gate
    buf = chip.render(int(SR))[200:]  # past the 2 ms attack
    drops = np.where(np.diff(buf) < -0.3 * np.ptp(buf))[0]
    expected = expected_hz(mod_freq)
    measured = (len(drops) - 1) / ((drops[-1] - drops[0]) / SR)
    assert measured == pytest.approx(expected, rel=0.01)


def test_test_bit_freezes_phase():
    chip = make_chip()
    gate_on_voice(chip, freq=7493, waveform=0x20)
    chip.poke(4, 0x29)  # saw + test + gate
    buf = chip.render(500)
    assert chip.voices[0].phase == 0
    assert np.ptp(buf[-200:]) == 0.0  # constant output while frozen


def test_sine_selected_by_triangle_plus_sawtooth():
    chip = make_chip()
    gate_on_voice(chip, freq=7493, waveform=0x30)
    buf = chip.render(int(SR))
    t = np.arange(len(buf)) / SR
    f = expected_hz(7493)
    # correlate against quadrature references at the expected frequency
    c = np.sum(buf * np.cos(2 * np.pi * f * t)) * 2 / len(buf)
    s = np.sum(buf * np.sin(2 * np.pi * f * t)) * 2 / len(buf)
    amplitude = np.hypot(c, s)
    # a pure sine concentrates nearly all its power in the fundamental
    rms = np.sqrt(np.mean(buf ** 2))
    assert amplitude / np.sqrt(2) == pytest.approx(rms, rel=0.02)


def test_combined_pulse_and_saw_is_bitwise_and():
    chip = make_chip()
    gate_on_voice(chip, freq=7493, waveform=0x60)
    chip.poke(2, 0x00)
    chip.poke(3, 0x08)
    combined = chip.render(4000)

    saw_chip = make_chip()
    gate_on_voice(saw_chip, freq=7493, waveform=0x20)
    saw = saw_chip.render(4000)
    pulse_chip = make_chip()
    gate_on_voice(pulse_chip, freq=7493, waveform=0x40)
    pulse_chip.poke(2, 0x00)
    pulse_chip.poke(3, 0x08)
    pulse = pulse_chip.render(4000)

    scale = 15 / 15 * 0.5 / 3  # full volume, line scaling
    skip = 200  # past the 2 ms attack ramp so the envelope is exactly 1.0
    saw12 = np.rint(((saw[skip:] / scale) + 1.0) / 2.0 * 4095).astype(np.int64)
    pulse12 = np.rint(((pulse[skip:] / scale) + 1.0) / 2.0 * 4095).astype(np.int64)
    anded = (saw12 & pulse12) / 4095.0 * 2.0 - 1.0
    assert np.allclose(combined[skip:] / scale, anded, atol=1e-9)


def test_phase_wrap_exact_over_ten_million_samples():
    # Phase arithmetic is exact mod 2^24: after N samples the accumulator
    # equals freq x cycles(N) mod 2^24 computed independently.
    chip = make_chip()
    freq = 31337
    chip.poke(0, freq & 0xFF)
    chip.poke(1, freq >> 8)
    chip.poke(4, 0x20)
    total = 10_000_000
    chunk = 1_000_000
    for _ in range(total // chunk):
        chip.render(chunk)
    from fractions import Fraction
    ratio = Fraction(CLOCK / SR).limit_denominator(1 << 20)
    cycles = total * ratio.numerator // ratio.denominator
    assert chip.voices[0].phase == (freq * cycles) & PHASE_MASK


def test_render_chunking_invariance():
    # Rendering in odd-sized chunks must be bit-identical to one shot.
    one = make_chip()
    gate_on_voice(one, freq=12345, waveform=0x40)
    one.poke(2, 0x22)
    one.poke(3, 0x03)
    whole = one.render(30000)

    two = make_chip()
    gate_on_voice(two, freq=12345, waveform=0x40)
    two.poke(2, 0x22)
    two.poke(3, 0x03)
    pieces = []
    sizes = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    remaining = 30000
    i = 0
    while remaining:
        n = min(sizes[i % len(sizes)], remaining)
        pieces.append(two.render(n))
        remaining -= n
        i += 1
    assert np.array_equal(whole, np.concatenate(pieces))


def test_voice_sample_advances_one_sample():
    chip = make_chip()
    gate_on_voice(chip, freq=7493, waveform=0x20)
    ref = make_chip()
    gate_on_voice(ref, freq=7493, waveform=0x20)
    block = ref.render(16) / (0.5 / 3)  # undo line-level staging
    singles = [chip.voice_sample(0) for _ in range(16)]
    assert np.allclose(singles, block, atol=1e-12)
