"""Register-level model of the C64 sound chip: three voices (phase-accumulator
oscillator + ADSR), multimode filter, master volume, rendered to line-level volts.

The chip is byte-addressed through 29 registers mapped at base address 54272.
Rendering is block-based and deterministic: registers are fixed within a block
(writes happen between `render` calls), phase accumulators advance in exact
integer arithmetic mod 2^24, and chip cycles per audio sample are tracked as an
exact rational so chunked rendering equals single-shot rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

BASE_ADDRESS = 54272
NUM_REGISTERS = 29

PHASE_MASK = 0xFFFFFF  # 24-bit phase accumulator

# Control register bits (voice offset +4).
GATE = 0x01
SYNC = 0x02
RING_MOD = 0x04
TEST = 0x08
TRIANGLE = 0x10
SAWTOOTH = 0x20
PULSE = 0x40
NOISE = 0x80

# Filter mode / volume register bits (offset 24).
MODE_LP = 0x10
MODE_BP = 0x20
MODE_HP = 0x40
VOICE3_OFF = 0x80

# Full-scale envelope segment durations, indexed by register nibble.  Stored in
# integer milliseconds so the decay/release = 3 x attack relation is exact.
ATTACK_MS = (2, 8, 16, 24, 38, 56, 68, 80, 100, 250, 500, 800, 1000, 3000, 5000, 8000)
DECAY_RELEASE_MS = tuple(3 * ms for ms in ATTACK_MS)

# 23-bit noise shift register: feedback x^23 + x^18 + 1, clocked on rising
# edges of phase accumulator bit 19.
LFSR_RESET = 0x7FFFF8
LFSR_MASK = 0x7FFFFF
_NOISE_TAPS = (22, 20, 16, 13, 11, 7, 4, 2)  # bits assembled into the output byte

# Hard sync / ring mod pairing: voice i is modulated by _MODULATOR[i].
_MODULATOR = (2, 0, 1)


class SidRangeError(ValueError):
    """Register offset or value outside its documented range."""


def envelope_time(nibble: int, stage: str) -> float:
    """Full-scale segment duration in seconds for an envelope rate nibble.

    `stage` is "attack" or "decay_release"; decay and release share one table.
    """
    if not 0 <= nibble <= 15:
        raise SidRangeError(f"envelope nibble {nibble} out of range 0..15")
    if stage == "attack":
        return ATTACK_MS[nibble] / 1000.0
    if stage == "decay_release":
        return DECAY_RELEASE_MS[nibble] / 1000.0
    raise ValueError(f"unknown envelope stage {stage!r}")


@dataclass(frozen=True)
class SidConfig:
    sample_rate_hz: float
    clock_hz: float = 985248.0  # PAL chip clock
    line_level_volts: float = 0.5  # peak volts at full-scale output

    def __post_init__(self):
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")
        if self.sample_rate_hz < 8000:
            raise ValueError("sample_rate_hz must be at least 8000")
        if self.line_level_volts <= 0:
            raise ValueError("line_level_volts must be positive")


class Envelope:
    """Linear-segment ADSR driven by the gate bit.

    Attack ramps the level to 1.0 over the attack table duration, decay ramps
    down to sustain_nibble/15, release ramps to 0.  The level stays in [0, 1]
    after every step.

    Ramps are anchored: within a stage the level after k steps is
    entry_level +/- k x (dt/duration), one multiply per sample, so stepping
    one sample at a time and rendering a whole block produce bit-identical
    values and chunked rendering matches single-shot rendering exactly.  The
    step interval is assumed uniform within a stage (the envelope is sample
    clocked); register writes and gate edges re-anchor the ramp.
    """

    __slots__ = ("stage", "level", "attack_nibble", "decay_nibble",
                 "sustain_nibble", "release_nibble", "_entry", "_steps")

    def __init__(self):
        self.stage = "idle"
        self.level = 0.0
        self.attack_nibble = 0
        self.decay_nibble = 0
        self.sustain_nibble = 0
        self.release_nibble = 0
        self._entry = 0.0
        self._steps = 0

    def _anchor(self) -> None:
        self._entry = self.level
        self._steps = 0

    def gate_on(self):
        self.stage = "attack"
        self._anchor()

    def gate_off(self):
        self.stage = "release"
        self._anchor()

    def set_attack_decay(self, attack_nibble: int, decay_nibble: int):
        self.attack_nibble = attack_nibble
        self.decay_nibble = decay_nibble
        self._anchor()

    def set_sustain_release(self, sustain_nibble: int, release_nibble: int):
        self.sustain_nibble = sustain_nibble
        self.release_nibble = release_nibble
        if self.stage == "sustain":
            self.level = sustain_nibble / 15.0
        self._anchor()

    def step(self, dt: float) -> None:
        """Advance one sample of `dt` seconds (dt must be in (0, 1 ms])."""
        if not 0.0 < dt <= 1e-3:
            raise ValueError("envelope step dt must be in (0, 1 ms]")
        stage = self.stage
        if stage == "idle":
            return
        if stage == "sustain":
            self.level = self.sustain_nibble / 15.0
            return
        self._steps += 1
        if stage == "attack":
            value = self._entry + self._steps * (dt / envelope_time(self.attack_nibble, "attack"))
            if value >= 1.0:
                self.level = 1.0
                self.stage = "decay"
                self._anchor()
            else:
                self.level = value
        elif stage == "decay":
            sustain = self.sustain_nibble / 15.0
            value = self._entry - self._steps * (dt / envelope_time(self.decay_nibble, "decay_release"))
            if value <= sustain:
                self.level = sustain
                self.stage = "sustain"
                self._anchor()
            else:
                self.level = value
        else:  # release
            value = self._entry - self._steps * (dt / envelope_time(self.release_nibble, "decay_release"))
            if value <= 0.0:
                self.level = 0.0
                self.stage = "idle"
                self._anchor()
            else:
                self.level = value

    def trajectory(self, n: int, dt: float) -> np.ndarray:
        """Levels after each of `n` steps, advancing this envelope in place.

        Produces exactly the values repeated `step` calls would, one stage
        segment at a time.
        """
        out = np.empty(n)
        i = 0
        while i < n:
            stage = self.stage
            if stage == "idle":
                out[i:] = self.level
                break
            if stage == "sustain":
                self.level = self.sustain_nibble / 15.0
                out[i:] = self.level
                break
            if stage == "attack":
                rate = dt / envelope_time(self.attack_nibble, "attack")
                limit, sign, next_stage = 1.0, 1.0, "decay"
            elif stage == "decay":
                rate = dt / envelope_time(self.decay_nibble, "decay_release")
                limit, sign, next_stage = self.sustain_nibble / 15.0, -1.0, "sustain"
            else:
                rate = dt / envelope_time(self.release_nibble, "decay_release")
                limit, sign, next_stage = 0.0, -1.0, "idle"
            steps = self._steps + np.arange(1, n - i + 1)
            values = self._entry + sign * (steps * rate)
            done = values >= limit if sign > 0 else values <= limit
            if not done.any():
                out[i:] = values
                self._steps += n - i
                self.level = float(values[-1])
                break
            j = int(np.argmax(done))
            out[i:i + j] = values[:j]
            out[i + j] = limit
            self.level = limit
            self.stage = next_stage
            self._anchor()
            i += j + 1
        return out


class Voice:
    """One oscillator voice: 24-bit phase accumulator, waveform selector,
    noise shift register, and ADSR envelope."""

    __slots__ = ("freq", "pulse_width", "control", "phase", "lfsr", "env")

    def __init__(self):
        self.freq = 0          # 16-bit frequency register
        self.pulse_width = 0   # 12-bit pulse width register
        self.control = 0
        self.phase = 0         # 24-bit accumulator
        self.lfsr = LFSR_RESET
        self.env = Envelope()

    def set_control(self, value: int):
        old = self.control
        self.control = value
        if value & GATE and not old & GATE:
            self.env.gate_on()
        elif old & GATE and not value & GATE:
            self.env.gate_off()
        if value & TEST:
            self.phase = 0

    def noise_byte(self) -> int:
        bits = self.lfsr
        byte = 0
        for tap in _NOISE_TAPS:
            byte = (byte << 1) | ((bits >> tap) & 1)
        return byte

    def clock_lfsr(self) -> None:
        new_bit = ((self.lfsr >> 22) ^ (self.lfsr >> 17)) & 1
        self.lfsr = ((self.lfsr << 1) | new_bit) & LFSR_MASK


def _tri12(phase):
    """Triangle pattern on a 12-bit scale: rises 0..4095 then falls back."""
    folded = np.bitwise_xor(phase, np.where(phase & 0x800000, PHASE_MASK, 0))
    return (folded >> 11) & 0xFFF


def _sine12(phase):
    level = (np.sin(2.0 * np.pi * phase / float(1 << 24)) + 1.0) / 2.0
    return np.rint(level * 4095.0).astype(np.int64)


def _bipolar(pattern12):
    return pattern12 / 4095.0 * 2.0 - 1.0


def _odd_half_megacount(x):
    """Count of odd multiples of 2^19 that are <= x (vectorized)."""
    return ((x >> 19) + 1) >> 1


class FilterUnit:
    """Two-integrator state-variable filter with LP/BP/HP mode mixing.

    The cutoff register maps linearly to Hz (30 + 5.8/step) and is clamped to
    [30 Hz, sample_rate/6] to keep the recurrence stable; the resonance nibble
    maps linearly to Q in [0.7, 10].
    """

    __slots__ = ("cutoff", "resonance", "routing", "mode", "lp", "bp")

    def __init__(self):
        self.cutoff = 0     # 11-bit register
        self.resonance = 0  # 4-bit register
        self.routing = 0    # filt1/filt2/filt3 bits
        self.mode = 0       # MODE_LP | MODE_BP | MODE_HP
        self.lp = 0.0
        self.bp = 0.0

    def _coefficients(self, sample_rate: float) -> tuple[float, float]:
        fc = 30.0 + 5.8 * self.cutoff
        fc = min(max(fc, 30.0), sample_rate / 6.0)
        f = 2.0 * math.sin(math.pi * fc / sample_rate)
        q = 0.7 + self.resonance * (9.3 / 15.0)
        return f, 1.0 / q

    def step(self, x: float, sample_rate: float) -> float:
        """Filter a single sample; with no mode bits set the input passes through."""
        if not self.mode & (MODE_LP | MODE_BP | MODE_HP):
            return x
        f, damp = self._coefficients(sample_rate)
        self.lp = self.lp + f * self.bp
        hp = x - self.lp - damp * self.bp
        self.bp = self.bp + f * hp
        y = 0.0
        if self.mode & MODE_LP:
            y += self.lp
        if self.mode & MODE_BP:
            y += self.bp
        if self.mode & MODE_HP:
            y += hp
        return y

    def process_block(self, x: np.ndarray, sample_rate: float) -> np.ndarray:
        if not self.mode & (MODE_LP | MODE_BP | MODE_HP):
            return x
        f, damp = self._coefficients(sample_rate)
        lp = self.lp
        bp = self.bp
        lp_on = bool(self.mode & MODE_LP)
        bp_on = bool(self.mode & MODE_BP)
        hp_on = bool(self.mode & MODE_HP)
        out = [0.0] * len(x)
        for i, s in enumerate(x.tolist()):
            lp = lp + f * bp
            hp = s - lp - damp * bp
            bp = bp + f * hp
            y = 0.0
            if lp_on:
                y += lp
            if bp_on:
                y += bp
            if hp_on:
                y += hp
            out[i] = y
        self.lp = lp
        self.bp = bp
        return np.array(out)


class SidChip:
    """The full chip: 29-byte register file, three voices, filter, volume.

    `poke`/`peek` implement the byte-addressed register contract; `render`
    produces line-level output in volts and advances all internal state.
    """

    def __init__(self, config: SidConfig):
        self.config = config
        self.regs = bytearray(NUM_REGISTERS)
        self.voices = [Voice() for _ in range(3)]
        self.filter = FilterUnit()
        self.samples_emitted = 0
        ratio = Fraction(config.clock_hz / config.sample_rate_hz)
        ratio = ratio.limit_denominator(1 << 20)
        self._cyc_num = ratio.numerator
        self._cyc_den = ratio.denominator

    # -- register file ----------------------------------------------------

    def poke(self, offset: int, value: int) -> None:
        if not 0 <= offset <= 28:
            raise SidRangeError(f"register offset {offset} out of range 0..28")
        if not 0 <= value <= 255:
            raise SidRangeError(f"register value {value} out of range 0..255")
        if offset > 24:
            return  # offsets 25..28 ignore writes
        self.regs[offset] = value
        if offset <= 20:
            voice = self.voices[offset // 7]
            reg = offset % 7
            if reg == 0:
                voice.freq = (voice.freq & 0xFF00) | value
            elif reg == 1:
                voice.freq = (voice.freq & 0x00FF) | (value << 8)
            elif reg == 2:
                voice.pulse_width = (voice.pulse_width & 0xF00) | value
            elif reg == 3:
                voice.pulse_width = (voice.pulse_width & 0x0FF) | ((value & 0x0F) << 8)
            elif reg == 4:
                voice.set_control(value)
            elif reg == 5:
                voice.env.set_attack_decay(value >> 4, value & 0x0F)
            else:
                voice.env.set_sustain_release(value >> 4, value & 0x0F)
        elif offset == 21:
            self.filter.cutoff = (self.filter.cutoff & 0x7F8) | (value & 0x07)
        elif offset == 22:
            self.filter.cutoff = (self.filter.cutoff & 0x007) | (value << 3)
        elif offset == 23:
            self.filter.resonance = value >> 4
            self.filter.routing = value & 0x07
        else:  # offset 24
            self.filter.mode = value & (MODE_LP | MODE_BP | MODE_HP)

    def peek(self, offset: int) -> int:
        if not 0 <= offset <= 28:
            raise SidRangeError(f"register offset {offset} out of range 0..28")
        if offset == 27:
            norm = (self._waveform_value(2) + 1.0) / 2.0
            return min(255, int(norm * 255.0))
        if offset == 28:
            return min(255, int(self.voices[2].env.level * 255.0))
        return self.regs[offset]

    # -- rendering ---------------------------------------------------------

    @property
    def master_volume(self) -> int:
        return self.regs[24] & 0x0F

    @property
    def voice3_off(self) -> bool:
        return bool(self.regs[24] & VOICE3_OFF)

    def _cycles_at(self, samples: int) -> int:
        return samples * self._cyc_num // self._cyc_den

    def voice_sample(self, voice_index: int) -> float:
        """Advance the whole chip by one sample and return that voice's
        envelope-scaled waveform value (line-level staging not applied)."""
        outs = self._render_voices(1)
        return float(outs[voice_index][0])

    def render(self, n: int) -> np.ndarray:
        """Render `n` line-level samples (volts) and advance all state."""
        if n < 0:
            raise ValueError("sample count must be non-negative")
        if n == 0:
            return np.zeros(0)
        voice_out = self._render_voices(n)
        vol = self.master_volume
        routing = self.filter.routing
        bypass = np.zeros(n)
        routed = np.zeros(n)
        any_routed = False
        for i in range(3):
            if i == 2 and self.voice3_off:
                continue
            if routing & (1 << i):
                routed += voice_out[i]
                any_routed = True
            else:
                bypass += voice_out[i]
        if any_routed:
            bypass = bypass + self.filter.process_block(routed, self.config.sample_rate_hz)
        scale = (vol / 15.0) * (self.config.line_level_volts / 3.0)
        return bypass * scale

    def _render_voices(self, n: int) -> list[np.ndarray]:
        """Per-voice envelope-scaled waveform arrays; advances all voice state."""
        start = self.samples_emitted
        num, den = self._cyc_num, self._cyc_den
        prev_cycles = start * num // den
        abs_cycles = (start + np.arange(1, n + 1, dtype=np.int64)) * num // den
        dcycles = np.diff(abs_cycles, prepend=prev_cycles)

        # Pass 1: free-running phase trajectories and wrap instants.
        free_phase = []
        wraps = []
        for voice in self.voices:
            if voice.control & TEST:
                free_phase.append(np.zeros(n, dtype=np.int64))
                wraps.append(np.zeros(n, dtype=bool))
                continue
            unwrapped = voice.phase + voice.freq * (abs_cycles - prev_cycles)
            prev_hi = np.concatenate(([voice.phase >> 24], unwrapped[:-1] >> 24))
            wraps.append((unwrapped >> 24) > prev_hi)
            free_phase.append(unwrapped & PHASE_MASK)

        # Pass 2: apply hard sync (reset to 0 at each modulator wrap instant).
        final_phase = []
        for i, voice in enumerate(self.voices):
            phase = free_phase[i]
            if voice.control & SYNC and not voice.control & TEST:
                mod_wraps = wraps[_MODULATOR[i]]
                if mod_wraps.any():
                    idx = np.arange(n, dtype=np.int64)
                    last = np.maximum.accumulate(np.where(mod_wraps, idx, -1))
                    rel = abs_cycles - abs_cycles[np.maximum(last, 0)]
                    phase = np.where(last >= 0, (voice.freq * rel) & PHASE_MASK, phase)
            final_phase.append(phase)

        dt = 1.0 / self.config.sample_rate_hz
        outs = []
        for i, voice in enumerate(self.voices):
            pattern = self._waveform_block(i, final_phase, dcycles)
            env = voice.env.trajectory(n, dt)
            if pattern is None:
                outs.append(np.zeros(n))
            else:
                outs.append(_bipolar(pattern) * env)
            voice.phase = int(final_phase[i][-1])
        self.samples_emitted += n
        return outs

    def _noise_block(self, voice: Voice, phase: np.ndarray, dcycles: np.ndarray) -> np.ndarray:
        """12-bit noise pattern per sample, clocking the shift register on
        rising edges of phase bit 19."""
        starts = np.concatenate(([voice.phase], phase[:-1]))
        travel = voice.freq * dcycles
        # A sync reset discards the in-sample traversal; no edges are counted there.
        reset = phase != (starts + travel) & PHASE_MASK
        travel = np.where(reset, 0, travel)
        counts = _odd_half_megacount(starts + travel) - _odd_half_megacount(starts)
        cum = np.cumsum(counts)
        total = int(cum[-1])
        seq = np.empty(total + 1, dtype=np.int64)
        seq[0] = voice.noise_byte()
        for j in range(total):
            voice.clock_lfsr()
            seq[j + 1] = voice.noise_byte()
        bytes_per_sample = seq[cum]
        return (bytes_per_sample << 4) | (bytes_per_sample >> 4)

    def _waveform_block(self, index: int, phases: list[np.ndarray],
                        dcycles: np.ndarray):
        """Combined 12-bit waveform pattern for one voice, or None if no
        waveform bit is selected (output is then exactly zero)."""
        voice = self.voices[index]
        control = voice.control
        phase = phases[index]
        patterns = []
        tri_on = control & TRIANGLE
        saw_on = control & SAWTOOTH
        if tri_on and saw_on:
            # Combined triangle+sawtooth selects the sine generator.
            patterns.append(_sine12(phase))
        elif tri_on:
            tri = _tri12(phase)
            if control & RING_MOD:
                mod_tri = _bipolar(_tri12(phases[_MODULATOR[index]]))
                sign = np.where(mod_tri >= 0.0, 1.0, -1.0)
                ringed = _bipolar(tri) * sign
                tri = np.rint((ringed + 1.0) / 2.0 * 4095.0).astype(np.int64)
            patterns.append(tri)
        elif saw_on:
            patterns.append(phase >> 12)
        if control & PULSE:
            patterns.append(np.where((phase >> 12) < voice.pulse_width, 0xFFF, 0))
        if control & NOISE:
            patterns.append(self._noise_block(voice, phase, dcycles))
        if not patterns:
            return None
        out = patterns[0]
        for p in patterns[1:]:
            out = out & p
        return out

    def _waveform_value(self, index: int) -> float:
        """Current bipolar waveform value of one voice without advancing state
        (drives the live oscillator read-back register)."""
        voice = self.voices[index]
        control = voice.control
        phase = np.array([voice.phase], dtype=np.int64)
        patterns = []
        tri_on = control & TRIANGLE
        saw_on = control & SAWTOOTH
        if tri_on and saw_on:
            patterns.append(_sine12(phase))
        elif tri_on:
            tri = _tri12(phase)
            if control & RING_MOD:
                mod = self.voices[_MODULATOR[index]]
                mod_tri = _bipolar(_tri12(np.array([mod.phase], dtype=np.int64)))
                sign = np.where(mod_tri >= 0.0, 1.0, -1.0)
                tri = np.rint((_bipolar(tri) * sign + 1.0) / 2.0 * 4095.0).astype(np.int64)
            patterns.append(tri)
        elif saw_on:
            patterns.append(phase >> 12)
        if control & PULSE:
            patterns.append(np.where((phase >> 12) < voice.pulse_width, 0xFFF, 0))
        if control & NOISE:
            byte = voice.noise_byte()
            patterns.append(np.array([(byte << 4) | (byte >> 4)], dtype=np.int64))
        if not patterns:
            return 0.0
        out = patterns[0]
        for p in patterns[1:]:
            out = out & p
        return float(_bipolar(out)[0])
