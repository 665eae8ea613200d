"""DSP module kinds for the virtual patch.

Each kind declares its ports and parameters and implements two equivalent
paths: `step` processes one sample (the reference semantics, used for
feedback graphs) and `process` handles a whole block (vectorized where the
recurrence allows).  All outputs and internal voltage states clamp to the
+/-20 V safety rail, so finite inputs always produce finite outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CLAMP_VOLTS = 20.0
GATE_EDGE_VOLTS = 2.5  # sample-and-hold edge detector, half the default gate level


def _clampf(x: float) -> float:
    if x > CLAMP_VOLTS:
        return CLAMP_VOLTS
    if x < -CLAMP_VOLTS:
        return -CLAMP_VOLTS
    return x


def _clamp_array(x: np.ndarray) -> np.ndarray:
    return np.clip(x, -CLAMP_VOLTS, CLAMP_VOLTS)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    dimension: str  # ratio | volt | time | freq | bool | gainlist
    default: object
    doc: str = ""


class ModuleKind:
    """Base class: stateless parameter container plus the two process paths."""

    name = ""
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    param_specs: tuple[ParamSpec, ...] = ()
    doc = ""

    @classmethod
    def input_ports(cls, params: dict) -> tuple[str, ...]:
        return cls.inputs

    @classmethod
    def validate_params(cls, params: dict) -> str | None:
        """Return an error string for out-of-range parameter values."""
        return None

    def __init__(self, params: dict, sample_rate: float):
        self.params = dict(params)
        for spec in self.param_specs:
            self.params.setdefault(spec.name, spec.default)
        self.sample_rate = sample_rate
        self.dt = 1.0 / sample_rate
        self.prepare()

    def prepare(self) -> None:
        pass

    def step(self, ins: dict[str, float]) -> dict[str, float]:
        raise NotImplementedError

    def process(self, ins: dict[str, np.ndarray], n: int) -> dict[str, np.ndarray]:
        """Fallback block path: loop the scalar step."""
        outs = {port: np.empty(n) for port in self.outputs}
        ports = self.input_ports(self.params)
        for i in range(n):
            sample = {p: float(ins[p][i]) for p in ports}
            result = self.step(sample)
            for port in self.outputs:
                outs[port][i] = result[port]
        return outs


class Preamp(ModuleKind):
    name = "preamp"
    inputs = ("in",)
    outputs = ("out",)
    param_specs = (ParamSpec("gain", "ratio", 10.0, "voltage gain"),)
    doc = "Boosts line-level audio to modular level."

    def step(self, ins):
        return {"out": _clampf(ins["in"] * self.params["gain"])}

    def process(self, ins, n):
        return {"out": _clamp_array(ins["in"] * self.params["gain"])}


class EnvFollower(ModuleKind):
    name = "envfollower"
    inputs = ("in",)
    outputs = ("cv",)
    param_specs = (
        ParamSpec("attack", "time", 0.005, "smoothing time constant while rising"),
        ParamSpec("release", "time", 0.050, "smoothing time constant while falling"),
    )
    doc = "Full-wave rectifier plus asymmetric one-pole smoother: audio in, CV out."

    @classmethod
    def validate_params(cls, params):
        if params.get("attack", 1) <= 0 or params.get("release", 1) <= 0:
            return "attack and release must be positive"
        return None

    def prepare(self):
        self.cv = 0.0
        self._ka = 1.0 - math.exp(-self.dt / self.params["attack"])
        self._kr = 1.0 - math.exp(-self.dt / self.params["release"])

    def step(self, ins):
        rectified = abs(ins["in"])
        k = self._ka if rectified > self.cv else self._kr
        cv = self.cv + (rectified - self.cv) * k
        self.cv = min(max(cv, 0.0), CLAMP_VOLTS)
        return {"cv": self.cv}

    def process(self, ins, n):
        out = [0.0] * n
        cv = self.cv
        ka, kr = self._ka, self._kr
        for i, x in enumerate(ins["in"].tolist()):
            rectified = -x if x < 0.0 else x
            k = ka if rectified > cv else kr
            cv = cv + (rectified - cv) * k
            if cv < 0.0:
                cv = 0.0
            elif cv > CLAMP_VOLTS:
                cv = CLAMP_VOLTS
            out[i] = cv
        self.cv = cv
        return {"cv": np.array(out)}


class Comparator(ModuleKind):
    name = "comparator"
    inputs = ("in",)
    outputs = ("gate", "trigger")
    param_specs = (
        ParamSpec("threshold", "volt", 2.5, "rising-edge level"),
        ParamSpec("hysteresis", "volt", 0.5, "gate falls below threshold-hysteresis"),
        ParamSpec("gate_high", "volt", 5.0, "output level while high"),
        ParamSpec("trigger_len", "time", 0.001, "trigger pulse length"),
    )
    doc = "Extracts gate and trigger signals from a CV with hysteresis."

    @classmethod
    def validate_params(cls, params):
        if params.get("trigger_len", 1) <= 0:
            return "trigger_len must be positive"
        hyst = params.get("hysteresis", 0.5)
        thr = params.get("threshold", 2.5)
        if hyst >= thr:
            return "hysteresis must be smaller than threshold"
        return None

    def prepare(self):
        self.high = False
        self.trig_remaining = 0
        self._trig_samples = max(1, int(round(self.params["trigger_len"] * self.sample_rate)))

    def step(self, ins):
        x = ins["in"]
        thr = self.params["threshold"]
        if not self.high and x > thr:
            self.high = True
            self.trig_remaining = self._trig_samples
        elif self.high and x < thr - self.params["hysteresis"]:
            self.high = False
        level = self.params["gate_high"]
        gate = level if self.high else 0.0
        trigger = 0.0
        if self.trig_remaining > 0:
            trigger = level
            self.trig_remaining -= 1
        return {"gate": gate, "trigger": trigger}

    def process(self, ins, n):
        gate = [0.0] * n
        trig = [0.0] * n
        thr = self.params["threshold"]
        low = thr - self.params["hysteresis"]
        level = self.params["gate_high"]
        high = self.high
        remaining = self.trig_remaining
        trig_samples = self._trig_samples
        for i, x in enumerate(ins["in"].tolist()):
            if not high and x > thr:
                high = True
                remaining = trig_samples
            elif high and x < low:
                high = False
            if high:
                gate[i] = level
            if remaining > 0:
                trig[i] = level
                remaining -= 1
        self.high = high
        self.trig_remaining = remaining
        return {"gate": np.array(gate), "trigger": np.array(trig)}


class SampleHold(ModuleKind):
    name = "samplehold"
    inputs = ("in", "gate")
    outputs = ("out",)
    doc = "Captures the input on each gate rising edge and holds it."

    def prepare(self):
        self.value = 0.0
        self.prev_gate = 0.0

    def step(self, ins):
        gate = ins["gate"]
        if self.prev_gate < GATE_EDGE_VOLTS <= gate:
            self.value = _clampf(ins["in"])
        self.prev_gate = gate
        return {"out": self.value}

    def process(self, ins, n):
        out = [0.0] * n
        value = self.value
        prev = self.prev_gate
        xs = ins["in"].tolist()
        for i, gate in enumerate(ins["gate"].tolist()):
            if prev < GATE_EDGE_VOLTS <= gate:
                value = _clampf(xs[i])
            prev = gate
            out[i] = value
        self.value = value
        self.prev_gate = prev
        return {"out": np.array(out)}


class Vco(ModuleKind):
    name = "vco"
    inputs = ("voct", "fm")
    outputs = ("sine", "tri", "saw", "pulse")
    param_specs = (
        ParamSpec("f0", "freq", 440.0, "base frequency at 0 V"),
        ParamSpec("voct_enabled", "bool", True, "apply 1 V/octave input"),
        ParamSpec("fm_depth", "ratio", 0.0, "linear FM in Hz per volt"),
    )
    doc = "Oscillator with 1 V/octave pitch input and linear FM; +/-5 V outputs."

    @classmethod
    def validate_params(cls, params):
        if params.get("f0", 1) <= 0:
            return "f0 must be positive"
        return None

    def prepare(self):
        self.phase = 0.0

    def _freq(self, voct, fm):
        f0 = self.params["f0"]
        if self.params["voct_enabled"]:
            # exponent bounded so arbitrary finite CV cannot overflow
            f = f0 * 2.0 ** min(max(voct, -64.0), 64.0)
        else:
            f = f0
        f += self.params["fm_depth"] * fm
        return min(max(f, 0.0), 0.45 / self.dt)

    @staticmethod
    def _shapes(phase):
        sine = 5.0 * np.sin(2.0 * np.pi * phase)
        tri = 5.0 * (1.0 - 4.0 * np.abs(phase - 0.5))
        saw = 5.0 * (2.0 * phase - 1.0)
        pulse = np.where(phase < 0.5, 5.0, -5.0)
        return sine, tri, saw, pulse

    def step(self, ins):
        f = self._freq(ins["voct"], ins["fm"])
        phase = (self.phase + f * self.dt) % 1.0
        self.phase = phase
        return {
            "sine": 5.0 * math.sin(2.0 * math.pi * phase),
            "tri": 5.0 * (1.0 - 4.0 * abs(phase - 0.5)),
            "saw": 5.0 * (2.0 * phase - 1.0),
            "pulse": 5.0 if phase < 0.5 else -5.0,
        }

    def process(self, ins, n):
        f0 = self.params["f0"]
        if self.params["voct_enabled"]:
            f = f0 * np.exp2(np.clip(ins["voct"], -64.0, 64.0))
        else:
            f = np.full(n, f0)
        f = f + self.params["fm_depth"] * ins["fm"]
        np.clip(f, 0.0, 0.45 / self.dt, out=f)
        phase = (self.phase + np.cumsum(f * self.dt)) % 1.0
        self.phase = float(phase[-1])
        sine, tri, saw, pulse = self._shapes(phase)
        return {"sine": sine, "tri": tri, "saw": saw, "pulse": pulse}


class Vcf(ModuleKind):
    name = "vcf"
    inputs = ("in", "cv")
    outputs = ("lp", "bp", "hp")
    param_specs = (
        ParamSpec("cutoff", "freq", 1000.0, "cutoff at 0 V control"),
        ParamSpec("q", "ratio", 0.7, "resonance, 0.5..20"),
        ParamSpec("cv_scale", "ratio", 1.0, "octaves per control volt"),
    )
    doc = "State-variable filter; control voltage shifts the cutoff exponentially."

    @classmethod
    def validate_params(cls, params):
        if params.get("cutoff", 1) <= 0:
            return "cutoff must be positive"
        q = params.get("q", 0.7)
        if not 0.5 <= q <= 20.0:
            return "q must be within [0.5, 20]"
        return None

    def prepare(self):
        self.lp = 0.0
        self.bp = 0.0
        self._damp = 1.0 / self.params["q"]
        self._max_fc = 0.166 / self.dt

    def effective_cutoff(self, cv: float) -> float:
        exponent = min(max(self.params["cv_scale"] * cv, -64.0), 64.0)
        fc = self.params["cutoff"] * 2.0 ** exponent
        return min(max(fc, 1.0), self._max_fc)

    def step(self, ins):
        f = 2.0 * math.sin(math.pi * self.effective_cutoff(ins["cv"]) * self.dt)
        damp = self._damp
        lp = _clampf(self.lp + f * self.bp)
        hp = _clampf(ins["in"] - lp - damp * self.bp)
        bp = _clampf(self.bp + f * hp)
        self.lp = lp
        self.bp = bp
        return {"lp": lp, "bp": bp, "hp": hp}

    def process(self, ins, n):
        lp_out = [0.0] * n
        bp_out = [0.0] * n
        hp_out = [0.0] * n
        lp = self.lp
        bp = self.bp
        damp = self._damp
        cutoff = self.params["cutoff"]
        scale = self.params["cv_scale"]
        max_fc = self._max_fc
        dt = self.dt
        rail = CLAMP_VOLTS
        sin = math.sin
        pi = math.pi
        xs = ins["in"].tolist()
        for i, cv in enumerate(ins["cv"].tolist()):
            exponent = scale * cv
            if exponent > 64.0:
                exponent = 64.0
            elif exponent < -64.0:
                exponent = -64.0
            fc = cutoff * 2.0 ** exponent
            if fc < 1.0:
                fc = 1.0
            elif fc > max_fc:
                fc = max_fc
            f = 2.0 * sin(pi * fc * dt)
            lp = lp + f * bp
            if lp > rail:
                lp = rail
            elif lp < -rail:
                lp = -rail
            hp = xs[i] - lp - damp * bp
            if hp > rail:
                hp = rail
            elif hp < -rail:
                hp = -rail
            bp = bp + f * hp
            if bp > rail:
                bp = rail
            elif bp < -rail:
                bp = -rail
            lp_out[i] = lp
            bp_out[i] = bp
            hp_out[i] = hp
        self.lp = lp
        self.bp = bp
        return {"lp": np.array(lp_out), "bp": np.array(bp_out), "hp": np.array(hp_out)}


class Vca(ModuleKind):
    name = "vca"
    inputs = ("in", "cv")
    outputs = ("out",)
    doc = "Voltage-controlled amplifier: 5 V control = unity, negative control mutes."

    def step(self, ins):
        gain = max(ins["cv"], 0.0) / 5.0
        return {"out": _clampf(ins["in"] * gain)}

    def process(self, ins, n):
        gain = np.maximum(ins["cv"], 0.0) / 5.0
        return {"out": _clamp_array(ins["in"] * gain)}


class RingMod(ModuleKind):
    name = "ringmod"
    inputs = ("a", "b")
    outputs = ("out",)
    doc = "Four-quadrant multiplier normalized so 5 V x 5 V = 5 V."

    def step(self, ins):
        return {"out": _clampf(ins["a"] * ins["b"] / 5.0)}

    def process(self, ins, n):
        return {"out": _clamp_array(ins["a"] * ins["b"] / 5.0)}


class Mixer(ModuleKind):
    name = "mixer"
    outputs = ("out",)
    param_specs = (ParamSpec("gains", "gainlist", (1.0,), "per-input gains; sets the input count"),)
    doc = "Weighted sum; inputs in1..inN from the gains list."

    @classmethod
    def input_ports(cls, params):
        gains = params.get("gains", (1.0,))
        return tuple(f"in{i + 1}" for i in range(len(gains)))

    @classmethod
    def validate_params(cls, params):
        if len(params.get("gains", (1.0,))) < 1:
            return "mixer needs at least one input"
        return None

    def step(self, ins):
        total = 0.0
        for i, g in enumerate(self.params["gains"]):
            total += g * ins[f"in{i + 1}"]
        return {"out": _clampf(total)}

    def process(self, ins, n):
        total = np.zeros(n)
        for i, g in enumerate(self.params["gains"]):
            total += g * ins[f"in{i + 1}"]
        return {"out": _clamp_array(total)}


class Offset(ModuleKind):
    name = "offset"
    inputs = ("in",)
    outputs = ("out",)
    param_specs = (
        ParamSpec("add", "volt", 0.0, "constant added after scaling"),
        ParamSpec("mul", "ratio", 1.0, "input scale factor"),
    )
    doc = "Attenuator/offset: out = in x mul + add."

    def step(self, ins):
        return {"out": _clampf(ins["in"] * self.params["mul"] + self.params["add"])}

    def process(self, ins, n):
        return {"out": _clamp_array(ins["in"] * self.params["mul"] + self.params["add"])}


class Delay(ModuleKind):
    name = "delay"
    inputs = ("in",)
    outputs = ("out",)
    doc = "One-sample delay; required inside every feedback loop."

    def prepare(self):
        self.value = 0.0

    def step(self, ins):
        out = self.value
        self.value = _clampf(ins["in"])
        return {"out": out}

    def process(self, ins, n):
        data = _clamp_array(ins["in"])
        out = np.concatenate(([self.value], data[:-1]))
        self.value = float(data[-1])
        return {"out": out}


KINDS: dict[str, type[ModuleKind]] = {
    kind.name: kind
    for kind in (Preamp, EnvFollower, Comparator, SampleHold, Vco, Vcf, Vca,
                 RingMod, Mixer, Offset, Delay)
}

SID_NODE = "sid"
SID_PORT = "audio"
