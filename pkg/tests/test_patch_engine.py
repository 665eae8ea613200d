"""Graph evaluation: identity, probes, feedback semantics, order independence."""

import numpy as np
import pytest

from sidpatch.patch.engine import process_block
from sidpatch.patch.graph import PatchError, parse_patch, schedule, validate


def test_identity_patch_left_equals_source():
    graph = parse_patch("output left sid.audio\n")
    audio = np.sin(np.linspace(0, 20, 1000))
    result = process_block(graph, schedule(graph), audio, 1000, 44100.0)
    assert np.array_equal(result.left, audio)
    assert result.right is None


def test_probe_buffers_have_render_length():
    graph = parse_patch(
        "module ef envfollower\nconnect sid.audio -> ef.in\n"
        "probe ef.cv as env\noutput left ef.cv\n")
    result = process_block(graph, schedule(graph), np.ones(777), 777, 44100.0)
    assert len(result.traces["env"]) == 777


def test_unconnected_inputs_read_zero_volts():
    graph = parse_patch("module m mixer gains=1,1\nconnect sid.audio -> m.in1\n"
                        "output left m.out\n")
    audio = np.linspace(-1, 1, 100)
    result = process_block(graph, schedule(graph), audio, 100, 44100.0)
    assert np.allclose(result.left, audio)


def test_stereo_outputs():
    graph = parse_patch(
        "module p preamp gain=2\nconnect sid.audio -> p.in\n"
        "output left sid.audio\noutput right p.out\n")
    audio = np.linspace(-1, 1, 64)
    result = process_block(graph, schedule(graph), audio, 64, 44100.0)
    assert np.array_equal(result.left, audio)
    assert np.allclose(result.right, 2 * audio)


def test_engine_rejects_invalid_graph():
    graph = parse_patch("module a offset\nmodule b offset\n"
                        "connect a.out -> b.in\nconnect b.out -> a.in\n")
    with pytest.raises(PatchError):
        process_block(graph, ["sid", "a", "b"], np.zeros(10), 10, 44100.0)


def test_buffer_shorter_than_n_rejected():
    graph = parse_patch("output left sid.audio\n")
    with pytest.raises(ValueError):
        process_block(graph, schedule(graph), np.zeros(5), 10, 44100.0)


def test_delay_feedback_matches_hand_computed_recurrence():
    # y[n] = x[n] + 0.5 y[n-1], built from mixer + delay.
    graph = parse_patch(
        "module m mixer gains=1,0.5\nmodule d delay\n"
        "connect sid.audio -> m.in1\nconnect m.out -> d.in\n"
        "connect d.out -> m.in2\noutput left m.out\n")
    rng = np.random.default_rng(3)
    x = rng.normal(size=200)
    result = process_block(graph, schedule(graph), x, 200, 44100.0)
    expected = np.empty(200)
    acc = 0.0
    for i in range(200):
        acc = x[i] + 0.5 * acc
        expected[i] = acc
    assert np.allclose(result.left, expected, atol=1e-12)


def test_order_independence_among_valid_schedules():
    # Two independent chains; any topological order gives identical output.
    text = (
        "module a1 preamp gain=2\nmodule a2 offset add=1\n"
        "module b1 preamp gain=3\nmodule b2 offset add=-1\n"
        "connect sid.audio -> a1.in\nconnect a1.out -> a2.in\n"
        "connect sid.audio -> b1.in\nconnect b1.out -> b2.in\n"
        "module m mixer gains=1,1\n"
        "connect a2.out -> m.in1\nconnect b2.out -> m.in2\n"
        "output left m.out\nprobe a2.out as a\nprobe b2.out as b\n")
    graph = parse_patch(text)
    audio = np.sin(np.linspace(0, 30, 500))
    order1 = schedule(graph)
    order2 = ["sid", "b1", "b2", "a1", "a2", "m"]  # also topological
    r1 = process_block(graph, order1, audio, 500, 44100.0)
    r2 = process_block(graph, order2, audio, 500, 44100.0)
    assert np.array_equal(r1.left, r2.left)
    assert np.array_equal(r1.traces["a"], r2.traces["a"])


def test_order_independence_in_per_sample_mode():
    # A delay-closed loop forces per-sample mode, where the schedule order is
    # actually exercised; two valid orders must agree exactly.
    text = (
        "module m mixer gains=1,0.25\nmodule d delay\nmodule side preamp gain=2\n"
        "connect sid.audio -> m.in1\nconnect m.out -> d.in\n"
        "connect d.out -> m.in2\nconnect sid.audio -> side.in\n"
        "output left m.out\nprobe side.out as boosted\n")
    graph = parse_patch(text)
    audio = np.cos(np.linspace(0, 10, 300))
    base = schedule(graph)
    assert base == ["m", "sid", "d", "side"] or "m" in base
    alt = [n for n in ("sid", "side", "m", "d") ]
    r1 = process_block(graph, base, audio, 300, 44100.0)
    r2 = process_block(graph, alt, audio, 300, 44100.0)
    assert np.array_equal(r1.left, r2.left)
    assert np.array_equal(r1.traces["boosted"], r2.traces["boosted"])


def test_block_and_per_sample_modes_agree():
    # Same signal chain, once pure (block mode) and once with an unrelated
    # delay loop bolted on (forcing per-sample mode); the chain's output
    # must match within float tolerance.
    chain = (
        "module pre preamp gain=30\nmodule ef envfollower attack=1ms release=10ms\n"
        "module cmp comparator\nmodule sh samplehold\n"
        "connect sid.audio -> pre.in\nconnect pre.out -> ef.in\n"
        "connect ef.cv -> cmp.in\nconnect cmp.gate -> sh.gate\n"
        "connect pre.out -> sh.in\noutput left sh.out\nprobe cmp.gate as g\n")
    loop = ("module fb mixer gains=1,0.5\nmodule fd delay\n"
            "connect fb.out -> fd.in\nconnect fd.out -> fb.in2\n")
    g_block = parse_patch(chain)
    g_sample = parse_patch(chain + loop)
    rng = np.random.default_rng(8)
    t = np.arange(3000) / 44100.0
    audio = 0.17 * np.sign(np.sin(2 * np.pi * 440 * t)) * (t > 0.02)
    r_block = process_block(g_block, schedule(g_block), audio, 3000, 44100.0)
    r_sample = process_block(g_sample, schedule(g_sample), audio, 3000, 44100.0)
    assert np.allclose(r_block.left, r_sample.left, atol=1e-9)
    assert np.allclose(r_block.traces["g"], r_sample.traces["g"], atol=1e-9)


def test_sh_changes_align_with_comparator_edges_random_patterns():
    # Property: sample-and-hold output changes exactly at comparator rising
    # edges, for random gate-ish control signals.
    text = ("module cmp comparator\nmodule sh samplehold\n"
            "connect sid.audio -> cmp.in\nconnect cmp.gate -> sh.gate\n"
            "connect sid.audio -> sh.in\n"
            "probe cmp.gate as gate\nprobe sh.out as held\noutput left sh.out\n")
    graph = parse_patch(text)
    order = schedule(graph)
    rng = np.random.default_rng(99)
    for _ in range(100):
        n = 400
        # piecewise-constant random level signal with continuous jitter
        levels = rng.uniform(0, 5, size=8)
        signal = np.repeat(levels, n // 8)
        signal = signal + rng.uniform(-0.01, 0.01, size=n)
        result = process_block(graph, order, signal, n, 44100.0)
        gate = result.traces["gate"]
        held = result.traces["held"]
        rising = set((np.nonzero((gate[1:] > 0) & (gate[:-1] == 0))[0] + 1).tolist())
        if gate[0] > 0:
            rising.add(0)
        changes = set((np.nonzero(np.diff(held))[0] + 1).tolist())
        if held[0] != 0.0:
            changes.add(0)
        assert changes <= rising
        # a change happens at every edge whose captured value differs
        for edge in rising:
            prev = held[edge - 1] if edge else 0.0
            if signal[edge] != prev:
                assert edge in changes
