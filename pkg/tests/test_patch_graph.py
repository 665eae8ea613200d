"""Graph validation diagnostics, deterministic scheduling, mutation rejection."""

import numpy as np
import pytest

from sidpatch.patch.graph import (Diagnostic, PatchError, has_errors,
                                  parse_patch, schedule, validate)

REFERENCE_PATCH = """\
module pre preamp gain=30
module ef envfollower attack=0.2ms release=20ms
module cmp comparator
module sh samplehold
module filt vcf cutoff=300 q=2 cv_scale=0.5
connect sid.audio -> pre.in
connect pre.out -> ef.in
connect ef.cv -> cmp.in
connect cmp.gate -> sh.gate
connect pre.out -> sh.in
connect pre.out -> filt.in
connect sh.out -> filt.cv
output left filt.lp
"""


def test_reference_patch_validates_clean():
    graph = parse_patch(REFERENCE_PATCH)
    assert validate(graph) == []


def test_multiple_drivers_flagged():
    graph = parse_patch(
        "module ef1 envfollower\nmodule p preamp\n"
        "connect sid.audio -> ef1.in\nconnect p.out -> ef1.in\n"
        "connect sid.audio -> p.in\noutput left ef1.cv\n")
    diags = validate(graph)
    assert any(d.code == "multiple-drivers" and d.severity == "error" for d in diags)


def test_delay_free_cycle_flagged():
    graph = parse_patch(
        "module vco1 vco\nmodule vcf1 vcf\n"
        "connect vco1.saw -> vcf1.in\nconnect vcf1.lp -> vco1.fm\n"
        "output left vcf1.lp\n")
    diags = validate(graph)
    cycle = [d for d in diags if d.code == "delay-free-cycle"]
    assert cycle and cycle[0].severity == "error"
    assert "vco1" in cycle[0].message and "vcf1" in cycle[0].message


def test_delay_breaks_cycle():
    graph = parse_patch(
        "module vco1 vco\nmodule vcf1 vcf\nmodule d delay\n"
        "connect vco1.saw -> vcf1.in\nconnect vcf1.lp -> d.in\n"
        "connect d.out -> vco1.fm\noutput left vcf1.lp\n")
    assert not has_errors(validate(graph))
    order = schedule(graph)
    assert order.index("vco1") < order.index("vcf1")


def test_unconnected_input_is_warning_only():
    graph = parse_patch("module p preamp\noutput left p.out\n")
    diags = validate(graph)
    assert not has_errors(diags)
    assert any(d.code == "unconnected-input" for d in diags)


def test_missing_output_binding_warns():
    graph = parse_patch("module p preamp\nconnect sid.audio -> p.in\n")
    diags = validate(graph)
    assert any(d.code == "no-output" for d in diags)
    assert not has_errors(diags)


def test_schedule_chain_order():
    graph = parse_patch(
        "module pre preamp\nmodule ef envfollower\nmodule sh samplehold\n"
        "connect sid.audio -> pre.in\nconnect pre.out -> ef.in\n"
        "connect ef.cv -> sh.in\noutput left sh.out\n")
    assert schedule(graph) == ["sid", "pre", "ef", "sh"]


def test_schedule_independent_chains_interleave_by_name():
    graph = parse_patch(
        "module alpha preamp\nmodule beta offset\n"
        "module gamma preamp\nmodule zeta offset\n"
        "connect sid.audio -> alpha.in\nconnect alpha.out -> zeta.in\n"
        "connect sid.audio -> gamma.in\nconnect gamma.out -> beta.in\n"
        "output left zeta.out\n")
    order = schedule(graph)
    assert order == ["sid", "alpha", "gamma", "beta", "zeta"]
    # deterministic across calls
    assert order == schedule(graph)


def test_schedule_with_delay_closed_cycle_succeeds():
    graph = parse_patch(
        "module m mixer gains=1,0.9\nmodule d delay\n"
        "connect sid.audio -> m.in1\nconnect m.out -> d.in\n"
        "connect d.out -> m.in2\noutput left m.out\n")
    assert not has_errors(validate(graph))
    order = schedule(graph)
    assert set(order) == {"sid", "m", "d"}
    # delay output is a boundary value, so the mixer may run before the delay
    assert order.index("m") < order.index("d")


def test_schedule_raises_on_delay_free_cycle():
    graph = parse_patch(
        "module a offset\nmodule b offset\n"
        "connect a.out -> b.in\nconnect b.out -> a.in\noutput left a.out\n")
    with pytest.raises(PatchError):
        schedule(graph)


# -- random valid graphs, mutated to invalid ---------------------------------

_CHAIN_KINDS = ("preamp", "offset", "vca")


def _random_chain_patch(rng, include_delay=False):
    length = int(rng.integers(3, 7))
    kinds = [str(rng.choice(_CHAIN_KINDS)) for _ in range(length)]
    if include_delay:
        kinds[int(rng.integers(0, length))] = "delay"
    lines = []
    names = []
    for i, kind in enumerate(kinds):
        name = f"n{i}"
        names.append(name)
        lines.append(f"module {name} {kind}")
    lines.append(f"connect sid.audio -> {names[0]}.in")
    for a, b in zip(names, names[1:]):
        src_port = "out"
        lines.append(f"connect {a}.{src_port} -> {b}.in")
    lines.append(f"output left {names[-1]}.out")
    return "\n".join(lines) + "\n", names, kinds


def test_validator_rejects_mutations_of_random_valid_graphs():
    rng = np.random.default_rng(31415)
    for trial in range(50):
        text, names, kinds = _random_chain_patch(rng, include_delay=bool(trial % 2))
        base = parse_patch(text)
        assert not has_errors(validate(base)), text

        # mutation 1: second driver onto an already-driven input
        victim = str(rng.choice(names))
        extra_driver = "sid.audio"
        mutated = parse_patch(text + f"connect {extra_driver} -> {victim}.in\n")
        diags = validate(mutated)
        assert any(d.code == "multiple-drivers" for d in diags), text

        # mutation 2: back edge creating a delay-free cycle (use a chain
        # without delay nodes so any back edge qualifies); vca.cv is a free
        # input on every vca node
        text2, names2, kinds2 = _random_chain_patch(rng, include_delay=False)
        vca_positions = [i for i, k in enumerate(kinds2) if k == "vca"]
        if not vca_positions:
            idx = int(rng.integers(0, len(names2)))
            text2 = text2.replace(f"module n{idx} {kinds2[idx]}", f"module n{idx} vca")
            vca_positions = [idx]
        i = vca_positions[0]
        j = int(rng.integers(i, len(names2)))
        mutated2 = parse_patch(text2 + f"connect n{j}.out -> n{i}.cv\n")
        diags2 = validate(mutated2)
        assert any(d.code == "delay-free-cycle" for d in diags2), text2
