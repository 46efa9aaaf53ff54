import json
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from helpers import sample_mot, random_mot
from sffgen.ecc import ProtectionMethod as PM, error_state_count
from sffgen.optimizer import MergePlan, optimize
from sffgen.propgen import PropertyIR, generate_properties
from sffgen.refmodel import (MUTATION_CLASS, CheckBudget, CheckError, CheckReport,
                             ElaborationError, MutationError, MutationKind, Verdict,
                             check_all, check_property, elaborate, inject_mutation,
                             replay_trace, safety_case_count, step)
from sffgen.spec_model import Algorithm, PropertyClass as PC


def structure(alg=Algorithm.NONE, self_test=False, mot=None):
    mot = mot or sample_mot(alg)
    if self_test:
        mot = replace(mot, protections=tuple(replace(p, self_test=True)
                                             for p in mot.protections))
    plan = optimize(mot)
    return mot, plan, elaborate(mot, plan)


def test_elaborate_counts():
    _, _, s = structure()
    assert len(s.wrappers) == 3 and len(s.alarms) == 1 and s.controller is not None
    _, _, s = structure(Algorithm.ILP)
    assert [w.dw for w in s.wrappers] == [17, 17]
    empty = replace(sample_mot(), protections=())
    s = elaborate(empty, optimize(empty))
    assert s.wrappers == [] and s.alarms == [] and s.controller is not None


def test_elaborate_rejects_mismatched_plan():
    mot, plan, _ = structure(Algorithm.ILP)
    with pytest.raises(ElaborationError):
        elaborate(mot, MergePlan(plan.algorithm, plan.wrappers, plan.mapping[:-1]))


def test_one_alarm_per_clock_domain():
    mot = sample_mot()
    mot = replace(mot, protections=(replace(mot.protections[0], clock="clk2"),)
                  + mot.protections[1:])
    _, _, s = structure(mot=mot)
    assert [(a.domain, a.children) for a in s.alarms] == [
        ("clk", ("sff_wrapper_2", "sff_wrapper_3")), ("clk2", ("sff_wrapper_1",))]


def test_write_then_read():
    _, _, s = structure()
    s, _ = step(s, {"we": 1, "c_i": 0x2BCD_1234, "a_i": 3})
    s, out = step(s, {})
    assert out["c_o"] == 0x2BCD_1234 & (2**30 - 1)
    assert out["a_o"] == 3 and out["b_o"] == 0
    assert out["smu_err_o"] == 0


def test_single_fault_corrected():
    _, _, s = structure()
    s, _ = step(s, {"we": 1, "c_i": 12345})
    _, out = step(s, {"fault.sff_wrapper_3": 1 << 7})
    assert out["sff_wrapper_3.d_o"] == 12345
    assert out["sff_wrapper_3.err_o"] == 1 and out["sff_wrapper_3.cor_o"] == 1
    assert out["alarm.clk"] == 1 and out["smu_err_o"] == 1


def test_double_fault_detected_uncorrectable():
    _, _, s = structure()
    s, _ = step(s, {"we": 1, "a_i": 2})
    _, out = step(s, {"fault.sff_wrapper_1": 0b101})
    assert out["sff_wrapper_1.err_o"] == 1 and out["sff_wrapper_1.cor_o"] == 0


def test_reset_restores_reset_value():
    mot = sample_mot()
    mot = replace(mot, registers=(replace(mot.registers[0], reset_value=2),) + mot.registers[1:])
    _, _, s = structure(mot=mot)
    s, _ = step(s, {"we": 1, "a_i": 1})
    s, _ = step(s, {"rst_n": 0})
    _, out = step(s, {})
    assert out["a_o"] == 2


@pytest.mark.parametrize("alg", list(Algorithm))
@pytest.mark.parametrize("self_test", [False, True])
def test_all_generated_properties_pass(alg, self_test):
    mot, plan, s = structure(alg, self_test)
    budget = CheckBudget(samples=64)
    reports = check_all(s, generate_properties(mot, plan), budget)
    assert {r.verdict for r in reports} == {Verdict.PASS}, [
        r.property for r in reports if r.verdict is not Verdict.PASS]


def _prop(mot, plan, name):
    return next(p for p in generate_properties(mot, plan) if p.name == name)


def test_deleted_mapping_entry_fails_with_named_slice():
    mot, plan, s = structure(Algorithm.ILP)
    prop = _prop(mot, plan, "conn_top_input_safety_registers_optimized_2")
    for k in range(13):
        s.in_map.pop(("sff_wrapper_2", k))
    report = check_property(s, prop)
    assert report.verdict is Verdict.FAIL
    failing_term = prop.terms[dict(((sig, v) for _, sig, v in report.trace))["term"]]
    assert failing_term == "top.c_i[29:17] == sff_wrapper_2.d_i[12:0]"
    assert replay_trace(s, prop, report.trace) is Verdict.FAIL


def test_secded_three_fault_budget_fails():
    mot, plan, s = structure()
    prop = _prop(mot, plan, "fault_injection_sff_wrapper_1")
    assert check_property(s, prop).verdict is Verdict.PASS
    over = replace(prop, fault_budget=3)
    report = check_property(s, over)
    assert report.verdict is Verdict.FAIL
    assert report.trace
    assert replay_trace(s, over, report.trace) is Verdict.FAIL


@pytest.mark.parametrize("method", list(PM))
def test_fault_exhaustiveness_matches_error_state_count(method):
    mot = sample_mot()
    mot = replace(mot, protections=(replace(mot.protections[0], method=method),))
    mot, plan, s = structure(mot=mot)
    prop = _prop(mot, plan, "fault_injection_sff_wrapper_1")
    report = check_property(s, prop)
    assert report.verdict is Verdict.PASS
    w = s.wrappers[0]
    assert w.geometry.total_width <= 13
    assert report.states_explored == error_state_count(w.dw, w.geometry.redundant_bits,
                                                       method.max_errors)
    assert report.states_explored == safety_case_count(s, w.name, method.max_errors)


def test_wide_wrapper_uses_sampling():
    mot, plan, s = structure()
    prop = _prop(mot, plan, "fault_injection_sff_wrapper_3")
    report = check_property(s, prop, CheckBudget(samples=100))
    assert report.verdict is Verdict.PASS and report.states_explored == 100


def test_vacuity():
    mot, plan, s = structure()
    prop = PropertyIR(PC.PARAMETERS, "never", "0", ("sff_wrapper_1.dw == 2",))
    assert check_property(s, prop).verdict is Verdict.VACUOUS
    prop = _prop(mot, plan, "fault_injection_sff_wrapper_1")
    assert check_property(s, replace(prop, fault_budget=0)).verdict is Verdict.VACUOUS


@pytest.mark.parametrize("term", ["sff_wrapper_9.dw == 2", "top.zz_i[1:0] == sff_wrapper_1.d_i[1:0]",
                                  "top.a_i[40:0] == sff_wrapper_1.d_i[1:0]", "foo bar"])
def test_unknown_signal_reference(term):
    _, _, s = structure()
    with pytest.raises(CheckError):
        check_property(s, PropertyIR(PC.PARAMETERS, "p", "1", (term,)))


def test_mutation_errors():
    empty = replace(sample_mot(), protections=())
    with pytest.raises(MutationError):
        inject_mutation(elaborate(empty, optimize(empty)), MutationKind.WRONG_WIDTH)
    mot = replace(sample_mot(), protections=sample_mot().protections[:1])
    _, _, s = structure(mot=mot)
    with pytest.raises(MutationError):
        inject_mutation(s, MutationKind.SWAPPED_SLICES)


def test_mutations_are_seeded_and_single():
    _, _, s = structure(Algorithm.ILP)
    for kind in MutationKind:
        a = inject_mutation(s, kind, seed=7)
        b = inject_mutation(s, kind, seed=7)
        assert a.mutations == b.mutations and len(a.mutations) == 1
    assert s.mutations == []


def test_wrong_width_is_off_by_one():
    _, _, s = structure(Algorithm.ILP)
    m = inject_mutation(s, MutationKind.WRONG_WIDTH, seed=1)
    assert sorted(w.dw for w in m.wrappers) == [17, 18]


def test_clock_miswire_moves_one_wrapper():
    mot = sample_mot()
    mot = replace(mot, protections=(replace(mot.protections[0], clock="clk2"),)
                  + mot.protections[1:])
    _, _, s = structure(mot=mot)
    m = inject_mutation(s, MutationKind.CLOCK_MISWIRE, seed=3)
    changed = [(a.clock, b.clock) for a, b in zip(s.wrappers, m.wrappers) if a.clock != b.clock]
    assert len(changed) == 1


def detected_by(mot, plan, s, kind, seed, budget):
    mutant = inject_mutation(s, kind, seed)
    reports = check_all(mutant, generate_properties(mot, plan), budget)
    props = {p.name: p for p in generate_properties(mot, plan)}
    fails = [r for r in reports if r.verdict is Verdict.FAIL]
    for r in fails:
        assert replay_trace(mutant, props[r.property], r.trace) is Verdict.FAIL
    return {r.cls for r in fails}


@pytest.mark.parametrize("alg", list(Algorithm))
@pytest.mark.parametrize("kind", list(MutationKind))
def test_mutation_sensitivity_sample(alg, kind):
    mot, plan, s = structure(alg)
    assert MUTATION_CLASS[kind] in detected_by(mot, plan, s, kind, 11, CheckBudget(samples=32))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32))
def test_random_designs_sound_and_sensitive(seed):
    rng = random.Random(seed)
    mot = random_mot(rng)
    plan = optimize(mot)
    s = elaborate(mot, plan)
    budget = CheckBudget(samples=32, seed=seed)
    props = generate_properties(mot, plan)
    for r in check_all(s, props, budget):
        assert r.verdict is Verdict.PASS, (r.property, r.trace)
    if not plan.wrappers:
        return
    for kind in MutationKind:
        if kind is MutationKind.SWAPPED_SLICES and len(plan.mapping) < 2:
            continue
        assert MUTATION_CLASS[kind] in detected_by(mot, plan, s, kind, seed, budget), kind


def test_report_json_round_trip():
    mot, plan, s = structure()
    prop = replace(_prop(mot, plan, "fault_injection_sff_wrapper_1"), fault_budget=3)
    report = check_property(s, prop)
    again = CheckReport.from_dict(json.loads(report.to_json()))
    assert again == report
    assert replay_trace(s, prop, again.trace) is Verdict.FAIL


def test_selftest_fails_without_trigger_wiring():
    mot, plan, s = structure(Algorithm.NONE, self_test=True)
    prop = next(p for p in generate_properties(mot, plan) if p.cls is PC.SELFTEST)
    assert check_property(s, prop, CheckBudget(samples=8)).verdict is Verdict.PASS
    s.wrappers[0].self_test = False
    report = check_property(s, prop, CheckBudget(samples=8))
    assert report.verdict is Verdict.FAIL
    assert replay_trace(s, prop, report.trace) is Verdict.FAIL


def test_normal_mode_leaves_unwired_input_to_connectivity():
    mot, plan, s = structure(Algorithm.ILP)
    prop = next(p for p in generate_properties(mot, plan) if p.cls is PC.NORMAL)
    s.in_map.pop(("sff_wrapper_1", 0))
    # d_i itself is unwired, so the wrapper still echoes it: normal mode passes and
    # the defect is left to connectivity
    assert check_property(s, prop, CheckBudget(samples=8)).verdict is Verdict.PASS


def test_output_swap_detected_when_reset_values_agree():
    # both swapped bits reset to 1: a probe that leaves other wrappers at reset would miss it
    mot = sample_mot()
    mot = replace(mot, registers=tuple(replace(r, reset_value=2**32 - 1) for r in mot.registers))
    mot, plan, s = structure(mot=mot)
    prop = _prop(mot, plan, "conn_top_output_safety_registers")
    s.out_map[("a", 0)], s.out_map[("b", 0)] = s.out_map[("b", 0)], s.out_map[("a", 0)]
    report = check_property(s, prop)
    assert report.verdict is Verdict.FAIL
    assert replay_trace(s, prop, report.trace) is Verdict.FAIL
