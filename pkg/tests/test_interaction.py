import pytest
from hypothesis import given, settings, strategies as st

from abwscl.errors import BoundaryMismatch, SilentDivergence, UnknownName
from abwscl.interaction import (
    BOUNDARIES,
    InteractionSequence,
    InteractionStep,
    admits_sequence,
    check_pair,
    compatible,
    composable,
    default_depth,
    dual,
    interaction_semantics,
    silent,
    ws_side,
    wso_side,
)
from abwscl.terms import Address, call_record

UA_WS = Address("UserAgentWS", "WS")
UA_WSO = Address("UserAgentWSO", "WSO")


def emit(method, outer=UA_WS, inner=UA_WSO, boundary="wso-ws"):
    return InteractionStep(
        boundary=boundary, shape="emit-2", outer=outer, inner=inner,
        payload=call_record(method, ()),
    )


def consume(method, outer=UA_WS, inner=UA_WSO, boundary="wso-ws"):
    return InteractionStep(
        boundary=boundary, shape="consume-2", outer=outer, inner=inner,
        payload=call_record(method, ()),
    )


GOLDEN_WSO_SIDE = InteractionSequence((
    emit("requestLB"),
    consume("receiveLB"),
    emit("sendSB"),
    consume("receivePB"),
    emit("payB"),
))


def test_step_labels_print_far_side_first():
    step = emit("requestLB")
    assert step.label() == "wso-ws-emit-2(UserAgentWS,UserAgentWSO,requestLB)"
    assert consume("receiveLB").label() == (
        "wso-ws-consume-2(UserAgentWS,UserAgentWSO,receiveLB)"
    )
    assert silent("ws-ws").label() == "ws-ws-silent"
    assert step.key() == ("emit-2", "requestLB")


def test_dual_flips_shape_boundary_and_slots():
    step = emit("requestLB")
    d = step.dual()
    assert d.boundary == "ws-wso"
    assert d.shape == "consume-2"
    assert (d.outer, d.inner) == (step.inner, step.outer)
    assert d.dual() == step
    assert silent("ws-ws").dual().boundary == "ws-ws"
    assert silent("wso-wso").dual().boundary == "wso-wso"


def test_steps_are_validated():
    with pytest.raises(BoundaryMismatch):
        InteractionStep(boundary="ws-aa", shape="silent")
    with pytest.raises(BoundaryMismatch):
        InteractionStep(boundary="ws-ws", shape="shout")
    with pytest.raises(BoundaryMismatch):
        InteractionSequence((silent("ws-ws"), silent("wso-ws")))


def test_wso_side_admits_the_golden_conversation(program):
    pc = wso_side(program, "UserAgentWSO", ws_name="UserAgentWS")
    assert pc.boundary == "wso-ws"
    assert admits_sequence(pc, GOLDEN_WSO_SIDE)
    out_of_order = InteractionSequence(tuple(reversed(GOLDEN_WSO_SIDE.steps)))
    assert not admits_sequence(pc, out_of_order)


def test_ws_side_admits_the_dual_conversation(program):
    pc = ws_side(program, "UserAgentWS", facing="wso", wso_name="UserAgentWSO")
    assert pc.boundary == "ws-wso"
    assert admits_sequence(pc, dual(GOLDEN_WSO_SIDE))
    # receiveLB comes from the partner, never from the orchestration
    not_a_wso_call = InteractionSequence(
        (consume("receiveLB", outer=UA_WSO, inner=UA_WS, boundary="ws-wso"),)
    )
    assert not admits_sequence(pc, not_a_wso_call)


def test_semantics_compress_internal_runs(mini_program):
    pc = wso_side(mini_program, "MiniWSO", ws_name="MiniWS")
    seqs = interaction_semantics(pc, 2)
    assert InteractionSequence(()) in seqs
    keys = {tuple(s.key() for s in q if s.visible) for q in seqs}
    assert (("consume-2", "ping"),) in keys
    assert (("consume-2", "ping"), ("emit-2", "pong")) in keys
    # pong needs the ping first; alone it is not a behaviour of this side
    assert (("emit-2", "pong"),) not in keys
    for q in seqs:
        if q.steps:
            assert q.steps[-1].visible
        assert not any(a.visible is False and b.visible is False
                       for a, b in zip(q.steps, q.steps[1:]))


def test_check_pair_rejects_the_service_to_orchestration_spelling(program):
    with pytest.raises(BoundaryMismatch):
        check_pair(program, "UserAgentWS", "UserAgentWSO", "ws-wso")
    with pytest.raises(UnknownName):
        check_pair(program, "NoSuchThing", "UserAgentWS", "wso-ws")


def test_default_depth_counts_both_method_lists(program):
    pc_a, pc_m = check_pair(program, "UserAgentWSO", "UserAgentWS", "wso-ws")
    assert default_depth(pc_a, pc_m) == 2 * (5 + 6)


def test_mini_pair_is_composable(mini_program):
    pc_a, pc_m = check_pair(mini_program, "MiniWSO", "MiniWS", "wso-ws")
    verdict = composable(pc_a, pc_m, 6)
    assert verdict.kind == "Composable"
    assert verdict.explored > 0


def test_unanswered_consume_is_reported_with_a_witness(mini_program):
    pc_a = wso_side(mini_program, "MiniWSO", ws_name="MiniDriverWS")
    pc_m = ws_side(
        mini_program, "MiniDriverWS", facing="wso", wso_name="MiniWSO"
    )
    outcome = compatible(pc_a, pc_m, 6)
    assert not outcome.ok
    assert outcome.missing == ("right:consume-2(pong)",)
    assert outcome.witness is not None
    assert outcome.witness[-1].key() == ("consume-2", "pong")


def test_shared_members_preempt_compatibility(mini_program):
    pc_a = wso_side(mini_program, "MiniWSO", ws_name="MiniWS")
    pc_b = wso_side(mini_program, "MiniWSO", far_wso="MiniDriverWSO")
    verdict = composable(pc_a, pc_b)
    assert verdict.kind == "MemberOverlap"
    assert verdict.overlap == (Address("MiniWSO", "WSO"),)


def test_state_budget_is_enforced(program):
    pc = wso_side(program, "UserAgentWSO", ws_name="UserAgentWS")
    with pytest.raises(SilentDivergence):
        interaction_semantics(pc, 4, max_states=50)


def steps_for(boundary):
    return st.builds(
        InteractionStep,
        boundary=st.just(boundary),
        shape=st.sampled_from(
            ["silent", "emit-1", "emit-2", "consume-1", "consume-2"]
        ),
        outer=st.sampled_from([None, Address("o1", "WS"), Address("o2", "WSO")]),
        inner=st.sampled_from([None, Address("i1", "WS"), Address("i2", "WSO")]),
        payload=st.sampled_from(
            [None, 3, call_record("m", ()), call_record("n", (1, "x"))]
        ),
    )


sequences = st.sampled_from(BOUNDARIES).flatmap(
    lambda b: st.lists(steps_for(b), max_size=8).map(
        lambda ss: InteractionSequence(tuple(ss))
    )
)


@given(sequences)
@settings(max_examples=200)
def test_dual_is_an_involution(seq):
    assert dual(dual(seq)) == seq
