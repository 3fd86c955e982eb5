import pytest

from abwscl import Exhaustive, FairRoundRobin, Trace, run
from abwscl.engine import apply_instance, enabled_rules, explore
from abwscl.program import initial_configuration, instantiate
from abwscl.rules import _ready_signal, boundary_in
from abwscl.terms import (
    Address,
    AddressAllocator,
    AppMessage,
    Configuration,
    Fragment,
    call_record,
)

GOLDEN_EXCHANGES = ["requestLB", "receiveLB", "sendSB", "receivePB", "payB"]


def golden(program, seed=0, max_steps=500):
    alloc = AddressAllocator()
    config = initial_configuration(program, "BuyingBookWSC", alloc)
    return run(program, config, max_steps=max_steps, seed=seed, alloc=alloc)


def test_conversation_runs_to_quiescence(program):
    trace = golden(program)
    assert trace.quiescent
    assert not trace.reached_limit
    assert [m.method for m in trace.ws_exchanges()] == GOLDEN_EXCHANGES


def test_trace_text_shape(program):
    trace = golden(program)
    lines = trace.text().splitlines()
    assert lines[0] == "abwscl-trace v1"
    assert lines[1] == f"steps {len(trace.steps)} quiescent"
    assert lines[2].startswith("0: ")
    assert "-- final" in lines
    assert trace.final.canon() in trace.text()


def test_same_seed_same_trace(program):
    assert golden(program).text() == golden(program).text()


def test_any_seed_reaches_the_same_conversation(program):
    for seed in (1, 7, 42):
        trace = golden(program, seed=seed)
        assert trace.quiescent
        assert [m.method for m in trace.ws_exchanges()] == GOLDEN_EXCHANGES


def test_step_limit_is_reported(program):
    trace = golden(program, max_steps=5)
    assert not trace.quiescent
    assert trace.reached_limit
    assert len(trace.steps) == 5
    assert "steps 5 step-limit" in trace.text()


def test_mini_conversation_labels(mini_program):
    alloc = AddressAllocator()
    config = initial_configuration(mini_program, "MiniWSC", alloc)
    trace = run(mini_program, config, max_steps=200, seed=0, alloc=alloc)
    assert trace.quiescent
    # nothing crosses until the driver is poked from outside
    assert trace.boundary_labels() == ()


def test_feeds_enter_as_in_steps(mini_program):
    alloc = AddressAllocator()
    config = initial_configuration(mini_program, "MiniWSC", alloc)
    start = run(mini_program, config, max_steps=200, seed=0, alloc=alloc)
    driver = next(
        a.addr for a in start.final.top.actors if a.behavior == "MiniDriverWS"
    )
    feed = AppMessage(driver, call_record("go", ()))
    trace = run(
        mini_program, start.final, max_steps=200, seed=0,
        feeds=(feed,), alloc=alloc,
    )
    assert trace.quiescent
    assert ("in", "go") in trace.boundary_labels()
    # the driver pokes the callee, whose service answers with a pong
    assert [m.method for m in trace.ws_exchanges()] == ["poke", "pong"]


RACE_SOURCE = """
WSO RaceWSO {
    WS ws-ref

    init(WS ws) {
        ws-ref := ws
    }

    left() if true {
        other-local-computations
    }

    right() if true {
        other-local-computations
    }
}
"""


def test_delivery_races_are_visible_to_the_scheduler():
    from abwscl import Program

    program = Program.parse(RACE_SOURCE)
    alloc = AddressAllocator()
    actor = instantiate(
        program, "RaceWSO", [Address("Outside", "WS")], alloc,
        addr=Address("RaceWSO", "WSO"),
    )
    config = Configuration(
        Fragment.make(actors=(actor,), events=(_ready_signal(actor),))
    )
    config = boundary_in(config, AppMessage(actor.addr, call_record("left", ())))
    config = boundary_in(config, AppMessage(actor.addr, call_record("right", ())))
    insts = enabled_rules(program, config)
    assert [i.rule_id for i in insts] == ["ReadyDeliver", "ReadyDeliver"]
    nexts = {
        apply_instance(program, config, i, alloc.clone())[0].canon()
        for i in insts
    }
    assert len(nexts) == 2


def test_exhaustive_policy_is_deterministic(program):
    alloc = AddressAllocator()
    config = initial_configuration(program, "BuyingBookWSC", alloc)
    t1 = run(program, config, Exhaustive(), max_steps=500, alloc=alloc.clone())
    t2 = run(program, config, Exhaustive(), max_steps=500, alloc=alloc.clone())
    assert t1.text() == t2.text()
    assert t1.quiescent


def test_explore_matches_single_runs(mini_program):
    alloc = AddressAllocator()
    config = initial_configuration(mini_program, "MiniWSC", alloc)
    settled = run(mini_program, config, max_steps=200, seed=0, alloc=alloc).final
    driver = next(
        a.addr for a in settled.top.actors if a.behavior == "MiniDriverWS"
    )
    feed = AppMessage(driver, call_record("go", ()))
    configs, labels = explore(mini_program, settled, depth=6, feeds=(feed,), alloc=alloc)
    assert settled.canon() in configs
    assert () in labels  # prefix closure includes the empty trace
    assert (("in", "go"),) in labels
    for seq in labels:
        for prefix_len in range(len(seq)):
            assert seq[:prefix_len] in labels


def test_fairness_bounds_service_time(program):
    # with fifteen concurrent actors the conversation still finishes:
    # nothing enabled is starved regardless of seed
    for seed in (3, 11):
        trace = golden(program, seed=seed)
        assert trace.quiescent
        assert len(trace.steps) < 400
