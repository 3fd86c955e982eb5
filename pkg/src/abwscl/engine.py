"""Rule enumeration, schedulers, runs, and exhaustive exploration.

A run repeatedly asks enabled_rules for every instance whose side
conditions hold, lets the scheduler pick one, and applies it.  All state
lives in the immutable Configuration; the engine itself only carries the
allocator and the not-yet-consumed feed messages.
"""
from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import rules
from . import syntax as ast
from .errors import AbwsclError
from .program import Program, eval_in_state, guard_accepts
from .terms import (
    Address,
    AddressAllocator,
    AppMessage,
    Configuration,
    Event,
    EventMessage,
    ProcessingState,
    Record,
    blocked,
    members,
    receptionists,
)


@dataclass(frozen=True)
class RuleInstance:
    """One applicable rewrite: which rule, where, consuming what."""

    rule_id: str
    site: str
    payload: str = ""

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.rule_id, self.site, self.payload)

    def __str__(self) -> str:
        return f"{self.rule_id} @ {self.site}"


@dataclass(frozen=True)
class StepRecord:
    instance: RuleInstance
    produced: Tuple[str, ...]
    artifacts: Tuple
    post: Configuration


@dataclass(frozen=True)
class Trace:
    initial: Configuration
    steps: Tuple[StepRecord, ...]
    quiescent: bool
    reached_limit: bool

    @property
    def final(self) -> Configuration:
        return self.steps[-1].post if self.steps else self.initial

    def text(self) -> str:
        status = "quiescent" if self.quiescent else "step-limit"
        lines = ["abwscl-trace v1", f"steps {len(self.steps)} {status}"]
        for i, s in enumerate(self.steps):
            prod = "; ".join(s.produced) if s.produced else "-"
            lines.append(f"{i}: {s.instance.rule_id} @ {s.instance.site} -> {prod}")
        lines.append("-- final")
        lines.append(self.final.canon())
        return "\n".join(lines) + "\n"

    def ws_exchanges(self) -> Tuple[AppMessage, ...]:
        """Messages between two interface services, in emission order."""
        out: List[AppMessage] = []
        for s in self.steps:
            for a in s.artifacts:
                if (
                    isinstance(a, AppMessage)
                    and a.src is not None
                    and a.src.kind == "WS"
                    and a.dest.kind == "WS"
                ):
                    out.append(a)
        return tuple(out)

    def boundary_labels(self) -> Tuple[Tuple[str, str], ...]:
        """((\"out\"|\"in\", method) per boundary crossing, in step order."""
        out: List[Tuple[str, str]] = []
        for s in self.steps:
            if s.instance.rule_id in ("Out", "In"):
                for a in s.artifacts:
                    if isinstance(a, AppMessage):
                        direction = "out" if s.instance.rule_id == "Out" else "in"
                        out.append((direction, a.method or "?"))
        return tuple(out)


# -- enumeration --------------------------------------------------------------


def _ready_signal_present(config: Configuration, actor) -> bool:
    want = EventMessage(
        dest=actor.tau, src=actor.addr, event=Event.READY, value=Record.of()
    )
    return want in config.top.events


def _deliverable(program: Program, config: Configuration, am: AppMessage) -> bool:
    actor = config.top.actor(am.dest)
    if actor is None or not _ready_signal_present(config, actor):
        return False
    method = am.method
    if method is None:
        return False
    try:
        return guard_accepts(program, actor, method, am.args)
    except AbwsclError:
        return False


def _request_ready(program: Program, actor) -> bool:
    """Can step_request fire for this running actor?"""
    queue = actor.state.queue
    if not queue:
        return True
    head = queue[0]
    if not isinstance(head, (ast.SendAct, ast.SetPartnerCall)):
        return False
    try:
        target = eval_in_state(program, actor, ast.Name(ident=head.target))
    except AbwsclError:
        return False
    return isinstance(target, Address)


def enabled_rules(
    program: Program, config: Configuration, feeds: Sequence[AppMessage] = ()
) -> Tuple[RuleInstance, ...]:
    """Every rule instance whose side conditions hold, in a deterministic
    order (rule id, then site, then consumed payload)."""
    top = config.top
    mem = members(top)
    insts: List[RuleInstance] = []

    for a in top.actors:
        if a.p is not ProcessingState.RUNNING:
            continue
        queue = a.state.queue
        if not queue or isinstance(queue[0], (ast.SendAct, ast.SetPartnerCall)):
            if _request_ready(program, a):
                payload = queue[0].canon() if queue else "ready"
                insts.append(RuleInstance("Request", a.addr.id, payload))
            continue
        head = queue[0]
        if not isinstance(head, ast.CreateAct) or not program.has(head.behavior):
            continue
        created = program.definition(head.behavior).kind
        if a.kind == "WSO" and created == "AA":
            insts.append(RuleInstance("CreateAA", a.addr.id, head.canon()))
        elif a.kind == "WS" and created == "WSO" and a.links.owner_wso is None:
            insts.append(RuleInstance("CreateWSO", a.addr.id, head.canon()))
        elif (
            a.kind == "WSC"
            and created == "WS"
            and a.links.partner_1 is None
            and a.links.partner_2 is None
            and len(queue) >= 2
            and isinstance(queue[1], ast.CreateAct)
            and program.has(queue[1].behavior)
            and program.definition(queue[1].behavior).kind == "WS"
        ):
            insts.append(RuleInstance("CreateWSs", a.addr.id, head.canon()))

    for ev in top.events:
        if ev.event is Event.TRANSMIT:
            if top.actor(ev.dest) is None:
                continue
            dest = ev.value.get("dest") if isinstance(ev.value, Record) else None
            call = ev.value.get("call") if isinstance(ev.value, Record) else None
            if not isinstance(dest, Address) or not isinstance(call, Record):
                continue
            sender = top.actor(ev.src)
            target = top.actor(dest)
            if (
                sender is not None
                and target is not None
                and sender.kind == "AA"
                and target.kind == "AA"
            ):
                same = (
                    sender.links.owner_wso is not None
                    and sender.links.owner_wso == target.links.owner_wso
                    and sender.links.interface_ws == target.links.interface_ws
                )
                if same:
                    insts.append(RuleInstance("SendIn", ev.dest.id, ev.canon()))
                # cross-service activity pairs stay stuck: no instance
            else:
                insts.append(RuleInstance("SendOut", ev.dest.id, ev.canon()))
        elif ev.event in (Event.COMPLETE, Event.DELIVER):
            t = top.actor(ev.dest)
            if (
                t is not None
                and t.p is ProcessingState.READY
                and blocked(t.last_signal, ev.event)
            ):
                insts.append(RuleInstance("Compute", ev.dest.id, ev.canon()))

    for am in top.apps:
        if am.dest in mem:
            if _deliverable(program, config, am):
                rid = "SetPartner" if am.method == "setPartner" else "ReadyDeliver"
                insts.append(RuleInstance(rid, am.dest.id, am.canon()))
        else:
            insts.append(RuleInstance("Out", am.dest.id, am.canon()))

    recep = receptionists(top)
    for f in feeds:
        if f.dest in recep:
            insts.append(RuleInstance("In", f.dest.id, f.canon()))

    return tuple(sorted(insts, key=lambda i: i.key))


# -- application ---------------------------------------------------------------


def _actor_by_id(config: Configuration, site: str):
    for a in config.top.actors:
        if a.addr.id == site:
            return a
    raise AbwsclError(f"no actor at site {site}")


def _event_by_canon(config: Configuration, payload: str) -> EventMessage:
    for ev in config.top.events:
        if ev.canon() == payload:
            return ev
    raise AbwsclError(f"no such signal: {payload}")


def _app_by_canon(config: Configuration, payload: str) -> AppMessage:
    for am in config.top.apps:
        if am.canon() == payload:
            return am
    raise AbwsclError(f"no such message: {payload}")


def apply_instance(
    program: Program,
    config: Configuration,
    inst: RuleInstance,
    alloc: AddressAllocator,
    feeds: Sequence[AppMessage] = (),
) -> Tuple[Configuration, Tuple[str, ...], Tuple]:
    """Apply one enabled instance; returns (config, produced, artifacts).

    Artifacts are the message objects the step moved across a meaningful
    line: the AppMessage a routed send produced, or the message that
    crossed the boundary.
    """
    rid = inst.rule_id
    if rid == "Request":
        actor = _actor_by_id(config, inst.site)
        cfg, produced = rules.step_request(program, config, actor.addr)
        return cfg, produced, ()
    if rid == "Compute":
        actor = _actor_by_id(config, inst.site)
        ev = _event_by_canon(config, inst.payload)
        cfg, produced = rules.step_compute(program, config, actor.addr, ev)
        return cfg, produced, ()
    if rid in ("SendIn", "SendOut"):
        ev = _event_by_canon(config, inst.payload)
        fn = rules.aa_send_in if rid == "SendIn" else rules.aa_send_out
        cfg, produced = fn(program, config, ev)
        app = AppMessage(
            dest=ev.value.get("dest"), value=ev.value.get("call"), src=ev.src
        )
        return cfg, produced, (app,)
    if rid == "ReadyDeliver":
        am = _app_by_canon(config, inst.payload)
        cfg, produced = rules.deliver_ready(program, config, am)
        return cfg, produced, ()
    if rid == "SetPartner":
        am = _app_by_canon(config, inst.payload)
        cfg, produced = rules.deliver_set_partner(program, config, am)
        return cfg, produced, ()
    if rid == "Out":
        am = _app_by_canon(config, inst.payload)
        cfg, produced = rules.eject(config, am)
        return cfg, produced, (am,)
    if rid == "In":
        for f in feeds:
            if f.canon() == inst.payload:
                cfg = rules.boundary_in(config, f)
                accepted = AppMessage(dest=f.dest, value=f.value, src=None)
                return cfg, (accepted.canon(),), (accepted,)
        raise AbwsclError(f"no such feed: {inst.payload}")
    if rid == "CreateAA":
        actor = _actor_by_id(config, inst.site)
        cfg, produced = rules.create_aa(program, config, actor.addr, alloc)
        return cfg, produced, ()
    if rid == "CreateWSO":
        actor = _actor_by_id(config, inst.site)
        cfg, produced = rules.create_wso(program, config, actor.addr, alloc)
        return cfg, produced, ()
    if rid == "CreateWSs":
        actor = _actor_by_id(config, inst.site)
        cfg, produced = rules.create_wss(program, config, actor.addr, alloc)
        return cfg, produced, ()
    raise AbwsclError(f"unknown rule id {rid!r}")


# -- schedulers ----------------------------------------------------------------


def _tie_break(seed: int, key: Tuple[str, str, str]) -> str:
    return hashlib.sha1(f"{seed}:{key}".encode("utf-8")).hexdigest()


class FairRoundRobin:
    """Oldest continuously-enabled instance first; seeded hash breaks ties.

    Age is the step at which an instance became enabled and stayed so; an
    instance that momentarily disables starts over.  This gives observation
    fairness: nothing stays enabled forever without being applied.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._ages: Dict[Tuple[str, str, str], int] = {}

    def choose(self, instances: Sequence[RuleInstance], step: int) -> RuleInstance:
        keys = {i.key for i in instances}
        self._ages = {k: s for k, s in self._ages.items() if k in keys}
        for k in keys:
            self._ages.setdefault(k, step)
        return min(
            instances, key=lambda i: (self._ages[i.key], _tie_break(self.seed, i.key))
        )


class Exhaustive:
    """Always the first instance in canonical order.  For reachable-set
    questions use explore(), which walks every branch."""

    def choose(self, instances: Sequence[RuleInstance], step: int) -> RuleInstance:
        return instances[0]


# -- driving -------------------------------------------------------------------


def run(
    program: Program,
    config: Configuration,
    sched=None,
    max_steps: int = 1000,
    *,
    seed: int = 0,
    feeds: Sequence[AppMessage] = (),
    alloc: Optional[AddressAllocator] = None,
) -> Trace:
    """Drive a configuration until quiescence or the step limit.

    Pass the allocator that minted the configuration's addresses when the
    run may create actors; by default a new one is advanced past every
    counter already in use.
    """
    if sched is None:
        sched = FairRoundRobin(seed)
    if alloc is None:
        alloc = AddressAllocator().advance_past(
            a.addr.id for a in config.top.actors
        )
    remaining: List[AppMessage] = list(feeds)
    steps: List[StepRecord] = []
    cur = config
    quiescent = False
    while len(steps) < max_steps:
        insts = enabled_rules(program, cur, feeds=remaining)
        if not insts:
            quiescent = True
            break
        inst = sched.choose(insts, len(steps))
        cur, produced, artifacts = apply_instance(
            program, cur, inst, alloc, feeds=remaining
        )
        if inst.rule_id == "In":
            for i, f in enumerate(remaining):
                if f.canon() == inst.payload:
                    del remaining[i]
                    break
        steps.append(StepRecord(inst, produced, artifacts, cur))
    if not quiescent:
        quiescent = not enabled_rules(program, cur, feeds=remaining)
    return Trace(
        initial=config,
        steps=tuple(steps),
        quiescent=quiescent,
        reached_limit=not quiescent,
    )


def explore(
    program: Program,
    config: Configuration,
    depth: int,
    feeds: Sequence[AppMessage] = (),
    alloc: Optional[AddressAllocator] = None,
) -> Tuple[frozenset, frozenset]:
    """Breadth-first closure over every interleaving, `depth` steps deep.

    Returns (reachable configuration canons, boundary-label sequences).
    The label set is prefix-closed: every visited path contributes the
    boundary crossings seen so far.
    """
    if alloc is None:
        alloc = AddressAllocator().advance_past(
            a.addr.id for a in config.top.actors
        )
    start = (config, tuple(feeds), (), 0)
    seen = set()
    configs = set()
    labels_seen = set()
    queue = deque([start])
    while queue:
        cfg, fds, labels, used = queue.popleft()
        key = (cfg.canon(), tuple(f.canon() for f in fds), labels)
        if key in seen:
            continue
        seen.add(key)
        configs.add(cfg.canon())
        labels_seen.add(labels)
        if used >= depth:
            continue
        for inst in enabled_rules(program, cfg, feeds=fds):
            cfg2, _produced, artifacts = apply_instance(
                program, cfg, inst, alloc.clone(), feeds=fds
            )
            fds2 = fds
            labels2 = labels
            if inst.rule_id == "In":
                kept = list(fds)
                for i, f in enumerate(kept):
                    if f.canon() == inst.payload:
                        del kept[i]
                        break
                fds2 = tuple(kept)
            if inst.rule_id in ("Out", "In"):
                for a in artifacts:
                    if isinstance(a, AppMessage):
                        direction = "out" if inst.rule_id == "Out" else "in"
                        labels2 = labels2 + ((direction, a.method or "?"),)
            queue.append((cfg2, fds2, labels2, used + 1))
    return frozenset(configs), frozenset(labels_seen)
