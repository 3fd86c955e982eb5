"""Boundary labelling and compositionality checking.

A partial configuration is one side of a composition: a fragment (an
orchestration with its activity actors, or an interface service alone)
together with the address it talks through.  Every move the fragment can
make is an interaction step: internal rewrites are silent, a message
leaving the fragment is an emit, a message entering from the bound peer
is a consume.  Steps at message level carry the call (emit-2/consume-2);
steps at signal level also carry the event (emit-1/consume-1).

Printed labels follow one convention for every shape: the far-side
address first, the member address second, then the payload.  The dual of
a step swaps those two slots, exchanges emit with consume, and flips the
label family between wso-ws and ws-wso (ws-ws and wso-wso are their own
mirror families), so dual is an involution by construction.

Two sides are composable when their member sets are disjoint and they
are compatible: feeding each side's emissions to the other must realize
every visible step the side could take on its own.  A side alone is
explored with free consumes from the peer's call alphabet; neighbours
that are not the peer under study (a partner service behind the one
being checked, or the orchestration driving it) inject their calls
silently, once each, so the conversation is self-contained.
"""
from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from . import rules
from . import syntax as ast
from .engine import RuleInstance, StepRecord, apply_instance, enabled_rules
from .errors import (
    BoundaryMismatch,
    NotABoundaryEvent,
    NotAWS,
    NotAWSO,
    SilentDivergence,
    UnknownName,
)
from .program import _DEFAULTS, Program, instantiate
from .terms import (
    Address,
    AddressAllocator,
    AppMessage,
    Configuration,
    Event,
    EventMessage,
    Fragment,
    Links,
    ProcessingState,
    Record,
    Value,
    call_record,
    canon_value,
    members,
    restrict,
)

BOUNDARIES = ("wso-ws", "ws-wso", "ws-ws", "wso-wso")

_FLIP = {"wso-ws": "ws-wso", "ws-wso": "wso-ws", "ws-ws": "ws-ws", "wso-wso": "wso-wso"}
_DUAL_SHAPE = {
    "silent": "silent",
    "emit-1": "consume-1",
    "emit-2": "consume-2",
    "consume-1": "emit-1",
    "consume-2": "emit-2",
}

# states a silent-step search may visit before giving up on termination
_MAX_STATES = 200_000


def _payload_text(value: Value) -> str:
    if isinstance(value, Record):
        m = value.get("method")
        if isinstance(m, str):
            return m
    return canon_value(value)


@dataclass(frozen=True)
class InteractionStep:
    """One boundary-labelled move of a partial configuration."""

    boundary: str
    shape: str
    outer: Optional[Address] = None
    inner: Optional[Address] = None
    event: Optional[Event] = None
    payload: Value = None

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise BoundaryMismatch(f"unknown boundary {self.boundary!r}")
        if self.shape not in _DUAL_SHAPE:
            raise BoundaryMismatch(f"unknown step shape {self.shape!r}")

    @property
    def visible(self) -> bool:
        return self.shape != "silent"

    @property
    def method(self) -> Optional[str]:
        if isinstance(self.payload, Record):
            m = self.payload.get("method")
            if isinstance(m, str):
                return m
        return None

    def key(self) -> Tuple[str, str]:
        """What compatibility matches on: shape and payload text."""
        return (self.shape, _payload_text(self.payload))

    def label(self) -> str:
        if self.shape == "silent":
            return f"{self.boundary}-silent"
        outer = self.outer.canon() if self.outer else "?"
        inner = self.inner.canon() if self.inner else "?"
        if self.shape in ("emit-1", "consume-1"):
            ev = self.event.value if self.event else "?"
            return (
                f"{self.boundary}-{self.shape}"
                f"({outer},{inner},{ev},{_payload_text(self.payload)})"
            )
        return f"{self.boundary}-{self.shape}({outer},{inner},{_payload_text(self.payload)})"

    def dual(self) -> "InteractionStep":
        return InteractionStep(
            boundary=_FLIP[self.boundary],
            shape=_DUAL_SHAPE[self.shape],
            outer=self.inner,
            inner=self.outer,
            event=self.event,
            payload=self.payload,
        )

    def __str__(self) -> str:
        return self.label()


def silent(boundary: str) -> InteractionStep:
    return InteractionStep(boundary=boundary, shape="silent")


@dataclass(frozen=True)
class InteractionSequence:
    """Steps observed at one boundary, in order."""

    steps: Tuple[InteractionStep, ...] = ()

    def __post_init__(self):
        families = {s.boundary for s in self.steps}
        if len(families) > 1:
            raise BoundaryMismatch(f"mixed boundaries in one sequence: {families}")

    def dual(self) -> "InteractionSequence":
        return InteractionSequence(tuple(s.dual() for s in self.steps))

    def visible(self) -> "InteractionSequence":
        return InteractionSequence(tuple(s for s in self.steps if s.visible))

    def labels(self) -> Tuple[str, ...]:
        return tuple(s.label() for s in self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def __str__(self) -> str:
        return "[" + ", ".join(self.labels()) + "]"


@dataclass(frozen=True, eq=False)
class PartialConfiguration:
    """A fragment with the boundary it is observed through.

    anchor: the fragment's receptionist, named after its behaviour.
    gate:   the literal outside address its traffic moves through.
    peer:   the far side's identity as printed in labels; for virtual
            orchestration-to-orchestration boundaries this is the far
            orchestration while the gate stays the interface service.
    peer_feeds: calls the peer may send, consumed as visible steps.
    env_feeds:  calls other neighbours send, injected silently once each.
    """

    program: Program
    config: Configuration
    boundary: str
    behavior: str
    anchor: Address
    peer: Address
    gate: Address
    peer_feeds: Tuple[AppMessage, ...] = ()
    env_feeds: Tuple[AppMessage, ...] = ()
    alloc: AddressAllocator = dataclasses.field(default_factory=AddressAllocator)

    def __post_init__(self):
        mem = members(self.config.top)
        if self.anchor not in mem:
            raise BoundaryMismatch(f"{self.anchor.canon()} is not a member")
        if self.gate in mem or self.peer in mem:
            raise BoundaryMismatch("the far side must lie outside the fragment")

    def members(self) -> FrozenSet[Address]:
        return members(self.config.top)


# -- step classification -------------------------------------------------------


def label_step(pc: PartialConfiguration, item) -> InteractionStep:
    """Classify one engine step or message against this boundary.

    Rewrites inside the fragment are silent.  A message with one endpoint
    inside and one outside is an emit or consume; both endpoints on the
    same side of the line is not a boundary event.
    """
    if isinstance(item, StepRecord):
        if item.instance.rule_id in ("In", "Out") and item.artifacts:
            return label_step(pc, item.artifacts[0])
        return silent(pc.boundary)
    if isinstance(item, RuleInstance):
        if item.rule_id in ("In", "Out"):
            raise NotABoundaryEvent(
                "a boundary instance names its message by canon only; "
                "classify the message or the step record instead"
            )
        return silent(pc.boundary)
    if isinstance(item, (AppMessage, EventMessage)):
        return _classify_message(pc, item)
    raise NotABoundaryEvent(f"cannot classify {item!r}")


def _substitute(pc: PartialConfiguration, far: Optional[Address]) -> Optional[Address]:
    # the gate stands in for the peer in label slots
    if far is not None and far == pc.gate:
        return pc.peer
    return far


def _classify_message(pc: PartialConfiguration, msg) -> InteractionStep:
    mem = pc.members()
    if isinstance(msg, AppMessage):
        dest, src, ev, value = msg.dest, msg.src, None, msg.value
        numeral = "2"
    else:
        dest, src, ev, value = msg.dest, msg.src, msg.event, msg.value
        numeral = "1"
    dest_in = dest in mem
    src_in = src in mem if src is not None else None
    if dest_in and src_in:
        raise NotABoundaryEvent(f"both endpoints are members: {msg.canon()}")
    if not dest_in and src_in is False:
        raise NotABoundaryEvent(f"neither endpoint is a member: {msg.canon()}")
    if not dest_in:
        return InteractionStep(
            boundary=pc.boundary,
            shape=f"emit-{numeral}",
            outer=_substitute(pc, dest),
            inner=src if src is not None else pc.anchor,
            event=ev,
            payload=value,
        )
    return InteractionStep(
        boundary=pc.boundary,
        shape=f"consume-{numeral}",
        outer=_substitute(pc, src) if src is not None else pc.peer,
        inner=dest,
        event=ev,
        payload=value,
    )


def _emit_visible(pc: PartialConfiguration, am: AppMessage) -> bool:
    # orchestration sides observe every ejection; service sides only
    # what crosses toward the bound peer
    if pc.boundary in ("wso-ws", "wso-wso"):
        return True
    return am.dest == pc.gate


def dual(seq: InteractionSequence) -> InteractionSequence:
    return seq.dual()


# -- building the two kinds of side -------------------------------------------


def _link_names(d: ast.BehaviorDefinition, kind: str) -> Tuple[str, ...]:
    return tuple(l.name for l in d.links if l.kind == kind)


def _sends_toward(d: ast.BehaviorDefinition, link_names: Sequence[str]) -> Tuple[str, ...]:
    """Method names this behaviour sends along the given references,
    in first-send order, deduplicated."""
    targets = set(link_names)
    seen: List[str] = []
    bodies = ([d.init] if d.init else []) + list(d.methods)
    for m in bodies:
        for act in m.body:
            if isinstance(act, ast.SendAct) and act.target in targets:
                if act.method not in seen:
                    seen.append(act.method)
    return tuple(seen)


def _feed_calls(
    sender: ast.BehaviorDefinition,
    link_names: Sequence[str],
    receiver: ast.BehaviorDefinition,
    dest: Address,
    src: Address,
) -> Tuple[AppMessage, ...]:
    feeds = []
    for name in _sends_toward(sender, link_names):
        m = receiver.method(name)
        if m is None:
            continue
        args = tuple(_DEFAULTS.get(ptype) for ptype, _pname in m.params)
        feeds.append(AppMessage(dest=dest, src=src, value=call_record(name, args)))
    return tuple(feeds)


def _creator_ws(program: Program, wso_name: str) -> ast.BehaviorDefinition:
    """The interface service whose body creates the named orchestration."""
    for d in program.defs:
        if d.kind != "WS":
            continue
        bodies = ([d.init] if d.init else []) + list(d.methods)
        for m in bodies:
            for act in m.body:
                if isinstance(act, ast.CreateAct) and act.behavior == wso_name:
                    return d
    raise UnknownName(f"no interface service creates {wso_name!r}")


def _wso_of(program: Program, ws_name: str) -> Optional[str]:
    d = program.definition(ws_name)
    bodies = ([d.init] if d.init else []) + list(d.methods)
    for m in bodies:
        for act in m.body:
            if isinstance(act, ast.CreateAct) and program.has(act.behavior):
                if program.definition(act.behavior).kind == "WSO":
                    return act.behavior
    return None


def _partner_of(program: Program, ws_name: str) -> Optional[str]:
    for d in program.defs:
        if d.kind != "WSC":
            continue
        created = []
        bodies = ([d.init] if d.init else []) + list(d.methods)
        for m in bodies:
            for act in m.body:
                if isinstance(act, ast.CreateAct):
                    created.append(act.behavior)
        if ws_name in created:
            others = [c for c in created if c != ws_name]
            if others:
                return others[0]
    return None


def wso_side(
    program: Program,
    wso_name: str,
    *,
    ws_name: Optional[str] = None,
    far_wso: Optional[str] = None,
) -> PartialConfiguration:
    """One orchestration with its activity actors, bound to its service.

    With far_wso the boundary is the virtual orchestration-to-
    orchestration one: the interface service stays the gate, but labels
    name the far orchestration.
    """
    d = program.definition(wso_name)
    if d.kind != "WSO":
        raise NotAWSO(f"{wso_name} is a {d.kind}, not a WSO")
    ws_def = program.definition(ws_name) if ws_name else _creator_ws(program, wso_name)
    if ws_def.kind != "WS":
        raise NotAWS(f"{ws_def.name} is a {ws_def.kind}, not a WS")
    anchor = Address(wso_name, "WSO")
    gate = Address(ws_def.name, "WS")
    alloc = AddressAllocator()
    args: List[Value] = []
    if d.init:
        for ptype, _pname in d.init.params:
            args.append(gate if ptype == "WS" else _DEFAULTS.get(ptype))
    actor = instantiate(program, wso_name, args, alloc, addr=anchor)
    events = (rules._ready_signal(actor),) if actor.p is ProcessingState.READY else ()
    fragment = restrict(Fragment.make(actors=(actor,), events=events), {anchor})
    peer = Address(far_wso, "WSO") if far_wso else gate
    return PartialConfiguration(
        program=program,
        config=Configuration(fragment),
        boundary="wso-wso" if far_wso else "wso-ws",
        behavior=wso_name,
        anchor=anchor,
        peer=peer,
        gate=gate,
        peer_feeds=_feed_calls(ws_def, _link_names(ws_def, "WSO"), d, anchor, gate),
        env_feeds=(),
        alloc=alloc,
    )


def ws_side(
    program: Program,
    ws_name: str,
    *,
    facing: str,
    wso_name: Optional[str] = None,
    partner_name: Optional[str] = None,
) -> PartialConfiguration:
    """One interface service alone, its references prebound.

    facing "wso" observes the service against its orchestration; facing
    "ws" observes it against its partner service.  Whichever neighbour
    is not under observation becomes a silent feeder.
    """
    if facing not in ("wso", "ws"):
        raise BoundaryMismatch(f"facing must be 'wso' or 'ws', not {facing!r}")
    d = program.definition(ws_name)
    if d.kind != "WS":
        raise NotAWS(f"{ws_name} is a {d.kind}, not a WS")
    wso_name = wso_name or _wso_of(program, ws_name)
    partner_name = partner_name or _partner_of(program, ws_name)
    anchor = Address(ws_name, "WS")
    owner = Address(wso_name or f"{ws_name}-owner", "WSO")
    partner = Address(partner_name or f"{ws_name}-partner", "WS")
    alloc = AddressAllocator()
    args: List[Value] = []
    if d.init:
        args = [_DEFAULTS.get(ptype) for ptype, _pname in d.init.params]
    actor = instantiate(program, ws_name, args, alloc, addr=anchor)
    # creation and wiring happened elsewhere: drop the birth body and
    # hand the service its references ready-made
    actor = dataclasses.replace(
        actor,
        p=ProcessingState.READY,
        last_signal=Event.READY,
        state=actor.state.with_queue(()),
        links=Links("WS", owner_wso=owner, partner_ws=partner),
    )
    fragment = restrict(
        Fragment.make(actors=(actor,), events=(rules._ready_signal(actor),)),
        {anchor},
    )
    wso_def = program.definition(wso_name) if wso_name else None
    partner_def = program.definition(partner_name) if partner_name else None
    peer_feeds: Tuple[AppMessage, ...] = ()
    env_feeds: Tuple[AppMessage, ...] = ()
    if facing == "wso":
        gate = owner
        if wso_def is not None:
            peer_feeds = _feed_calls(wso_def, _link_names(wso_def, "WS"), d, anchor, gate)
        if partner_def is not None:
            env_feeds = _feed_calls(
                partner_def, _link_names(partner_def, "WS"), d, anchor, partner
            )
    else:
        gate = partner
        if partner_def is not None:
            peer_feeds = _feed_calls(
                partner_def, _link_names(partner_def, "WS"), d, anchor, gate
            )
        if wso_def is not None:
            env_feeds = _feed_calls(wso_def, _link_names(wso_def, "WS"), d, anchor, owner)
    return PartialConfiguration(
        program=program,
        config=Configuration(fragment),
        boundary="ws-wso" if facing == "wso" else "ws-ws",
        behavior=ws_name,
        anchor=anchor,
        peer=gate,
        gate=gate,
        peer_feeds=peer_feeds,
        env_feeds=env_feeds,
        alloc=alloc,
    )


def check_pair(
    program: Program, name_a: str, name_b: str, boundary: str
) -> Tuple[PartialConfiguration, PartialConfiguration]:
    """The two sides the named boundary puts under observation."""
    if boundary == "wso-ws":
        pc_a = wso_side(program, name_a, ws_name=name_b)
        pc_m = ws_side(program, name_b, facing="wso", wso_name=name_a)
    elif boundary == "ws-ws":
        pc_a = ws_side(program, name_a, facing="ws", partner_name=name_b)
        pc_m = ws_side(program, name_b, facing="ws", partner_name=name_a)
    elif boundary == "wso-wso":
        pc_a = wso_side(program, name_a, far_wso=name_b)
        pc_m = wso_side(program, name_b, far_wso=name_a)
    else:
        raise BoundaryMismatch(
            f"checkable boundaries are wso-ws, ws-ws, wso-wso; got {boundary!r}"
        )
    return pc_a, pc_m


# -- one side explored against a free boundary ---------------------------------


def _pending(config: Configuration, feed: AppMessage) -> bool:
    for am in config.top.apps:
        if am.dest == feed.dest and am.method == feed.method:
            return True
    return False


# silent, touch only their own site, and cannot be disabled by any other move
_COMMUTING = frozenset({"Request", "SendIn", "SendOut", "CreateAA", "CreateWSO", "CreateWSs"})


def _ample(pc: PartialConfiguration, config, insts):
    """A silent instance whose order against every other move is inaudible.

    Local progress, signal routing, and ejections nobody observes commute
    with the rest of the configuration; running the first such instance
    alone reaches the same visible behaviour as fanning out.  Delivery
    choices and observable ejections stay branching."""
    apps = None
    for inst in insts:
        if inst.rule_id in _COMMUTING:
            return inst
        if apps is None:
            apps = {m.canon(): m for m in config.top.apps}
        if inst.rule_id == "Compute":
            if sum(1 for j in insts if j.site == inst.site) == 1:
                return inst
        elif inst.rule_id == "Out":
            am = apps[inst.payload]
            if not _emit_visible(pc, am):
                return inst
        elif inst.rule_id in ("ReadyDeliver", "SetPartner"):
            # an unraced delivery whose guard can never turn it away: the
            # receiving order is the one choice the boundary could hear,
            # and here there is no choice
            if sum(1 for j in insts if j.site == inst.site) != 1:
                continue
            am = apps[inst.payload]
            target = config.top.actor(am.dest)
            d = pc.program.definition(target.behavior)
            m = d.method(am.method)
            if m is not None and m.guard == ast.TRUE:
                return inst
    return None


def _edges(pc: PartialConfiguration, config, env_left, alloc, *, free_peer=True, reduced=True):
    """Moves from here: (step, ejected message or None, next state).

    With reduction on, one commuting silent move is taken alone; the full
    fan-out only opens where ordering can be heard at the boundary."""
    insts = enabled_rules(pc.program, config)
    if reduced:
        inst = _ample(pc, config, insts)
        if inst is not None:
            a2 = alloc.clone()
            nxt, _produced, artifacts = apply_instance(pc.program, config, inst, a2)
            am = artifacts[0] if inst.rule_id == "Out" else None
            return [(silent(pc.boundary), am, nxt, env_left, a2)], True
    moves = []
    for inst in insts:
        a2 = alloc.clone()
        nxt, _produced, artifacts = apply_instance(pc.program, config, inst, a2)
        if inst.rule_id == "Out":
            am = artifacts[0]
            if _emit_visible(pc, am):
                step = _classify_message(pc, am)
            else:
                step = silent(pc.boundary)
            moves.append((step, am, nxt, env_left, a2))
        else:
            moves.append((silent(pc.boundary), None, nxt, env_left, a2))
    for i in sorted(env_left):
        feed = pc.env_feeds[i]
        nxt = rules.boundary_in(config, feed)
        moves.append((silent(pc.boundary), None, nxt, env_left - {i}, alloc.clone()))
    if free_peer:
        for feed in pc.peer_feeds:
            if _pending(config, feed):
                continue
            nxt = rules.boundary_in(config, feed)
            step = _classify_message(pc, feed)
            moves.append((step, None, nxt, env_left, alloc.clone()))
    return moves, False


def _start(pc: PartialConfiguration):
    return (pc.config, frozenset(range(len(pc.env_feeds))), pc.alloc.clone())


def _state_key(config: Configuration, env_left) -> Tuple[str, FrozenSet[int]]:
    return (config.canon(), env_left)


def interaction_semantics(
    pc: PartialConfiguration, depth: int, *, max_states: int = _MAX_STATES
) -> FrozenSet[InteractionSequence]:
    """All boundary behaviours within the given number of visible steps.

    Peer calls are consumed freely, silent neighbours feed once each.
    Runs of internal work compress to a single silent marker before the
    next visible step; a sequence never ends on a marker.
    """
    config0, env0, alloc0 = _start(pc)
    found: Set[Tuple[InteractionStep, ...]] = {()}
    seen: Set[Tuple] = set()
    queue = deque([(config0, env0, alloc0, (), False)])
    visits = 0
    while queue:
        config, env_left, alloc, steps, quiet = queue.popleft()
        key = (_state_key(config, env_left), steps, quiet)
        if key in seen:
            continue
        seen.add(key)
        visits += 1
        if visits > max_states:
            raise SilentDivergence(
                f"more than {max_states} states within depth {depth}"
            )
        moves, _det = _edges(pc, config, env_left, alloc, reduced=False)
        for step, _am, nxt, env2, a2 in moves:
            if step.visible:
                if sum(1 for s in steps if s.visible) >= depth:
                    continue
                steps2 = steps + ((silent(pc.boundary),) if quiet else ()) + (step,)
                found.add(steps2)
                queue.append((nxt, env2, a2, steps2, False))
            else:
                queue.append((nxt, env2, a2, steps, True))
    return frozenset(InteractionSequence(s) for s in found)


def admits_sequence(
    pc: PartialConfiguration,
    seq: InteractionSequence,
    *,
    max_states: int = _MAX_STATES,
) -> bool:
    """Whether the side can produce exactly these visible steps, in
    order, with any amount of internal work in between."""
    want = [s.key() for s in seq if s.visible]
    config0, env0, alloc0 = _start(pc)
    seen: Set[Tuple] = set()
    queue = deque([(config0, env0, alloc0, 0)])
    visits = 0
    while queue:
        config, env_left, alloc, idx = queue.popleft()
        if idx == len(want):
            return True
        key = (_state_key(config, env_left), idx)
        if key in seen:
            continue
        seen.add(key)
        visits += 1
        if visits > max_states:
            raise SilentDivergence(f"more than {max_states} states explored")
        moves, _det = _edges(pc, config, env_left, alloc)
        for step, _am, nxt, env2, a2 in moves:
            if step.visible:
                if step.key() == want[idx]:
                    queue.append((nxt, env2, a2, idx + 1))
            else:
                queue.append((nxt, env2, a2, idx))
    return False


def _solo_labels(
    pc: PartialConfiguration, depth: int, *, max_states: int = _MAX_STATES
) -> Tuple[FrozenSet[Tuple[str, str]], int]:
    """Visible step keys reachable alone within depth, and states seen."""
    config0, env0, alloc0 = _start(pc)
    labels: Set[Tuple[str, str]] = set()
    best: Dict[Tuple, int] = {_state_key(config0, env0): 0}
    queue = deque([(config0, env0, alloc0, 0)])
    visits = 0
    while queue:
        config, env_left, alloc, count = queue.popleft()
        if best.get(_state_key(config, env_left), depth + 1) < count:
            continue
        visits += 1
        if visits > max_states:
            raise SilentDivergence(f"more than {max_states} states within depth {depth}")
        moves, _det = _edges(pc, config, env_left, alloc)
        for step, _am, nxt, env2, a2 in moves:
            if step.visible:
                if count >= depth:
                    continue
                labels.add(step.key())
                c2 = count + 1
            else:
                c2 = count
            k2 = _state_key(nxt, env2)
            if best.get(k2, depth + 1) <= c2:
                continue
            best[k2] = c2
            if c2 == count:
                queue.appendleft((nxt, env2, a2, c2))
            else:
                queue.append((nxt, env2, a2, c2))
    return frozenset(labels), visits


# -- compatibility over the synchronized product --------------------------------


@dataclass(frozen=True)
class Compatibility:
    """Outcome of matching two sides against each other."""

    ok: bool
    depth: int
    explored: int
    missing: Tuple[str, ...] = ()
    witness: Optional[InteractionSequence] = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Verdict:
    kind: str  # Composable | Incompatible | MemberOverlap
    depth: int
    explored: int
    witness: Optional[InteractionSequence] = None
    missing: Tuple[str, ...] = ()
    overlap: Tuple[Address, ...] = ()


def default_depth(pc_a: PartialConfiguration, pc_m: PartialConfiguration) -> int:
    """Room for one request and one response per declared method."""
    d_a = pc_a.program.definition(pc_a.behavior)
    d_m = pc_m.program.definition(pc_m.behavior)
    return 2 * (len(d_a.methods) + len(d_m.methods))


def _bag_key(bag: Tuple[Record, ...]) -> Tuple[str, ...]:
    return tuple(sorted(canon_value(c) for c in bag))


def _consume_edges(pc: PartialConfiguration, config, bag: Tuple[Record, ...]):
    """Deliverable calls waiting in the other side's out-bag."""
    out = []
    taken = set()
    for i, call in enumerate(bag):
        ck = canon_value(call)
        if ck in taken:
            continue
        taken.add(ck)
        feed = AppMessage(dest=pc.anchor, src=pc.gate, value=call)
        if _pending(config, feed):
            continue
        nxt = rules.boundary_in(config, feed)
        step = _classify_message(pc, feed)
        out.append((step, bag[:i] + bag[i + 1 :], nxt))
    return out


def _product_edges(pc_a, pc_m, state):
    """Moves of the two-sided product; consumes draw from the bags.

    A commuting silent move on either side preempts the fan-out exactly
    as it does solo: it touches nothing the other side can read."""
    cfg_a, cfg_m, env_a, env_m, bag_am, bag_ma, al_a, al_m = state
    edges_a, det_a = _edges(pc_a, cfg_a, env_a, al_a, free_peer=False)
    if det_a:
        step, am, nxt, env2, a2 = edges_a[0]
        bag2 = bag_am + (am.value,) if (am is not None and am.dest == pc_a.gate) else bag_am
        return [("A", step, (nxt, cfg_m, env2, env_m, bag2, bag_ma, a2, al_m))]
    edges_m, det_m = _edges(pc_m, cfg_m, env_m, al_m, free_peer=False)
    if det_m:
        step, am, nxt, env2, a2 = edges_m[0]
        bag2 = bag_ma + (am.value,) if (am is not None and am.dest == pc_m.gate) else bag_ma
        return [("M", step, (cfg_a, nxt, env_a, env2, bag_am, bag2, al_a, a2))]
    moves = []
    for step, am, nxt, env2, a2 in edges_a:
        bag2 = bag_am + (am.value,) if (am is not None and am.dest == pc_a.gate) else bag_am
        moves.append(("A", step, (nxt, cfg_m, env2, env_m, bag2, bag_ma, a2, al_m)))
    for step, am, nxt, env2, a2 in edges_m:
        bag2 = bag_ma + (am.value,) if (am is not None and am.dest == pc_m.gate) else bag_ma
        moves.append(("M", step, (cfg_a, nxt, env_a, env2, bag_am, bag2, al_a, a2)))
    for step, bag2, nxt in _consume_edges(pc_a, cfg_a, bag_ma):
        moves.append(("A", step, (nxt, cfg_m, env_a, env_m, bag_am, bag2, al_a, al_m)))
    for step, bag2, nxt in _consume_edges(pc_m, cfg_m, bag_am):
        moves.append(("M", step, (cfg_a, nxt, env_a, env_m, bag2, bag_ma, al_a, al_m)))
    return moves


def _product_key(state) -> Tuple:
    cfg_a, cfg_m, env_a, env_m, bag_am, bag_ma, _al_a, _al_m = state
    return (cfg_a.canon(), cfg_m.canon(), env_a, env_m, _bag_key(bag_am), _bag_key(bag_ma))


def _greedy_witness(pc_a, pc_m, depth, side, missing_step, *, max_states):
    """A deterministic product run projected on the failing side, with
    the unmatched step appended."""
    state = (
        pc_a.config, pc_m.config,
        frozenset(range(len(pc_a.env_feeds))), frozenset(range(len(pc_m.env_feeds))),
        (), (), pc_a.alloc.clone(), pc_m.alloc.clone(),
    )
    history: List[Tuple[str, InteractionStep]] = []
    pc_fail = pc_a if side == "A" else pc_m
    for _ in range(max_states):
        if sum(1 for _s, st in history if st.visible) >= depth:
            break
        moves = _product_edges(pc_a, pc_m, state)
        if not moves:
            break
        moves.sort(key=lambda m: (m[1].visible, m[0], m[1].label()))
        tag, step, state = moves[0]
        if step.visible:
            history.append((tag, step))
    prefix = tuple(st for tag, st in history if tag == side)
    return InteractionSequence(prefix + (missing_step,)), pc_fail


def _missing_to_step(pc: PartialConfiguration, shape: str, text: str) -> InteractionStep:
    d = pc.program.definition(pc.behavior)
    m = d.method(text)
    args = tuple(_DEFAULTS.get(pt) for pt, _pn in m.params) if m else ()
    return InteractionStep(
        boundary=pc.boundary,
        shape=shape,
        outer=pc.peer,
        inner=pc.anchor,
        payload=call_record(text, args),
    )


def compatible(
    pc_a: PartialConfiguration,
    pc_m: PartialConfiguration,
    depth: Optional[int] = None,
    *,
    max_states: int = _MAX_STATES,
) -> Compatibility:
    """Whether each side's solo behaviour survives being fed by the other.

    The two sides run in one product where every emission toward the
    gate lands in the other side's in-bag and consumes draw only from
    that bag.  The sides are compatible when every visible step either
    side can take alone is realized somewhere in the product.
    """
    if _FLIP[pc_a.boundary] != pc_m.boundary:
        raise BoundaryMismatch(
            f"{pc_a.boundary} pairs with {_FLIP[pc_a.boundary]}, not {pc_m.boundary}"
        )
    if depth is None:
        depth = default_depth(pc_a, pc_m)
    req_a, n_a = _solo_labels(pc_a, depth, max_states=max_states)
    req_m, n_m = _solo_labels(pc_m, depth, max_states=max_states)
    got_a: Set[Tuple[str, str]] = set()
    got_m: Set[Tuple[str, str]] = set()

    start = (
        pc_a.config, pc_m.config,
        frozenset(range(len(pc_a.env_feeds))), frozenset(range(len(pc_m.env_feeds))),
        (), (), pc_a.alloc.clone(), pc_m.alloc.clone(),
    )
    best: Dict[Tuple, int] = {_product_key(start): 0}
    stack: List[Tuple] = [(start, 0)]
    explored = 0
    covered = req_a <= got_a and req_m <= got_m
    # depth-first so a full conversation is walked before its variants
    while stack and not covered:
        state, count = stack.pop()
        if best.get(_product_key(state), depth + 1) < count:
            continue
        explored += 1
        if explored > max_states:
            raise SilentDivergence(f"more than {max_states} product states")
        for tag, step, nxt in _product_edges(pc_a, pc_m, state):
            if step.visible:
                if count >= depth:
                    continue
                (got_a if tag == "A" else got_m).add(step.key())
                c2 = count + 1
            else:
                c2 = count
            k2 = _product_key(nxt)
            if best.get(k2, depth + 1) <= c2:
                continue
            best[k2] = c2
            stack.append((nxt, c2))
        if req_a <= got_a and req_m <= got_m:
            covered = True
    explored += n_a + n_m
    if covered:
        return Compatibility(ok=True, depth=depth, explored=explored)
    missing = sorted(
        [("A", shape, text) for shape, text in req_a - got_a]
        + [("M", shape, text) for shape, text in req_m - got_m],
        key=lambda t: (t[2], t[1], t[0]),
    )
    side, shape, text = missing[0]
    pc_fail = pc_a if side == "A" else pc_m
    step = _missing_to_step(pc_fail, shape, text)
    witness, _pc = _greedy_witness(
        pc_a, pc_m, depth, side, step, max_states=max_states
    )
    labels = tuple(
        f"{'left' if s == 'A' else 'right'}:{sh}({tx})" for s, sh, tx in missing
    )
    return Compatibility(
        ok=False, depth=depth, explored=explored, missing=labels, witness=witness
    )


def composable(
    pc_a: PartialConfiguration,
    pc_m: PartialConfiguration,
    depth: Optional[int] = None,
    *,
    max_states: int = _MAX_STATES,
) -> Verdict:
    """Disjoint members plus mutual compatibility, reported distinctly."""
    overlap = tuple(sorted(pc_a.members() & pc_m.members(), key=lambda a: a.id))
    if overlap:
        return Verdict(kind="MemberOverlap", depth=depth or 0, explored=0, overlap=overlap)
    outcome = compatible(pc_a, pc_m, depth, max_states=max_states)
    if outcome.ok:
        return Verdict(kind="Composable", depth=outcome.depth, explored=outcome.explored)
    return Verdict(
        kind="Incompatible",
        depth=outcome.depth,
        explored=outcome.explored,
        witness=outcome.witness,
        missing=outcome.missing,
    )
