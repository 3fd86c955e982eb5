"""Kind-constraint checks over parsed behaviour definitions.

Validation never raises: it returns a tuple of diagnostics, empty when the
program is well formed.  Each diagnostic carries a stable code so callers
can match on it without parsing the message.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from . import syntax as ast

# creator kind -> the one kind it may create
CREATE_PAIRS = {"WSO": "AA", "WS": "WSO", "WSC": "WS"}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.code}: {self.message}"


def _methods(d: ast.BehaviorDefinition) -> List[ast.MethodDefinition]:
    out = list(d.methods)
    if d.init is not None:
        out.append(d.init)
    return out


def _local_names(d: ast.BehaviorDefinition, m: ast.MethodDefinition) -> set:
    names = {l.name for l in d.links}
    names |= {v.name for v in d.variables}
    names |= {p for _, p in m.params}
    for meth in _methods(d):
        for a in meth.body:
            if isinstance(a, ast.CreateAct):
                names.add(a.bind_to)
    return names


def validate(defs: Tuple[ast.BehaviorDefinition, ...]) -> Tuple[Diagnostic, ...]:
    diags: List[Diagnostic] = []
    by_name: Dict[str, ast.BehaviorDefinition] = {}
    for d in defs:
        if d.name in by_name:
            diags.append(
                Diagnostic("DuplicateBehavior", f"behaviour {d.name!r} defined twice",
                           d.loc.line, d.loc.col)
            )
        else:
            by_name[d.name] = d
    for d in defs:
        diags.extend(_check_definition(d, by_name))
    return tuple(diags)


def _check_definition(
    d: ast.BehaviorDefinition, by_name: Dict[str, ast.BehaviorDefinition]
) -> List[Diagnostic]:
    diags: List[Diagnostic] = []

    if d.kind == "AA":
        wso_links = [l for l in d.links if l.kind == "WSO"]
        if len(wso_links) != 1 or len(d.links) != 1:
            diags.append(
                Diagnostic("AAWsoLink",
                           f"AA {d.name!r} must declare exactly one WSO reference",
                           d.loc.line, d.loc.col)
            )
    if d.kind == "WS":
        if d.method("setPartner") is None:
            diags.append(
                Diagnostic("MissingSetPartner",
                           f"WS {d.name!r} must declare a setPartner method",
                           d.loc.line, d.loc.col)
            )
    if d.kind == "WSC":
        ws_links = [l for l in d.links if l.kind == "WS"]
        if len(ws_links) != 2 or len(d.links) != 2:
            diags.append(
                Diagnostic("WscLinkShape",
                           f"WSC {d.name!r} must declare exactly two WS references",
                           d.loc.line, d.loc.col)
            )
        creates = [
            a for m in _methods(d) for a in m.body if isinstance(a, ast.CreateAct)
        ]
        if creates and len(creates) != 2:
            diags.append(
                Diagnostic("WscCreatePair",
                           f"WSC {d.name!r} must create its two partner services together",
                           d.loc.line, d.loc.col)
            )

    for m in _methods(d):
        names = _local_names(d, m)
        for a in m.body:
            diags.extend(_check_action(d, m, a, names, by_name))
    return diags


def _check_action(
    d: ast.BehaviorDefinition,
    m: ast.MethodDefinition,
    a: ast.Action,
    names: set,
    by_name: Dict[str, ast.BehaviorDefinition],
) -> List[Diagnostic]:
    diags: List[Diagnostic] = []
    where = f"in {d.name}.{m.name}"

    if isinstance(a, ast.CreateAct):
        if d.kind == "AA":
            diags.append(
                Diagnostic("AACannotCreate",
                           f"AA bodies may not create actors ({where})",
                           a.loc.line, a.loc.col)
            )
            return diags
        target = by_name.get(a.behavior)
        if target is None:
            diags.append(
                Diagnostic("UnknownBehavior",
                           f"create names undefined behaviour {a.behavior!r} ({where})",
                           a.loc.line, a.loc.col)
            )
            return diags
        want = CREATE_PAIRS.get(d.kind)
        if target.kind != want:
            diags.append(
                Diagnostic("CreateKindMismatch",
                           f"{d.kind} may create {want} actors only, "
                           f"{a.behavior!r} is {target.kind} ({where})",
                           a.loc.line, a.loc.col)
            )
        bound = d.link(a.bind_to)
        if bound is not None and bound.kind != target.kind:
            diags.append(
                Diagnostic("CreateKindMismatch",
                           f"create binds {target.kind} to {bound.kind} "
                           f"reference {a.bind_to!r} ({where})",
                           a.loc.line, a.loc.col)
            )
    elif isinstance(a, ast.SetPartnerCall):
        if d.kind != "WSC":
            diags.append(
                Diagnostic("SetPartnerOutsideWSC",
                           f"only a WSC may send setPartner ({where})",
                           a.loc.line, a.loc.col)
            )
        if a.target not in names and a.target != "self":
            diags.append(
                Diagnostic("UnresolvedSendTarget",
                           f"send target {a.target!r} is not declared ({where})",
                           a.loc.line, a.loc.col)
            )
    elif isinstance(a, ast.SendAct):
        if a.target not in names and a.target != "self":
            diags.append(
                Diagnostic("UnresolvedSendTarget",
                           f"send target {a.target!r} is not declared ({where})",
                           a.loc.line, a.loc.col)
            )
    elif isinstance(a, ast.Assign):
        if a.name not in names:
            diags.append(
                Diagnostic("UndeclaredName",
                           f"assignment to undeclared name {a.name!r} ({where})",
                           a.loc.line, a.loc.col)
            )
    return diags
