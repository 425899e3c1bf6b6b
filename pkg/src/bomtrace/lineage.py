"""Lineage queries over the component/assembly graph.

Edges run input component -> assembly -> output component, for every
assembly belonging to a stored BoM. Components shared between BoMs stitch
their subgraphs together, so a global query crosses experiment boundaries.
Tracing walks edges backwards to origins (where-from); tracking walks
forwards to consumers (where-used).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .ledger import Anchor
from .model import Assembly, Bom, ComponentRecord, graph_edges
from .runtime import Observation

GLOBAL_SCOPE = "global"


@dataclass(frozen=True)
class LineageGraph:
    origin: str
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "origin": self.origin,
            "nodes": sorted(self.nodes),
            "edges": sorted([src, dst] for src, dst in self.edges),
        }


@dataclass(frozen=True)
class UseSite:
    bom_id: str
    assembly_id: str
    role: str  # "input" | "output"

    def to_dict(self) -> dict[str, str]:
        return {"bom_id": self.bom_id, "assembly_id": self.assembly_id, "role": self.role}


@dataclass(frozen=True)
class ComponentUses:
    static: tuple[UseSite, ...]
    dynamic: tuple[str, ...]  # BoL ids

    def to_dict(self) -> dict[str, Any]:
        return {
            "static": [site.to_dict() for site in self.static],
            "dynamic": list(self.dynamic),
        }


@dataclass(frozen=True)
class LineageReport:
    bol_id: str
    static_graph: LineageGraph
    dynamic: dict[str, tuple[Observation, ...]]
    anchor: Anchor | None
    bom_snapshot: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "bol_id": self.bol_id,
            "static_graph": self.static_graph.to_dict(),
            "dynamic": {
                cid: [obs.to_dict() for obs in observations]
                for cid, observations in self.dynamic.items()
            },
            "bom_snapshot": self.bom_snapshot,
        }
        if self.anchor is not None:
            doc["anchor"] = self.anchor.to_dict()
        return doc


def _adjacency(edges: Iterable[tuple[str, str]], reverse: bool) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {}
    for src, dst in edges:
        if reverse:
            adj.setdefault(dst, set()).add(src)
        else:
            adj.setdefault(src, set()).add(dst)
    return adj


def closure(edges: set[tuple[str, str]], origin: str, backward: bool) -> LineageGraph:
    """Origin plus everything reachable along (or against) the edges."""
    adj = _adjacency(edges, reverse=backward)
    reached = {origin}
    frontier = [origin]
    while frontier:
        node = frontier.pop()
        for nxt in adj.get(node, ()):
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    induced = frozenset(e for e in edges if e[0] in reached and e[1] in reached)
    return LineageGraph(origin=origin, nodes=frozenset(reached), edges=induced)


def component_uses(
    component_id: str,
    boms: Iterable[Bom],
    assemblies_by_id: Mapping[str, Assembly],
    bol_ids_containing: Iterable[str],
) -> ComponentUses:
    sites = []
    for bom in boms:
        for aid in bom.assemblies:
            assembly = assemblies_by_id.get(aid)
            if assembly is None:
                continue
            if component_id in assembly.inputs:
                sites.append(UseSite(bom.id, aid, "input"))
            if component_id in assembly.outputs:
                sites.append(UseSite(bom.id, aid, "output"))
    sites.sort(key=lambda s: (s.bom_id, s.assembly_id, s.role))
    return ComponentUses(static=tuple(sites), dynamic=tuple(sorted(bol_ids_containing)))


# -- nested detail views -------------------------------------------------


def assembly_detail(
    assembly: Assembly, components: Mapping[str, ComponentRecord]
) -> dict[str, Any]:
    doc: dict[str, Any] = {"id": assembly.id, "name": assembly.name}
    if assembly.description is not None:
        doc["description"] = assembly.description
    for key, members in (
        ("inputData", assembly.input_data),
        ("inputArtifacts", assembly.input_artifacts),
        ("outputData", assembly.output_data),
        ("outputArtifacts", assembly.output_artifacts),
    ):
        doc[key] = [components[cid].to_dict() for cid in members]
    return doc


def bom_detail(
    bom: Bom,
    assemblies_by_id: Mapping[str, Assembly],
    components: Mapping[str, ComponentRecord],
) -> dict[str, Any]:
    """BoM with assemblies and component records expanded inline."""
    doc: dict[str, Any] = {"id": bom.id, "name": bom.name}
    if bom.description is not None:
        doc["description"] = bom.description
    doc["assemblies"] = [
        assembly_detail(assemblies_by_id[aid], components) for aid in bom.assemblies
    ]
    doc["frozen"] = bom.frozen
    doc["created_at"] = bom.created_at
    return doc


def bom_static_graph(bom: Bom, assemblies: Iterable[Assembly]) -> LineageGraph:
    """Full graph of one BoM, with the BoM id itself as the origin node."""
    assemblies = list(assemblies)
    edges = graph_edges(assemblies)
    nodes = {bom.id}
    for assembly in assemblies:
        nodes.add(assembly.id)
        nodes.update(assembly.components)
    return LineageGraph(origin=bom.id, nodes=frozenset(nodes), edges=frozenset(edges))
