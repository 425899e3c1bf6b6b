"""Gateway facade: every read and mutation over one data directory.

Mutations are serialized by a single writer lock and commit atomically —
an operation's record writes and its ledger entries go to the store in one
transaction. Reads take the same lock briefly so they observe committed
state only.

Timestamps are integer milliseconds since the Unix epoch. Library callers
may pass ``now`` explicitly (tests do); otherwise the gateway's clock is
used, which defaults to wall time.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Iterable

from . import ids as idmod
from . import ledger as ledgermod
from . import lineage, model, runtime
from .canonical import canonical_bytes
from .errors import (
    AlreadySealed,
    BolNotSealed,
    BolSealed,
    BomFrozen,
    ComponentNotInBom,
    DanglingRef,
    NotInScope,
    UnknownBol,
    UnknownBom,
    UnknownId,
    ValidationFailed,
)
from .ledger import Anchor, InclusionProof, Ledger
from .model import Assembly, Bom, ComponentKind, ComponentRecord, ValidationReport
from .runtime import Bol, BolStatus, Observation, ShadowItem
from .store import (
    KIND_ASSEMBLY,
    KIND_BOL,
    KIND_BOM,
    KIND_COMPONENT,
    Store,
    WriteOp,
)

_UNSET = object()


def wall_clock_ms() -> int:
    return int(time.time() * 1000)


class Gateway:
    def __init__(
        self,
        data_dir: str | Path,
        deterministic_ids: bool = False,
        clock: Callable[[], int] | None = None,
    ):
        self.store = Store(data_dir)
        self.ledger = Ledger(self.store)
        self.ids = idmod.IdGenerator(
            deterministic=deterministic_ids, start=self.store.record_count + 1
        )
        self._clock = clock or wall_clock_ms
        self._lock = threading.RLock()

    def close(self) -> None:
        self.store.close()

    def _now(self, now: int | None) -> int:
        return self._clock() if now is None else now

    # -- record access ---------------------------------------------------

    def _load(self, key: str, kind: str, parser) -> Any | None:
        if not self.store.exists(key):
            return None
        record = self.store.get(key)
        if record.kind != kind:
            return None
        return parser(json.loads(record.data.decode("utf-8")))

    def get_component(self, component_id: str) -> ComponentRecord | None:
        return self._load(component_id, KIND_COMPONENT, ComponentRecord.from_dict)

    def get_assembly(self, assembly_id: str) -> Assembly | None:
        return self._load(assembly_id, KIND_ASSEMBLY, Assembly.from_dict)

    def get_bom(self, bom_id: str) -> Bom | None:
        return self._load(bom_id, KIND_BOM, Bom.from_dict)

    def get_bol(self, bol_id: str) -> Bol | None:
        return self._load(bol_id, KIND_BOL, Bol.from_dict)

    def _require_component(self, component_id: str) -> ComponentRecord:
        component = self.get_component(component_id)
        if component is None:
            raise UnknownId(f"unknown component {component_id}", detail={"id": component_id})
        return component

    def _require_bom(self, bom_id: str) -> Bom:
        bom = self.get_bom(bom_id)
        if bom is None:
            raise UnknownBom(f"unknown BoM {bom_id}", detail={"id": bom_id})
        return bom

    def _require_bol(self, bol_id: str) -> Bol:
        bol = self.get_bol(bol_id)
        if bol is None:
            raise UnknownBol(f"unknown BoL {bol_id}", detail={"id": bol_id})
        return bol

    def _all_boms(self) -> list[Bom]:
        return [
            Bom.from_dict(json.loads(r.data.decode("utf-8")))
            for r in self.store.scan(KIND_BOM)
        ]

    def _all_assemblies(self) -> dict[str, Assembly]:
        return {
            r.key: Assembly.from_dict(json.loads(r.data.decode("utf-8")))
            for r in self.store.scan(KIND_ASSEMBLY)
        }

    def _all_bols(self) -> list[Bol]:
        return [
            Bol.from_dict(json.loads(r.data.decode("utf-8")))
            for r in self.store.scan(KIND_BOL)
        ]

    # -- core model mutations ---------------------------------------------

    def create_component(
        self,
        kind: ComponentKind | str,
        name: str,
        description: str | None = None,
        access_metadata: Any = None,
    ) -> ComponentRecord:
        kind = ComponentKind(kind)
        model.require_name(name)
        metadata = model.normalize_metadata(access_metadata)
        with self._lock:
            component = ComponentRecord(
                id=self.ids.new_id(kind.id_prefix),
                kind=kind,
                name=name,
                description=description,
                access_metadata=metadata,
            )
            self.store.put(
                component.id,
                KIND_COMPONENT,
                canonical_bytes(component.to_dict()),
                expected_revision=0,
            )
            # read back so the caller holds exactly the stored (canonical) form
            return self.get_component(component.id)

    def create_assembly(
        self,
        name: str,
        description: str | None = None,
        input_data: Iterable[str] = (),
        input_artifacts: Iterable[str] = (),
        output_data: Iterable[str] = (),
        output_artifacts: Iterable[str] = (),
    ) -> Assembly:
        model.require_name(name)
        with self._lock:
            model.check_assembly_lists(
                input_data, input_artifacts, output_data, output_artifacts,
                self.get_component,
            )
            assembly = Assembly(
                id=self.ids.new_id(idmod.ASSEMBLY),
                name=name,
                description=description,
                input_data=tuple(input_data),
                input_artifacts=tuple(input_artifacts),
                output_data=tuple(output_data),
                output_artifacts=tuple(output_artifacts),
            )
            self.store.put(
                assembly.id,
                KIND_ASSEMBLY,
                canonical_bytes(assembly.to_dict()),
                expected_revision=0,
            )
            return self.get_assembly(assembly.id)

    def create_bom(
        self,
        name: str,
        description: str | None = None,
        assembly_ids: Iterable[str] = (),
        now: int | None = None,
    ) -> Bom:
        model.require_name(name)
        assembly_ids = tuple(assembly_ids)
        with self._lock:
            for aid in assembly_ids:
                if self.get_assembly(aid) is None:
                    raise DanglingRef(f"unknown assembly {aid}", detail={"id": aid})
            report = self._validate(assembly_ids, candidate_bom_id=None)
            if not report.ok:
                raise ValidationFailed(
                    "BoM structure is invalid", detail={"report": report.to_dict()}
                )
            bom = Bom(
                id=self.ids.new_id(idmod.BOM),
                name=name,
                description=description,
                assemblies=assembly_ids,
                frozen=False,
                created_at=self._now(now),
            )
            self.store.put(
                bom.id, KIND_BOM, canonical_bytes(bom.to_dict()), expected_revision=0
            )
            return self.get_bom(bom.id)

    def define_bom(self, manifest_doc: dict[str, Any], now: int | None = None) -> Bom:
        """Create a BoM, plus any inline components and assemblies, atomically."""
        from .manifest import define_bom as compile_manifest

        with self._lock:
            bom = compile_manifest(self, manifest_doc, self._now(now))
            return self.get_bom(bom.id)

    def update_bom(
        self,
        bom_id: str,
        name: str | None = None,
        description: Any = _UNSET,
        assembly_ids: Iterable[str] | None = None,
        expected_revision: int | None = None,
    ) -> Bom:
        """Replace structural fields of an unfrozen BoM."""
        with self._lock:
            bom = self._require_bom(bom_id)
            if bom.frozen:
                raise BomFrozen(
                    f"BoM {bom_id} is frozen (it has been instantiated)",
                    detail={"id": bom_id},
                )
            if name is not None:
                model.require_name(name)
                bom = replace(bom, name=name)
            if description is not _UNSET:
                bom = replace(bom, description=description)
            if assembly_ids is not None:
                new_ids = tuple(assembly_ids)
                for aid in new_ids:
                    if self.get_assembly(aid) is None:
                        raise DanglingRef(f"unknown assembly {aid}", detail={"id": aid})
                report = self._validate(new_ids, candidate_bom_id=bom_id)
                if not report.ok:
                    raise ValidationFailed(
                        "BoM structure is invalid", detail={"report": report.to_dict()}
                    )
                bom = replace(bom, assemblies=new_ids)
            current = self.store.get(bom_id).revision
            self.store.put(
                bom_id,
                KIND_BOM,
                canonical_bytes(bom.to_dict()),
                expected_revision=expected_revision
                if expected_revision is not None
                else current,
            )
            return self.get_bom(bom_id)

    # -- validation ---------------------------------------------------------

    def _validate(
        self, candidate_assembly_ids: Iterable[str], candidate_bom_id: str | None
    ) -> ValidationReport:
        return model.validate_structure(
            candidate_assembly_ids,
            candidate_bom_id,
            self._all_assemblies(),
            self._all_boms(),
            self.get_component,
        )

    def validate_bom(
        self,
        bom_id: str | None = None,
        assembly_ids: Iterable[str] | None = None,
    ) -> ValidationReport:
        """Validate a stored BoM, or a candidate assembly list."""
        with self._lock:
            if bom_id is not None:
                bom = self._require_bom(bom_id)
                return self._validate(bom.assemblies, candidate_bom_id=bom_id)
            return self._validate(tuple(assembly_ids or ()), candidate_bom_id=None)

    # -- BoL runtime ---------------------------------------------------------

    def instantiate_bol(
        self, bom_id: str, run_label: str | None = None, now: int | None = None
    ) -> Bol:
        with self._lock:
            bom = self._require_bom(bom_id)
            report = self._validate(bom.assemblies, candidate_bom_id=bom_id)
            if not report.ok:
                raise ValidationFailed(
                    "BoM failed validation", detail={"report": report.to_dict()}
                )
            assemblies = self._all_assemblies()
            components = runtime.distinct_components(
                assemblies[aid] for aid in bom.assemblies
            )
            bol = Bol(
                id=self.ids.new_id(idmod.BOL),
                bom_id=bom_id,
                run_label=run_label,
                created_at=self._now(now),
                status=BolStatus.OPEN,
                shadow_items={cid: ShadowItem(component_id=cid) for cid in components},
            )
            writes = []
            if not bom.frozen:
                frozen = replace(bom, frozen=True)
                writes.append(
                    WriteOp(
                        bom_id,
                        KIND_BOM,
                        canonical_bytes(frozen.to_dict()),
                        expected_revision=self.store.get(bom_id).revision,
                    )
                )
            writes.append(
                WriteOp(
                    bol.id, KIND_BOL, canonical_bytes(bol.to_dict()), expected_revision=0
                )
            )
            payload: dict[str, Any] = {
                "bol_id": bol.id,
                "bom_id": bom_id,
                "created_at": bol.created_at,
            }
            if run_label is not None:
                payload["run_label"] = run_label
            self.ledger.append_entry(
                ledgermod.BOL_CREATED, canonical_bytes(payload), extra_writes=writes
            )
            return self.get_bol(bol.id)

    def resolve_access(self, bol_id: str, component_id: str) -> dict[str, str]:
        with self._lock:
            bol = self._require_bol(bol_id)
            if component_id not in bol.shadow_items:
                raise ComponentNotInBom(
                    f"component {component_id} is not part of BoL {bol_id}'s BoM",
                    detail={"bol_id": bol_id, "component_id": component_id},
                )
            return dict(self._require_component(component_id).access_metadata)

    def record_observation(
        self,
        bol_id: str,
        component_id: str,
        payload: str,
        note: str | None = None,
        now: int | None = None,
    ) -> Observation:
        return self.record_observation_indexed(bol_id, component_id, payload, note, now)[0]

    def record_observation_indexed(
        self,
        bol_id: str,
        component_id: str,
        payload: str,
        note: str | None = None,
        now: int | None = None,
    ) -> tuple[Observation, int]:
        """Append an observation; also returns its index within the shadow item."""
        if not isinstance(payload, str):
            raise TypeError("observation payload must be a string")
        with self._lock:
            bol = self._require_bol(bol_id)
            if bol.status is BolStatus.SEALED:
                raise BolSealed(
                    f"BoL {bol_id} is sealed; no further observations",
                    detail={"id": bol_id},
                )
            item = bol.shadow_items.get(component_id)
            if item is None:
                raise ComponentNotInBom(
                    f"component {component_id} is not part of BoL {bol_id}'s BoM",
                    detail={"bol_id": bol_id, "component_id": component_id},
                )
            recorded_at = self._now(now)
            if item.observations:
                # timestamps within a shadow item never run backwards
                recorded_at = max(recorded_at, item.observations[-1].recorded_at)
            observation = Observation(recorded_at=recorded_at, payload=payload, note=note)
            index = len(item.observations)
            updated = dict(bol.shadow_items)
            updated[component_id] = ShadowItem(
                component_id=component_id,
                observations=item.observations + (observation,),
            )
            new_bol = replace(bol, shadow_items=updated)
            record_bytes = runtime.observation_record_bytes(
                bol_id, component_id, index, observation
            )
            self.ledger.append_entry(
                ledgermod.OBSERVATION_RECORDED,
                record_bytes,
                extra_writes=[
                    WriteOp(
                        bol_id,
                        KIND_BOL,
                        canonical_bytes(new_bol.to_dict()),
                        expected_revision=self.store.get(bol_id).revision,
                    )
                ],
            )
            stored = self.get_bol(bol_id).shadow_items[component_id].observations[index]
            return stored, index

    def seal_bol(self, bol_id: str, now: int | None = None) -> Anchor:
        with self._lock:
            bol = self._require_bol(bol_id)
            if bol.status is BolStatus.SEALED:
                raise AlreadySealed(f"BoL {bol_id} is already sealed", detail={"id": bol_id})
            leaves = runtime.bol_leaves(bol)
            anchor = ledgermod.compute_anchor(
                bol_id, leaves, ledger_index=self.ledger.count
            )
            sealed = replace(bol, status=BolStatus.SEALED, anchor=anchor)
            payload = {
                "bol_id": bol_id,
                "leaf_count": anchor.leaf_count,
                "merkle_root": anchor.merkle_root,
                "sealed_at": self._now(now),
            }
            self.ledger.append_entry(
                ledgermod.BOL_SEALED,
                canonical_bytes(payload),
                extra_writes=[
                    WriteOp(
                        bol_id,
                        KIND_BOL,
                        canonical_bytes(sealed.to_dict()),
                        expected_revision=self.store.get(bol_id).revision,
                    )
                ],
            )
            return anchor

    # -- lineage queries ------------------------------------------------------

    def _graph_edges(self, scope: str) -> set[tuple[str, str]]:
        assemblies = self._all_assemblies()
        if scope == lineage.GLOBAL_SCOPE:
            member_ids = {
                aid for bom in self._all_boms() for aid in bom.assemblies
            }
        else:
            bom = self._require_bom(scope)
            member_ids = set(bom.assemblies)
        return model.graph_edges(
            assemblies[aid] for aid in member_ids if aid in assemblies
        )

    def _lineage_query(self, node_id: str, scope: str, backward: bool) -> lineage.LineageGraph:
        with self._lock:
            if self.get_component(node_id) is None and self.get_assembly(node_id) is None:
                raise UnknownId(f"unknown component or assembly {node_id}", detail={"id": node_id})
            edges = self._graph_edges(scope)
            if scope != lineage.GLOBAL_SCOPE:
                in_scope = {n for edge in edges for n in edge}
                bom = self._require_bom(scope)
                assemblies = self._all_assemblies()
                for aid in bom.assemblies:
                    in_scope.add(aid)
                    in_scope.update(assemblies[aid].components)
                if node_id not in in_scope:
                    raise NotInScope(
                        f"{node_id} does not belong to BoM {scope}",
                        detail={"id": node_id, "bom_id": scope},
                    )
            return lineage.closure(edges, node_id, backward=backward)

    def trace(self, node_id: str, scope: str = lineage.GLOBAL_SCOPE) -> lineage.LineageGraph:
        """Where-from: the origin plus everything it was derived from."""
        return self._lineage_query(node_id, scope, backward=True)

    def track(self, node_id: str, scope: str = lineage.GLOBAL_SCOPE) -> lineage.LineageGraph:
        """Where-used: the origin plus everything derived from it."""
        return self._lineage_query(node_id, scope, backward=False)

    def find_uses(self, component_id: str) -> lineage.ComponentUses:
        with self._lock:
            self._require_component(component_id)
            bol_ids = [
                record.key
                for record in self.store.scan(
                    KIND_BOL, referencing_component=component_id
                )
                if component_id
                in Bol.from_dict(json.loads(record.data.decode("utf-8"))).shadow_items
            ]
            return lineage.component_uses(
                component_id, self._all_boms(), self._all_assemblies(), bol_ids
            )

    def bom_detail(self, bom_id: str) -> dict[str, Any]:
        with self._lock:
            bom = self._require_bom(bom_id)
            assemblies = self._all_assemblies()
            components = {
                cid: self._require_component(cid)
                for aid in bom.assemblies
                for cid in assemblies[aid].components
            }
            return lineage.bom_detail(bom, assemblies, components)

    def lineage_report(self, bol_id: str) -> lineage.LineageReport:
        with self._lock:
            bol = self._require_bol(bol_id)
            bom = self._require_bom(bol.bom_id)
            assemblies = self._all_assemblies()
            static = lineage.bom_static_graph(
                bom, [assemblies[aid] for aid in bom.assemblies]
            )
            dynamic = {
                cid: item.observations for cid, item in bol.shadow_items.items()
            }
            return lineage.LineageReport(
                bol_id=bol_id,
                static_graph=static,
                dynamic=dynamic,
                anchor=bol.anchor,
                bom_snapshot=self.bom_detail(bol.bom_id),
            )

    # -- ledger ---------------------------------------------------------------

    def verify_chain(self) -> tuple[bool, int | None]:
        with self._lock:
            return self.ledger.verify_chain()

    def export_ledger(self) -> bytes:
        with self._lock:
            return self.ledger.export()

    def inclusion_proof(self, bol_id: str, leaf_index: int) -> tuple[bytes, InclusionProof]:
        """Leaf bytes and proof for one leaf of a sealed BoL's anchor tree."""
        with self._lock:
            bol = self._require_bol(bol_id)
            if bol.status is not BolStatus.SEALED or bol.anchor is None:
                raise BolNotSealed(
                    f"BoL {bol_id} is not sealed; it has no anchor yet",
                    detail={"id": bol_id},
                )
            leaves = runtime.bol_leaves(bol)
            if not 0 <= leaf_index < len(leaves):
                raise UnknownId(
                    f"leaf index {leaf_index} out of range for BoL {bol_id} "
                    f"({len(leaves)} leaves)",
                    detail={"id": bol_id, "leaf_index": leaf_index},
                )
            return leaves[leaf_index], ledgermod.inclusion_proof(leaves, leaf_index)
