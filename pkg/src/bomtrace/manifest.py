"""Declarative BoM manifests.

A manifest is a JSON document naming a BoM and its assemblies. Entries in an
assembly's component lists are either objects declaring a new component
(kind follows the list: inputData/outputData are data sources,
inputArtifacts/outputArtifacts are artifacts) or strings referencing a
component declared elsewhere in the file by name, or an already-stored
component by id. Assemblies may likewise be inline objects or existing
assembly ids. Declared names must be unique within the file.

    {
      "name": "Example",
      "description": "...",
      "components": [
        {"name": "Camera Feed", "kind": "data_source",
         "metadata": {"dataAccess": "https://..."}}
      ],
      "assemblies": [
        {"name": "Stage 1",
         "inputData": ["Camera Feed"],
         "outputData": [{"name": "Labelled Set"}],
         "inputArtifacts": [{"name": "Labelling Roster"}]}
      ]
    }

Compilation is atomic: every component, assembly, and the BoM itself are
validated first and then committed to the store in a single transaction.
"""

from __future__ import annotations

from typing import Any

from . import ids as idmod
from .canonical import canonical_bytes
from .errors import BomTraceError, DanglingRef, ValidationFailed
from .model import (
    Assembly,
    Bom,
    ComponentKind,
    ComponentRecord,
    check_assembly_lists,
    normalize_metadata,
    require_name,
    validate_structure,
)
from .store import KIND_ASSEMBLY, KIND_BOM, KIND_COMPONENT, WriteOp

_LIST_KINDS = {
    "inputData": ComponentKind.DATA_SOURCE,
    "inputArtifacts": ComponentKind.ARTIFACT,
    "outputData": ComponentKind.DATA_SOURCE,
    "outputArtifacts": ComponentKind.ARTIFACT,
}

_COMPONENT_KEYS = {"name", "kind", "description", "metadata"}
_ASSEMBLY_KEYS = {"name", "description", "inputData", "inputArtifacts", "outputData", "outputArtifacts"}
_MANIFEST_KEYS = {"name", "description", "components", "assemblies"}


class ManifestError(BomTraceError):
    """Structurally invalid manifest document."""

    code = "MALFORMED_BODY"


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ManifestError(message)


class _Compiler:
    """Two-phase manifest build: stage everything, then commit one txn."""

    def __init__(self, gateway):
        self.gateway = gateway
        self.declared: dict[str, ComponentRecord] = {}  # file-scope name -> record
        self.used_names: set[str] = set()  # names are unique across the whole file
        self.new_components: list[ComponentRecord] = []
        self.new_assemblies: list[Assembly] = []

    def _claim_name(self, name: str) -> None:
        require_name(name)
        _require(name not in self.used_names, f"name {name!r} declared twice in this file")
        self.used_names.add(name)

    def _declare_component(
        self, name: str, kind: ComponentKind, description: str | None, metadata: Any
    ) -> ComponentRecord:
        self._claim_name(name)
        record = ComponentRecord(
            id=self.gateway.ids.new_id(kind.id_prefix),
            kind=kind,
            name=name,
            description=description,
            access_metadata=normalize_metadata(metadata),
        )
        self.declared[name] = record
        self.new_components.append(record)
        return record

    def _component_from_doc(self, doc: dict[str, Any], kind: ComponentKind) -> str:
        _require(isinstance(doc, dict), "component entries must be objects or strings")
        unknown = set(doc) - _COMPONENT_KEYS
        _require(not unknown, f"unknown component keys: {sorted(unknown)}")
        if "kind" in doc:
            declared_kind = ComponentKind(doc["kind"])
            _require(
                declared_kind is kind,
                f"component {doc.get('name')!r} declares kind {declared_kind.value} "
                f"but sits in a {kind.value} list",
            )
        record = self._declare_component(
            doc.get("name", ""), kind, doc.get("description"), doc.get("metadata")
        )
        return record.id

    def _resolve_entry(self, entry: Any, kind: ComponentKind) -> str:
        if isinstance(entry, str):
            if entry in self.declared:
                return self.declared[entry].id
            if idmod.is_component_id(entry):
                if self.gateway.get_component(entry) is not None:
                    return entry
                raise DanglingRef(f"unknown component {entry}", detail={"id": entry})
            raise ManifestError(
                f"{entry!r} is neither a name declared in this file nor a component id"
            )
        return self._component_from_doc(entry, kind)

    def _lookup_pending_or_stored(self, cid: str) -> ComponentRecord | None:
        for record in self.new_components:
            if record.id == cid:
                return record
        return self.gateway.get_component(cid)

    def _build_assembly(self, doc: dict[str, Any]) -> str:
        _require(isinstance(doc, dict), "assembly entries must be objects or ids")
        unknown = set(doc) - _ASSEMBLY_KEYS
        _require(not unknown, f"unknown assembly keys: {sorted(unknown)}")
        self._claim_name(doc.get("name", ""))
        lists: dict[str, list[str]] = {}
        for key, kind in _LIST_KINDS.items():
            entries = doc.get(key, [])
            _require(isinstance(entries, list), f"{key} must be a list")
            lists[key] = [self._resolve_entry(entry, kind) for entry in entries]
        check_assembly_lists(
            lists["inputData"],
            lists["inputArtifacts"],
            lists["outputData"],
            lists["outputArtifacts"],
            self._lookup_pending_or_stored,
        )
        assembly = Assembly(
            id=self.gateway.ids.new_id(idmod.ASSEMBLY),
            name=doc["name"],
            description=doc.get("description"),
            input_data=tuple(lists["inputData"]),
            input_artifacts=tuple(lists["inputArtifacts"]),
            output_data=tuple(lists["outputData"]),
            output_artifacts=tuple(lists["outputArtifacts"]),
        )
        self.new_assemblies.append(assembly)
        return assembly.id

    def compile(self, doc: dict[str, Any], now: int) -> Bom:
        _require(isinstance(doc, dict), "manifest must be a JSON object")
        unknown = set(doc) - _MANIFEST_KEYS
        _require(not unknown, f"unknown manifest keys: {sorted(unknown)}")
        require_name(doc.get("name", ""))

        for comp in doc.get("components", []):
            _require(isinstance(comp, dict), "components entries must be objects")
            unknown = set(comp) - _COMPONENT_KEYS
            _require(not unknown, f"unknown component keys: {sorted(unknown)}")
            _require("kind" in comp, "components entries need an explicit kind")
            self._declare_component(
                comp.get("name", ""),
                ComponentKind(comp["kind"]),
                comp.get("description"),
                comp.get("metadata"),
            )

        assembly_ids: list[str] = []
        for entry in doc.get("assemblies", []):
            if isinstance(entry, str):
                if self.gateway.get_assembly(entry) is None:
                    raise DanglingRef(f"unknown assembly {entry}", detail={"id": entry})
                assembly_ids.append(entry)
            else:
                assembly_ids.append(self._build_assembly(entry))

        assemblies_by_id = dict(self.gateway._all_assemblies())
        for assembly in self.new_assemblies:
            assemblies_by_id[assembly.id] = assembly
        report = validate_structure(
            assembly_ids,
            None,
            assemblies_by_id,
            self.gateway._all_boms(),
            self._lookup_pending_or_stored,
        )
        if not report.ok:
            raise ValidationFailed(
                "BoM structure is invalid", detail={"report": report.to_dict()}
            )

        bom = Bom(
            id=self.gateway.ids.new_id(idmod.BOM),
            name=doc["name"],
            description=doc.get("description"),
            assemblies=tuple(assembly_ids),
            frozen=False,
            created_at=now,
        )
        writes = [
            WriteOp(c.id, KIND_COMPONENT, canonical_bytes(c.to_dict()), 0)
            for c in self.new_components
        ]
        writes += [
            WriteOp(a.id, KIND_ASSEMBLY, canonical_bytes(a.to_dict()), 0)
            for a in self.new_assemblies
        ]
        writes.append(WriteOp(bom.id, KIND_BOM, canonical_bytes(bom.to_dict()), 0))
        self.gateway.store.put_many(writes)
        return bom


def define_bom(gateway, doc: dict[str, Any], now: int) -> Bom:
    """Compile and atomically persist a manifest document."""
    return _Compiler(gateway).compile(doc, now)
