"""BoM/BoL traceability for data ecosystems.

Describe an experiment's data supply chain as a Bill of Materials (data
sources, artifacts, assemblies), instantiate a Bill of Lots per run,
record per-run observations, and answer where-from / where-used lineage
queries — with every run anchored in a tamper-evident hash-chained ledger.
"""

__version__ = "0.1.0"

from .errors import BomTraceError
from .gateway import Gateway
from .ledger import Anchor, InclusionProof, LedgerEntry, verify_inclusion
from .lineage import ComponentUses, LineageGraph, LineageReport
from .model import Assembly, Bom, ComponentKind, ComponentRecord, ValidationReport
from .runtime import Bol, BolStatus, Observation, ShadowItem

__all__ = [
    "Anchor",
    "Assembly",
    "Bol",
    "BolStatus",
    "Bom",
    "BomTraceError",
    "ComponentKind",
    "ComponentRecord",
    "ComponentUses",
    "Gateway",
    "InclusionProof",
    "LedgerEntry",
    "LineageGraph",
    "LineageReport",
    "Observation",
    "ShadowItem",
    "ValidationReport",
    "verify_inclusion",
    "__version__",
]
