"""Core record and document types for the clinical ETL pipeline."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from sepserve.records.tables import DEMOGRAPHIC_KEYS, LAB_KEYS, VITAL_KEYS

TRANSFORM_VERSION = "1.0"


@dataclass
class HourlyRow:
    """One hour of measurements. Missing values are None, never sentinels."""

    iculos: Optional[int]
    vitals: dict[str, Optional[float]]
    labs: dict[str, Optional[float]]
    demographics: dict[str, Optional[float]]
    sepsis_label: Optional[int] = None

    @classmethod
    def empty(cls, iculos: Optional[int] = None) -> "HourlyRow":
        return cls(
            iculos=iculos,
            vitals={k: None for k in VITAL_KEYS},
            labs={k: None for k in LAB_KEYS},
            demographics={k: None for k in DEMOGRAPHIC_KEYS},
            sepsis_label=None,
        )


@dataclass
class PatientRecord:
    """Raw per-patient time series as parsed from one source file."""

    patient_id: str
    rows: list[HourlyRow]
    source_hospital: str = "unknown"  # "A", "B", or "unknown"
    source_file: Optional[str] = None
    # Columns not in the canonical map are preserved here, per column name.
    spill: dict[str, list[Any]] = field(default_factory=dict)


@dataclass
class RangeViolation:
    variable: str
    iculos: Optional[int]
    value: float
    low: float
    high: float


@dataclass
class ValidationReport:
    """Report-only output of record verification; the record is never mutated."""

    patient_id: str
    n_rows: int
    duplicate_iculos: list[int]
    out_of_range: list[RangeViolation]
    missing_fraction: dict[str, float]

    @property
    def clean(self) -> bool:
        return not self.duplicate_iculos and not self.out_of_range


@dataclass
class ClinicalDocument:
    """Standardized per-patient document: aligned, imputed, scored.

    All series (vitals, labs, derived scores) have exactly the length of
    ``iculos`` which is a contiguous hourly axis.  Lab series with zero
    observations stay all-None; everything else is fully imputed.
    """

    patient_id: str
    demographics: dict[str, Optional[float]]
    vitals: dict[str, list[float]]
    labs: dict[str, list[Optional[float]]]
    derived_scores: dict[str, list[Optional[int]]]
    iculos: list[int]
    provenance: dict[str, Optional[str]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "patient_id": self.patient_id,
            "demographics": self.demographics,
            "vitals": self.vitals,
            "labs": self.labs,
            "derived_scores": self.derived_scores,
            "iculos": self.iculos,
            "provenance": self.provenance,
        }

    def to_json_bytes(self) -> bytes:
        # sort_keys + fixed separators gives byte-identical output for
        # equal documents; allow_nan=False guards the no-sentinel invariant.
        return json.dumps(
            self.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False
        ).encode("utf-8")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ClinicalDocument":
        return cls(
            patient_id=d["patient_id"],
            demographics=dict(d["demographics"]),
            vitals={k: list(v) for k, v in d["vitals"].items()},
            labs={k: list(v) for k, v in d["labs"].items()},
            derived_scores={k: list(v) for k, v in d["derived_scores"].items()},
            iculos=list(d["iculos"]),
            provenance=dict(d["provenance"]),
        )

    @classmethod
    def from_json_bytes(cls, raw: bytes) -> "ClinicalDocument":
        return cls.from_dict(json.loads(raw.decode("utf-8")))
