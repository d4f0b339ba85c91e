"""Record verification, temporal alignment, imputation, and document assembly."""

from __future__ import annotations

from typing import Optional, Sequence

from sepserve.records.scores import compute_sirs, compute_sofa_partial
from sepserve.records.tables import (
    DEMOGRAPHIC_KEYS,
    LAB_KEYS,
    VITAL_KEYS,
    ClinicalConfig,
)
from sepserve.records.types import (
    TRANSFORM_VERSION,
    ClinicalDocument,
    HourlyRow,
    PatientRecord,
    RangeViolation,
    ValidationReport,
)


class TransformError(ValueError):
    pass


class NoTimestampsError(TransformError):
    pass


class EmptySeriesError(TransformError):
    pass


class EmptyRecordError(TransformError):
    pass


def verify_record(
    rec: PatientRecord, config: Optional[ClinicalConfig] = None
) -> ValidationReport:
    """Completeness and consistency report; never mutates or drops data."""
    cfg = config or ClinicalConfig()

    seen: set[int] = set()
    duplicates: list[int] = []
    for row in rec.rows:
        if row.iculos is None:
            continue
        if row.iculos in seen and row.iculos not in duplicates:
            duplicates.append(row.iculos)
        seen.add(row.iculos)

    out_of_range: list[RangeViolation] = []
    missing_counts: dict[str, int] = {k: 0 for k in (*VITAL_KEYS, *LAB_KEYS)}
    for row in rec.rows:
        for key, value in (*row.vitals.items(), *row.labs.items()):
            if value is None:
                missing_counts[key] += 1
            elif key in cfg.bounds:
                low, high = cfg.bounds[key]
                if not (low <= value <= high):
                    out_of_range.append(
                        RangeViolation(key, row.iculos, value, low, high)
                    )
        for key, value in row.demographics.items():
            if value is not None and key in cfg.bounds:
                low, high = cfg.bounds[key]
                if not (low <= value <= high):
                    out_of_range.append(
                        RangeViolation(key, row.iculos, value, low, high)
                    )

    n = len(rec.rows)
    missing_fraction = {k: (c / n if n else 0.0) for k, c in missing_counts.items()}
    return ValidationReport(
        patient_id=rec.patient_id,
        n_rows=n,
        duplicate_iculos=duplicates,
        out_of_range=out_of_range,
        missing_fraction=missing_fraction,
    )


def _merge_last_wins(rows: Sequence[HourlyRow]) -> HourlyRow:
    """Collapse duplicate-hour rows; later file order wins per variable."""
    merged = HourlyRow.empty(rows[0].iculos)
    for row in rows:
        for key, value in row.vitals.items():
            if value is not None:
                merged.vitals[key] = value
        for key, value in row.labs.items():
            if value is not None:
                merged.labs[key] = value
        for key, value in row.demographics.items():
            if value is not None:
                merged.demographics[key] = value
        if row.sepsis_label is not None:
            merged.sepsis_label = row.sepsis_label
    return merged


def align_temporal(rec: PatientRecord) -> PatientRecord:
    """Sort rows by hour, merge duplicates (last observation wins), and fill
    axis gaps with all-absent rows so the hourly axis is contiguous.

    Idempotent.  Raises NoTimestampsError when rows carry no usable hour.
    """
    if not rec.rows:
        return PatientRecord(
            patient_id=rec.patient_id,
            rows=[],
            source_hospital=rec.source_hospital,
            source_file=rec.source_file,
            spill=dict(rec.spill),
        )
    if any(row.iculos is None for row in rec.rows):
        missing = sum(1 for row in rec.rows if row.iculos is None)
        raise NoTimestampsError(
            f"{rec.patient_id}: {missing} row(s) lack an ICULOS timestamp"
        )

    by_hour: dict[int, list[HourlyRow]] = {}
    for row in rec.rows:  # file order preserved within each hour
        by_hour.setdefault(row.iculos, []).append(row)

    lo, hi = min(by_hour), max(by_hour)
    aligned = [
        _merge_last_wins(by_hour[h]) if h in by_hour else HourlyRow.empty(h)
        for h in range(lo, hi + 1)
    ]
    return PatientRecord(
        patient_id=rec.patient_id,
        rows=aligned,
        source_hospital=rec.source_hospital,
        source_file=rec.source_file,
        spill=dict(rec.spill),
    )


def impute_series(
    series: Sequence[Optional[float]], fallback: float
) -> list[float]:
    """Fill gaps: linear interpolation inside, nearest-edge fill outside,
    constant fallback when nothing was observed.  Observed values pass
    through exactly.
    """
    if not series:
        raise EmptySeriesError("cannot impute an empty series")

    observed = [i for i, v in enumerate(series) if v is not None]
    if not observed:
        return [fallback] * len(series)

    out: list[float] = list(series)  # type: ignore[arg-type]
    first, last = observed[0], observed[-1]
    for i in range(first):
        out[i] = series[first]
    for i in range(last + 1, len(series)):
        out[i] = series[last]
    for a, b in zip(observed, observed[1:]):
        if b - a > 1:
            va, vb = series[a], series[b]
            for i in range(a + 1, b):
                out[i] = va + (vb - va) * (i - a) / (b - a)
    return out


def to_clinical_document(
    rec: PatientRecord, config: Optional[ClinicalConfig] = None
) -> ClinicalDocument:
    """Compose verify -> align -> impute -> derived scores into one document.

    Deterministic for a given record and config.  Vitals always end up fully
    imputed (population fallback when a vital was never observed); labs with
    zero observations stay all-None so downstream consumers can tell
    "never measured" from "filled".
    """
    if not rec.rows:
        raise EmptyRecordError(f"{rec.patient_id}: record has no rows")
    cfg = config or ClinicalConfig()

    verify_record(rec, cfg)  # report-only pass; parse errors surfaced earlier
    aligned = align_temporal(rec)
    axis = [row.iculos for row in aligned.rows]

    vitals: dict[str, list[float]] = {}
    for key in VITAL_KEYS:
        series = [row.vitals[key] for row in aligned.rows]
        vitals[key] = impute_series(series, cfg.fallback_stats.get(key, 0.0))

    labs: dict[str, list[Optional[float]]] = {}
    for key in LAB_KEYS:
        series = [row.labs[key] for row in aligned.rows]
        if any(v is not None for v in series):
            labs[key] = list(impute_series(series, 0.0))
        else:
            labs[key] = [None] * len(series)

    demographics: dict[str, Optional[float]] = {k: None for k in DEMOGRAPHIC_KEYS}
    for row in aligned.rows:
        for key, value in row.demographics.items():
            if value is not None:
                demographics[key] = value

    sirs: list[Optional[int]] = []
    sofa: list[Optional[int]] = []
    for i in range(len(axis)):
        vit = {k: vitals[k][i] for k in VITAL_KEYS}
        lab = {k: labs[k][i] for k in LAB_KEYS}
        sirs.append(compute_sirs(vit, lab, cfg))
        sofa.append(compute_sofa_partial(vit, lab, cfg))

    return ClinicalDocument(
        patient_id=rec.patient_id,
        demographics=demographics,
        vitals=vitals,
        labs=labs,
        derived_scores={"sirs": sirs, "sofa": sofa},
        iculos=axis,
        provenance={
            "source_file": rec.source_file,
            "source_hospital": rec.source_hospital,
            "transform_version": TRANSFORM_VERSION,
            "imputation": cfg.imputation_tag,
        },
    )
