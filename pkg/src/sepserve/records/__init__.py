"""Raw patient files -> standardized clinical documents."""

from sepserve.records.psv import (
    EmptyFileError,
    HeaderMismatchError,
    NonNumericValueError,
    PsvError,
    parse_psv,
)
from sepserve.records.scores import compute_sirs, compute_sofa_partial
from sepserve.records.tables import (
    DEMOGRAPHIC_KEYS,
    LAB_KEYS,
    VITAL_KEYS,
    ClinicalConfig,
)
from sepserve.records.transform import (
    EmptyRecordError,
    EmptySeriesError,
    NoTimestampsError,
    TransformError,
    align_temporal,
    impute_series,
    to_clinical_document,
    verify_record,
)
from sepserve.records.types import (
    ClinicalDocument,
    HourlyRow,
    PatientRecord,
    ValidationReport,
)

__all__ = [
    "ClinicalConfig",
    "ClinicalDocument",
    "DEMOGRAPHIC_KEYS",
    "EmptyFileError",
    "EmptyRecordError",
    "EmptySeriesError",
    "HeaderMismatchError",
    "HourlyRow",
    "LAB_KEYS",
    "NoTimestampsError",
    "NonNumericValueError",
    "PatientRecord",
    "PsvError",
    "TransformError",
    "VITAL_KEYS",
    "ValidationReport",
    "align_temporal",
    "compute_sirs",
    "compute_sofa_partial",
    "impute_series",
    "parse_psv",
    "to_clinical_document",
    "verify_record",
]
