"""Parser for pipe-separated patient files (PhysioNet-2019 layout).

Files are UTF-8 text: one header row naming columns, ``|`` separators, and
the literal token ``NaN`` for a missing measurement.
"""

from __future__ import annotations

import logging
from typing import Optional, Union

from sepserve.records.tables import ClinicalConfig
from sepserve.records.types import HourlyRow, PatientRecord

logger = logging.getLogger(__name__)


class PsvError(ValueError):
    """Base class for raw-file parse failures."""


class EmptyFileError(PsvError):
    pass


class HeaderMismatchError(PsvError):
    def __init__(self, line_no: int, expected: int, got: int):
        self.line_no = line_no
        super().__init__(
            f"line {line_no}: row has {got} fields, header has {expected}"
        )


class NonNumericValueError(PsvError):
    def __init__(self, column: str, line_no: int, token: str):
        self.column = column
        self.line_no = line_no
        super().__init__(f"line {line_no}, column {column}: not numeric: {token!r}")


def _parse_float(token: str, column: str, line_no: int) -> Optional[float]:
    if token == "NaN":
        return None
    try:
        return float(token)
    except ValueError:
        raise NonNumericValueError(column, line_no, token) from None


def _parse_int(token: str, column: str, line_no: int) -> Optional[int]:
    value = _parse_float(token, column, line_no)
    if value is None:
        return None
    if not value.is_integer():
        raise NonNumericValueError(column, line_no, token)
    return int(value)


def parse_psv(
    content: Union[bytes, str],
    patient_id: str,
    *,
    source_hospital: str = "unknown",
    source_file: Optional[str] = None,
    config: Optional[ClinicalConfig] = None,
) -> PatientRecord:
    """Parse one raw patient file into a PatientRecord, preserving file order.

    Columns outside the canonical map land in the record's spill map and are
    logged once.  Raises EmptyFileError, HeaderMismatchError, or
    NonNumericValueError (with column and line context).
    """
    cfg = config or ClinicalConfig()
    text = content.decode("utf-8") if isinstance(content, bytes) else content
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmptyFileError(f"{patient_id}: file has no content")

    header = lines[0].split("|")
    unknown = [h for h in header if h not in cfg.column_map]
    if unknown:
        logger.warning("%s: unmapped columns kept in spill: %s", patient_id, unknown)

    record = PatientRecord(
        patient_id=patient_id,
        rows=[],
        source_hospital=source_hospital,
        source_file=source_file,
        spill={h: [] for h in unknown},
    )

    for line_no, line in enumerate(lines[1:], start=2):
        tokens = line.split("|")
        if len(tokens) != len(header):
            raise HeaderMismatchError(line_no, len(header), len(tokens))
        row = HourlyRow.empty()
        for name, token in zip(header, tokens):
            mapped = cfg.column_map.get(name)
            if mapped is None:
                if token == "NaN":
                    record.spill[name].append(None)
                else:
                    try:
                        record.spill[name].append(float(token))
                    except ValueError:
                        record.spill[name].append(token)
                continue
            group, key = mapped
            if group == "vitals":
                row.vitals[key] = _parse_float(token, name, line_no)
            elif group == "labs":
                row.labs[key] = _parse_float(token, name, line_no)
            elif group == "demographics":
                row.demographics[key] = _parse_float(token, name, line_no)
            elif group == "time":
                row.iculos = _parse_int(token, name, line_no)
            elif group == "label":
                label = _parse_int(token, name, line_no)
                if label is not None and label not in (0, 1):
                    raise NonNumericValueError(name, line_no, token)
                row.sepsis_label = label
        record.rows.append(row)

    return record
