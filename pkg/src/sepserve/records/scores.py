"""Derived bedside scores computed per aligned hour."""

from __future__ import annotations

from typing import Mapping, Optional

from sepserve.records.tables import ClinicalConfig


def compute_sirs(
    vitals: Mapping[str, Optional[float]],
    labs: Mapping[str, Optional[float]],
    config: Optional[ClinicalConfig] = None,
) -> int:
    """Four-criterion score in [0, 4]; criteria with absent inputs score 0."""
    t = (config or ClinicalConfig()).sirs
    temp, hr, resp = vitals.get("Temp"), vitals.get("HR"), vitals.get("Resp")
    paco2, wbc = labs.get("PaCO2"), labs.get("WBC")

    score = 0
    if temp is not None and (temp > t.temp_high_c or temp < t.temp_low_c):
        score += 1
    if hr is not None and hr > t.hr_high_bpm:
        score += 1
    if (resp is not None and resp > t.resp_high_rpm) or (
        paco2 is not None and paco2 < t.paco2_low_mmhg
    ):
        score += 1
    if wbc is not None and (wbc > t.wbc_high or wbc < t.wbc_low):
        score += 1
    return score


def compute_sofa_partial(
    vitals: Mapping[str, Optional[float]],
    labs: Mapping[str, Optional[float]],
    config: Optional[ClinicalConfig] = None,
) -> Optional[int]:
    """Sum of organ sub-scores computable from the available columns.

    Covers coagulation (platelets), liver (total bilirubin), cardiovascular
    (MAP only, so capped at 1 without vasopressor data), renal (creatinine),
    and respiration via the SaO2/FiO2 ratio proxy.  Returns None when no
    sub-score is computable.
    """
    tables = (config or ClinicalConfig()).sofa
    total = 0
    any_computed = False

    for variable, source in (
        ("Platelets", labs),
        ("Bilirubin_total", labs),
        ("Creatinine", labs),
        ("MAP", vitals),
    ):
        value = source.get(variable)
        if value is not None:
            total += tables[variable].score(value)
            any_computed = True

    sao2, fio2 = labs.get("SaO2"), labs.get("FiO2")
    if sao2 is not None and fio2 is not None and fio2 > 0:
        if fio2 > 1.0:  # percent-recorded FiO2 -> fraction
            fio2 = fio2 / 100.0
        total += tables["sf_ratio"].score(sao2 / fio2)
        any_computed = True

    return total if any_computed else None
