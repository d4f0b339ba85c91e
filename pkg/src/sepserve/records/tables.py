"""Clinical reference tables: canonical columns, bounds, score criteria.

Everything here is overridable through the platform config file so that
threshold choices stay auditable (see ``sepserve.config``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

# Canonical PhysioNet-2019-style column groups. Key presence is mandatory
# in every HourlyRow; values are optional.
VITAL_KEYS: tuple[str, ...] = (
    "HR", "O2Sat", "Temp", "SBP", "MAP", "DBP", "Resp", "EtCO2",
)

LAB_KEYS: tuple[str, ...] = (
    "BaseExcess", "HCO3", "FiO2", "pH", "PaCO2", "SaO2", "AST", "BUN",
    "Alkalinephos", "Calcium", "Chloride", "Creatinine", "Bilirubin_direct",
    "Glucose", "Lactate", "Magnesium", "Phosphate", "Potassium",
    "Bilirubin_total", "TroponinI", "Hct", "Hgb", "PTT", "WBC",
    "Fibrinogen", "Platelets",
)

DEMOGRAPHIC_KEYS: tuple[str, ...] = ("Age", "Gender", "Unit1", "Unit2", "HospAdmTime")

TIME_KEY = "ICULOS"
LABEL_KEY = "SepsisLabel"

# header name -> ("vitals"|"labs"|"demographics"|"time"|"label", canonical key)
DEFAULT_COLUMN_MAP: dict[str, tuple[str, str]] = (
    {k: ("vitals", k) for k in VITAL_KEYS}
    | {k: ("labs", k) for k in LAB_KEYS}
    | {k: ("demographics", k) for k in DEMOGRAPHIC_KEYS}
    | {TIME_KEY: ("time", TIME_KEY), LABEL_KEY: ("label", LABEL_KEY)}
)

# Physiological plausibility bounds, report-only (verification never drops data).
DEFAULT_BOUNDS: dict[str, tuple[float, float]] = {
    "HR": (0.0, 300.0),
    "O2Sat": (0.0, 100.0),
    "Temp": (25.0, 45.0),
    "SBP": (0.0, 300.0),
    "MAP": (0.0, 300.0),
    "DBP": (0.0, 300.0),
    "Resp": (0.0, 100.0),
    "EtCO2": (0.0, 150.0),
    "pH": (6.5, 8.0),
    "WBC": (0.0, 500.0),
    "Platelets": (0.0, 2000.0),
    "FiO2": (0.0, 1.0),
    "SaO2": (0.0, 100.0),
    "Age": (0.0, 120.0),
}

# Population fallback statistics used only when a vital has zero observations
# for a patient (rounded adult reference values).
DEFAULT_FALLBACK_STATS: dict[str, float] = {
    "HR": 80.0,
    "O2Sat": 97.0,
    "Temp": 36.8,
    "SBP": 120.0,
    "MAP": 82.0,
    "DBP": 70.0,
    "Resp": 18.0,
    "EtCO2": 38.0,
}


@dataclass
class SirsThresholds:
    """Standard four-criterion inflammatory-response score, one point each."""

    temp_high_c: float = 38.0
    temp_low_c: float = 36.0
    hr_high_bpm: float = 90.0
    resp_high_rpm: float = 20.0
    paco2_low_mmhg: float = 32.0
    wbc_high: float = 12.0  # x10^3/uL
    wbc_low: float = 4.0


@dataclass
class SofaBandTable:
    """One organ sub-score: value is banded against ordered cutpoints.

    kind "low_bad": score = index of first cutpoint the value still reaches
    (v >= cutpoints[i] -> score i), else len(cutpoints).
    kind "high_bad": score = index of first cutpoint the value stays under
    (v < cutpoints[i] -> score i), else len(cutpoints).
    """

    kind: str
    cutpoints: list[float]

    def score(self, value: float) -> int:
        if self.kind == "low_bad":
            for i, cut in enumerate(self.cutpoints):
                if value >= cut:
                    return i
            return len(self.cutpoints)
        if self.kind == "high_bad":
            for i, cut in enumerate(self.cutpoints):
                if value < cut:
                    return i
            return len(self.cutpoints)
        raise ValueError(f"unknown band kind: {self.kind!r}")


def default_sofa_tables() -> dict[str, SofaBandTable]:
    # Partial variant over columns this dataset actually carries.  The
    # respiration sub-score uses the SaO2/FiO2 ratio with cutpoints mapped
    # from the usual PaO2/FiO2 bands (Rice conversion); ventilation-support
    # context is not available, so bands 3-4 are reachable from ratio alone.
    return {
        "Platelets": SofaBandTable("low_bad", [150.0, 100.0, 50.0, 20.0]),
        "Bilirubin_total": SofaBandTable("high_bad", [1.2, 2.0, 6.0, 12.0]),
        "MAP": SofaBandTable("low_bad", [70.0]),
        "Creatinine": SofaBandTable("high_bad", [1.2, 2.0, 3.5, 5.0]),
        "sf_ratio": SofaBandTable("low_bad", [400.0, 316.0, 232.0, 148.0]),
    }


@dataclass
class ClinicalConfig:
    """Bundle of every table the record pipeline consults."""

    column_map: dict[str, tuple[str, str]] = field(
        default_factory=lambda: dict(DEFAULT_COLUMN_MAP)
    )
    bounds: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_BOUNDS)
    )
    fallback_stats: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_FALLBACK_STATS)
    )
    sirs: SirsThresholds = field(default_factory=SirsThresholds)
    sofa: dict[str, SofaBandTable] = field(default_factory=default_sofa_tables)
    imputation_tag: str = "linear+edge_fill+population_fallback"

    @classmethod
    def from_dict(cls, d: dict) -> "ClinicalConfig":
        """Overlay a parsed config-file section onto the shipped defaults."""
        cfg = cls()
        if "bounds" in d:
            for k, v in d["bounds"].items():
                cfg.bounds[k] = (float(v[0]), float(v[1]))
        if "fallback_stats" in d:
            for k, v in d["fallback_stats"].items():
                cfg.fallback_stats[k] = float(v)
        if "column_map" in d:
            for k, v in d["column_map"].items():
                cfg.column_map[k] = (str(v[0]), str(v[1]))
        if "sirs" in d:
            for k, v in d["sirs"].items():
                setattr(cfg.sirs, k, float(v))
        if "sofa" in d:
            for name, tbl in d["sofa"].items():
                cfg.sofa[name] = SofaBandTable(
                    kind=str(tbl["kind"]),
                    cutpoints=[float(c) for c in tbl["cutpoints"]],
                )
        return cfg


def fallback_for(cfg: ClinicalConfig, variable: str) -> Optional[float]:
    return cfg.fallback_stats.get(variable)
