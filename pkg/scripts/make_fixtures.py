#!/usr/bin/env python3
"""Generate the checked-in PSV patient fixtures (PhysioNet-2019 layout).

Deterministic; rerunning reproduces the same files.

Run from the repo root:  python scripts/make_fixtures.py
"""

from __future__ import annotations

import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "tests" / "fixtures" / "psv"

HEADER = (
    "HR|O2Sat|Temp|SBP|MAP|DBP|Resp|EtCO2|BaseExcess|HCO3|FiO2|pH|PaCO2|SaO2|"
    "AST|BUN|Alkalinephos|Calcium|Chloride|Creatinine|Bilirubin_direct|Glucose|"
    "Lactate|Magnesium|Phosphate|Potassium|Bilirubin_total|TroponinI|Hct|Hgb|"
    "PTT|WBC|Fibrinogen|Platelets|Age|Gender|Unit1|Unit2|HospAdmTime|ICULOS|"
    "SepsisLabel"
)

# (mean, sd, lo, hi, decimals)
VITAL_DIST = {
    "HR": (84, 14, 40, 190, 1),
    "O2Sat": (96.5, 2.0, 75, 100, 1),
    "Temp": (36.9, 0.6, 34, 41, 2),
    "SBP": (120, 17, 70, 210, 1),
    "MAP": (82, 11, 45, 150, 1),
    "DBP": (64, 10, 30, 120, 1),
    "Resp": (18, 4, 8, 45, 1),
    "EtCO2": (38, 4, 20, 65, 1),
}
LAB_DIST = {
    "BaseExcess": (0, 3, -15, 15, 1),
    "HCO3": (24, 3, 10, 40, 1),
    "FiO2": (0.4, 0.15, 0.21, 1.0, 2),
    "pH": (7.38, 0.05, 7.0, 7.6, 2),
    "PaCO2": (40, 6, 18, 80, 1),
    "SaO2": (96.5, 2.0, 70, 100, 1),
    "AST": (38, 18, 10, 300, 0),
    "BUN": (18, 8, 4, 90, 0),
    "Alkalinephos": (84, 28, 25, 300, 0),
    "Calcium": (8.5, 0.6, 6, 12, 1),
    "Chloride": (104, 4, 85, 125, 0),
    "Creatinine": (1.0, 0.4, 0.3, 8, 2),
    "Bilirubin_direct": (0.3, 0.2, 0.01, 8, 2),
    "Glucose": (130, 35, 50, 400, 0),
    "Lactate": (1.8, 0.9, 0.4, 12, 2),
    "Magnesium": (2.0, 0.3, 1.2, 3.6, 1),
    "Phosphate": (3.5, 0.8, 1.2, 9, 1),
    "Potassium": (4.1, 0.4, 2.5, 7, 1),
    "Bilirubin_total": (0.9, 0.5, 0.1, 20, 2),
    "TroponinI": (0.05, 0.08, 0.0, 20, 2),
    "Hct": (31, 5, 16, 52, 1),
    "Hgb": (10.5, 1.8, 5.5, 18, 1),
    "PTT": (33, 8, 18, 120, 1),
    "WBC": (10, 3.5, 1, 45, 1),
    "Fibrinogen": (305, 80, 80, 800, 0),
    "Platelets": (215, 75, 20, 700, 0),
}

PATIENTS = [
    # (id, hours, septic_from, lab_rate, vital_miss, gap_hours, no_etco2)
    ("p000001", 20, None, 0.16, 0.05, (), False),
    ("p000002", 30, 23, 0.20, 0.08, (), False),
    ("p000003", 16, None, 0.12, 0.06, (8,), False),
    ("p000004", 10, None, 0.10, 0.20, (), True),
    ("p000009", 24, 18, 0.18, 0.05, (), True),
]


def draw(rng: random.Random, spec, drift: float = 0.0) -> str:
    mean, sd, lo, hi, decimals = spec
    value = min(max(rng.gauss(mean + drift, sd), lo), hi)
    return f"{value:.{decimals}f}"


def build_patient(pid, hours, septic_from, lab_rate, vital_miss, gaps, no_etco2):
    rng = random.Random(f"fixture/{pid}")
    age = f"{rng.uniform(25, 89):.2f}"
    gender = str(rng.randint(0, 1))
    unit1 = str(rng.randint(0, 1))
    unit2 = str(1 - int(unit1))
    adm = f"{-rng.uniform(0.5, 120):.2f}"

    lines = [HEADER]
    for hour in range(1, hours + 1):
        if hour in gaps:
            continue
        septic = septic_from is not None and hour >= septic_from
        drift = 1.0 if septic else 0.0
        cells = []
        for name, spec in VITAL_DIST.items():
            if name == "EtCO2" and no_etco2:
                cells.append("NaN")
            elif rng.random() < vital_miss:
                cells.append("NaN")
            else:
                shift = 0.0
                if septic:
                    shift = {"HR": 22, "Temp": 1.4, "Resp": 6, "MAP": -12,
                             "O2Sat": -3}.get(name, 0.0)
                cells.append(draw(rng, spec, shift))
        for name, spec in LAB_DIST.items():
            if rng.random() < lab_rate:
                shift = 0.0
                if septic:
                    shift = {"Lactate": 2.2, "WBC": 6, "Creatinine": 0.9,
                             "Platelets": -90, "Bilirubin_total": 1.1}.get(name, 0.0)
                cells.append(draw(rng, spec, shift))
            else:
                cells.append("NaN")
        cells.extend([age, gender, unit1, unit2, adm, str(hour),
                      "1" if septic else "0"])
        lines.append("|".join(cells))
    return "\n".join(lines) + "\n"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for spec in PATIENTS:
        path = OUT / f"{spec[0]}.psv"
        path.write_text(build_patient(*spec))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
