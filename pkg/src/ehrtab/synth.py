"""Seeded synthetic clinical table generators.

Every generator consumes one GeneratorConfig whose seed fully determines the
output bytes. Alongside each table comes a LatentTruth record holding the
planted facts (matching ids, planted codes, rule labels) so downstream oracles
can be cross-checked against what was actually planted.

Label rules (all computable from the emitted cells alone):

* Synthea mortality: 1 iff at least 3 of 6 indicators hold: Housing status =
  Homeless, Employment status = Unemployed, "Do you feel hopeless" = Yes,
  trouble-sleeping = Yes, Tobacco status = Current every day smoker,
  Body Mass Index > 30.
* Synthea disorder: 1 iff a "Throat redness: Present" row exists and Body
  temperature >= 38.0.
* Synthea recommend (penicillin): 1 iff Throat redness Present, Body
  temperature >= 38.5, and no "Allergy to penicillin" row.
* eICU mortality (word): Expired iff at least 3 of 6 lab flags hold:
  WBC x 1000 > 25 or < 2, creatinine > 3.0, bicarbonate < 15.0, BNP > 1500.0,
  sodium < 130.0, troponin - I > 1.0. Absent labs never flag.
* eICU disease vector: per-position lab thresholds from the shipped
  diseases resource; absent labs score 0.
* eICU drug vector: position is 1 iff any of the drug's indication codes
  (shipped resource) appears in ICD9_CODE.

Expected positive rates sit between 0.25 and 0.70 per label; tests pin the
observed rates to that documented band.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from decimal import Decimal
from typing import Optional

from .rng import Stream
from .table import Cell, ColumnType, Table, make_table, render_cell
from .tasks import Flavor, TaskId, TaskParams
from .templates import disease_rules, drug_rules, icd9_titles, snomed_code_names, target_concepts

T = ColumnType.TEXT
I = ColumnType.INTEGER
D = ColumnType.DECIMAL
DT = ColumnType.DATE


@dataclass(frozen=True)
class GeneratorConfig:
    """Seed plus shape knobs; the task id picks task-specific planting."""

    seed: int
    flavor: Flavor
    task: Optional[TaskId] = None
    n_rows: Optional[int] = None


@dataclass(frozen=True)
class LatentTruth:
    """What was planted, for oracle cross-checks."""

    params: TaskParams = field(default_factory=TaskParams)
    match_ids: tuple[str, ...] = ()
    target_values: tuple[Decimal, ...] = ()
    planted_codes: frozenset[str] = frozenset()
    target_present: Optional[bool] = None
    mortality_label: Optional[int] = None
    mortality_word: Optional[str] = None
    disorder_label: Optional[int] = None
    recommend_label: Optional[int] = None
    disease_vector: Optional[tuple[int, ...]] = None
    drug_vector: Optional[tuple[int, ...]] = None


def _band(n: int) -> tuple[int, int]:
    """Inclusive bounds keeping planted rows between 30% and 70% of n."""
    return (3 * n + 9) // 10, 7 * n // 10


def schema_hints(task: TaskId, flavor: Flavor) -> dict[str, ColumnType]:
    """Column types for parsing a serialized table back losslessly.

    Ids keep their zero padding, ages keep the "> 89" token, and numeric
    columns keep their exact scale, so parse(render(t)) == t.
    """
    synthea = flavor is Flavor.SYNTHEA
    if task in (TaskId.D_U1, TaskId.D_U2):
        if synthea:
            return {"ID": T, "RACE": T, "GENDER": T, "INCOME": I}
        return {c: T for c in ("patientunitstayid", "gender", "age", "ethnicity", "hospitaldischargestatus")}
    if task in (TaskId.D_R1, TaskId.D_R2, TaskId.D_R3):
        if synthea:
            return {"PATIENT": T, "DESCRIPTION": T, "VALUE": D, "UNITS": T, "TYPE": T}
        return {c: T for c in ("PATIENT", "DESCRIPTION", "UNITS", "VALUE")}
    if task in (TaskId.D_R4, TaskId.D_R5):
        if synthea:
            return {"ID": T, "RACE": T, "GENDER": T, "HEALTHCARE": D, "INCOME": D}
        return {
            "age": I,
            "tax": D,
            "gender": T,
            "patientunitstayid": T,
            "admissionweight": D,
            "unitvisitnumber": I,
            "cost": D,
            "dischargeweight": D,
        }
    if task is TaskId.K_U1:
        return {"START": DT, "STOP": DT, "SYSTEM": T, "CODE": I}
    if synthea:
        return {"DATE": DT, "DESCRIPTION": T, "VALUE": T, "UNITS": T}
    if task is TaskId.K_R3:
        return {"ICD9_CODE": I, "LONG_TITLE": T}
    return {
        "labid": I,
        "patientunitstayid": I,
        "labresultoffset": I,
        "labtypeid": I,
        "labname": T,
        "labresult": D,
        "labresulttext": T,
    }


def _pid(i: int) -> str:
    return f"{i + 1:03d}"


# ---------------------------------------------------------------------------
# Demographics (D-U tasks)

SYNTHEA_RACES = ["White", "Black", "Asian"]
GENDERS = ["Male", "Female"]
EICU_ETHNICITIES = ["caucasian", "african american", "hispanic", "asian"]


def gen_demographics(config: GeneratorConfig) -> tuple[Table, LatentTruth]:
    st = Stream(config.seed)
    if config.flavor is Flavor.SYNTHEA:
        return _demographics_synthea(config, st)
    return _demographics_eicu(config, st)


def _demographics_synthea(config: GeneratorConfig, st: Stream) -> tuple[Table, LatentTruth]:
    greater = config.task is not TaskId.D_U2
    n = config.n_rows or st.randint(8, 12)
    lo, hi = _band(n)
    m = st.randint(lo, hi)
    match_idx = set(st.sample(range(n), m))

    column = st.choice(["RACE", "GENDER"])
    value = st.choice(SYNTHEA_RACES if column == "RACE" else GENDERS)
    thresh_k = st.randint(15, 60)

    rows = []
    match_ids = []
    for i in range(n):
        pid = _pid(i)
        race = st.choice(SYNTHEA_RACES)
        gender = st.choice(GENDERS)
        if i in match_idx:
            if column == "RACE":
                race = value
            else:
                gender = value
            income_k = st.randint(thresh_k + 1, 95) if greater else st.randint(10, thresh_k - 1)
            match_ids.append(pid)
        else:
            mode = st.randrange(3)
            if mode != 1:  # break the equality conjunct
                others = [v for v in (SYNTHEA_RACES if column == "RACE" else GENDERS) if v != value]
                if column == "RACE":
                    race = st.choice(others)
                else:
                    gender = st.choice(others)
            if mode == 0:  # equality broken, income unconstrained
                income_k = st.randint(10, 95)
            else:  # income on the wrong side (threshold itself included)
                if column == "RACE":
                    race = value if mode == 1 else race
                else:
                    gender = value if mode == 1 else gender
                income_k = st.randint(10, thresh_k) if greater else st.randint(thresh_k, 95)
        rows.append((pid, race, gender, income_k * 1000))

    table = make_table(["ID", "RACE", "GENDER", "INCOME"], [T, T, T, I], rows)
    params = TaskParams(selector_column=column, selector_value=value, threshold=thresh_k * 1000)
    return table, LatentTruth(params=params, match_ids=tuple(match_ids))


def _demographics_eicu(config: GeneratorConfig, st: Stream) -> tuple[Table, LatentTruth]:
    greater = config.task is not TaskId.D_U2
    n = config.n_rows or st.randint(9, 12)
    lo, hi = _band(n)
    m = st.randint(lo, hi)
    match_idx = set(st.sample(range(n), m))

    ethnicity = st.choice(EICU_ETHNICITIES)
    gender = st.choice(GENDERS)
    thresh = st.choice([55, 60, 65, 70, 75, 80]) if greater else st.choice([70, 75, 80, 85, 90])
    status = "expired" if greater else "alive"

    def match_age() -> str:
        if greater:
            v = st.randint(thresh + 1, 92)
            if v > 89 and st.chance(1, 2):
                return "> 89"
            return str(v)
        return str(st.randint(45, thresh - 1))

    def violating_age() -> str:
        if greater:
            return str(st.randint(45, thresh))
        v = st.randint(thresh, 92)
        if v > 89 and st.chance(1, 2):
            return "> 89"
        return str(v)

    rows = []
    match_ids = []
    for i in range(n):
        pid = _pid(i)
        if i in match_idx:
            rows.append((pid, gender, match_age(), ethnicity, status))
            match_ids.append(pid)
        else:
            row_eth, row_gen, row_status = ethnicity, gender, status
            age_cell = match_age()
            broken = st.sample(range(4), st.randint(1, 2))
            if 0 in broken:
                row_eth = st.choice([e for e in EICU_ETHNICITIES if e != ethnicity])
            if 1 in broken:
                row_gen = "Male" if gender == "Female" else "Female"
            if 2 in broken:
                age_cell = violating_age()
            if 3 in broken:
                row_status = "alive" if status == "expired" else "expired"
            rows.append((pid, row_gen, age_cell, row_eth, row_status))

    table = make_table(
        ["patientunitstayid", "gender", "age", "ethnicity", "hospitaldischargestatus"],
        [T, T, T, T, T],
        rows,
    )
    params = TaskParams(
        threshold=thresh,
        extra_equals=(
            ("ethnicity", ethnicity),
            ("gender", gender),
            ("hospitaldischargestatus", status),
        ),
    )
    return table, LatentTruth(params=params, match_ids=tuple(match_ids))


# ---------------------------------------------------------------------------
# Observations (D-R1, D-R2, D-R3)

SYNTHEA_DISTRACTOR_OBS = [
    ("Body Weight", "kg", 1, Decimal("40.0"), Decimal("110.0")),
    ("Heart rate", "min", 0, Decimal("55"), Decimal("130")),
    ("Respiratory Rate", "min", 0, Decimal("10"), Decimal("24")),
    ("Body Height", "cm", 1, Decimal("140.0"), Decimal("195.0")),
]

EICU_DISTRACTOR_OBS = [
    ("O2 Saturation", "O2 Sat"),
    ("Respiratory Rate", "Resp"),
    ("Blood Pressure", "BP"),
    ("Pain Assessment", "WDL"),
    ("Heart Rate", "HR"),
]


def gen_observations(config: GeneratorConfig) -> tuple[Table, LatentTruth]:
    st = Stream(config.seed)
    n = config.n_rows or st.randint(7, 10)
    lo, hi = _band(n)
    m = st.randint(lo, hi)
    n_patients = st.randint(3, 4)
    patient = _pid(st.randrange(n_patients))

    if config.flavor is Flavor.SYNTHEA:
        return _observations_synthea(st, n, m, n_patients, patient)
    return _observations_eicu(st, n, m, n_patients, patient)


def _observations_synthea(st: Stream, n: int, m: int, n_patients: int, patient: str):
    rows: list[tuple[Cell, ...]] = []
    values = []
    for _ in range(m):
        v = Decimal(st.randint(0, 10))
        values.append(v)
        rows.append((patient, "Pain severity", v, "score", "numeric"))
    for _ in range(n - m):
        other = _pid(st.randrange(n_patients))
        if other != patient and st.chance(2, 5):
            rows.append((other, "Pain severity", Decimal(st.randint(0, 10)), "score", "numeric"))
        else:
            desc, units, scale, vlo, vhi = st.choice(SYNTHEA_DISTRACTOR_OBS)
            rows.append((other, desc, st.decimal(vlo, vhi, scale), units, "numeric"))
    st.shuffle(rows)
    table = make_table(["PATIENT", "DESCRIPTION", "VALUE", "UNITS", "TYPE"], [T, T, D, T, T], rows)
    ordered = tuple(r[2] for r in rows if r[0] == patient and r[1] == "Pain severity")
    return table, LatentTruth(params=TaskParams(patient_id=patient), target_values=ordered)


def _eicu_obs_value(st: Stream, desc: str) -> Cell:
    if desc == "O2 Saturation":
        return str(st.randint(88, 100))
    if desc == "Respiratory Rate":
        return str(st.randint(10, 28))
    if desc == "Blood Pressure":
        return f"{st.randint(95, 150)}/{st.randint(55, 95)}"
    if desc == "Pain Assessment":
        return None
    return str(st.randint(55, 130))


def _observations_eicu(st: Stream, n: int, m: int, n_patients: int, patient: str):
    rows: list[tuple[Cell, ...]] = []
    values = []
    units_cycle = ["TEMP ORAL", "TEMP TYMPANIC"]  # both kinds always represented
    for j in range(m):
        v = st.decimal(Decimal("35.0"), Decimal("40.0"), 1)
        values.append(v)
        units = units_cycle[j] if j < 2 else st.choice(units_cycle)
        rows.append((patient, "Temperature", units, render_cell(v)))
    for _ in range(n - m):
        other = _pid(st.randrange(n_patients))
        if other != patient and st.chance(2, 5):
            v = st.decimal(Decimal("35.0"), Decimal("40.0"), 1)
            rows.append((other, "Temperature", st.choice(units_cycle), render_cell(v)))
        else:
            desc, units = st.choice(EICU_DISTRACTOR_OBS)
            rows.append((other, desc, units, _eicu_obs_value(st, desc)))
    st.shuffle(rows)
    table = make_table(["PATIENT", "DESCRIPTION", "UNITS", "VALUE"], [T, T, T, T], rows)
    ordered = tuple(
        Decimal(r[3]) for r in rows if r[0] == patient and r[1] == "Temperature"
    )
    return table, LatentTruth(params=TaskParams(patient_id=patient), target_values=ordered)


# ---------------------------------------------------------------------------
# Condition codes (K-U1)


def gen_condition_codes(config: GeneratorConfig) -> tuple[Table, LatentTruth]:
    st = Stream(config.seed)
    n = config.n_rows or st.randint(4, 8)
    concepts = target_concepts()
    concept = concepts[st.choice(sorted(concepts))]
    present = st.chance(1, 2)

    pool = sorted(set(snomed_code_names()) - concept.codes)
    codes = st.sample(pool, n)
    if present:
        codes[st.randrange(n)] = st.choice(sorted(concept.codes))

    rows = []
    for code in codes:
        start = date(st.randint(2001, 2019), st.randint(1, 12), st.randint(1, 28))
        stop = start + timedelta(days=st.randint(30, 1500))
        rows.append((start, stop, "SNOMED-CT", int(code)))

    table = make_table(["START", "STOP", "SYSTEM", "CODE"], [DT, DT, T, I], rows)
    truth = LatentTruth(
        params=TaskParams(concept_key=concept.key),
        planted_codes=frozenset(codes),
        target_present=present,
    )
    return table, truth


# ---------------------------------------------------------------------------
# Weight / cost tables (D-R4, D-R5)

SYNTHEA_RACES_LOWER = ["white", "black", "asian"]


def gen_weight_cost(config: GeneratorConfig) -> tuple[Table, LatentTruth]:
    st = Stream(config.seed)
    if config.flavor is Flavor.SYNTHEA:
        n = config.n_rows or st.randint(5, 8)
        patient = _pid(st.randrange(n))
        rows = []
        for i in range(n):
            rows.append(
                (
                    _pid(i),
                    st.choice(SYNTHEA_RACES_LOWER),
                    st.choice(["M", "F"]),
                    st.decimal(Decimal("10000.00"), Decimal("200000.00"), 2),
                    st.decimal(Decimal("10000.00"), Decimal("200000.00"), 2),
                )
            )
        table = make_table(
            ["ID", "RACE", "GENDER", "HEALTHCARE", "INCOME"], [T, T, T, D, D], rows
        )
        return table, LatentTruth(params=TaskParams(patient_id=patient))

    n_patients = config.n_rows or st.randint(4, 6)
    patient = _pid(st.randrange(n_patients))
    multi_visit = config.task is TaskId.D_R5
    rows = []
    for i in range(n_patients):
        pid = _pid(i)
        if multi_visit:
            visits = st.randint(2, 3) if pid == patient else (1 if st.chance(3, 4) else 2)
        else:
            visits = 1
        age = st.randint(40, 85)
        tax = st.decimal(Decimal("500.0"), Decimal("2500.0"), 1)
        gender = st.choice(GENDERS)
        admission = st.decimal(Decimal("50.0"), Decimal("110.0"), 1)
        for visit in range(1, visits + 1):
            discharge = admission + st.decimal(Decimal("-6.0"), Decimal("6.0"), 1)
            cost = st.decimal(Decimal("5000.0"), Decimal("25000.0"), 1)
            rows.append((age, tax, gender, pid, admission, visit, cost, discharge))
    table = make_table(
        [
            "age",
            "tax",
            "gender",
            "patientunitstayid",
            "admissionweight",
            "unitvisitnumber",
            "cost",
            "dischargeweight",
        ],
        [I, D, T, T, D, I, D, D],
        rows,
    )
    return table, LatentTruth(params=TaskParams(patient_id=patient))


# ---------------------------------------------------------------------------
# Clinical profiles (K-R1, K-R2, K-R3)


def gen_clinical_profile(config: GeneratorConfig) -> tuple[Table, LatentTruth]:
    st = Stream(config.seed)
    if config.flavor is Flavor.SYNTHEA:
        builders = {
            TaskId.K_R1: _profile_mortality_synthea,
            TaskId.K_R2: _profile_disorder_synthea,
            TaskId.K_R3: _profile_recommend_synthea,
        }
    else:
        builders = {
            TaskId.K_R1: _labs_eicu,
            TaskId.K_R2: _labs_eicu,
            TaskId.K_R3: _diagnoses_eicu,
        }
    if config.task not in builders:
        raise ValueError(f"no clinical profile for {config.task} / {config.flavor}")
    return builders[config.task](st)


def _profile_date(st: Stream) -> date:
    return date(st.randint(2001, 2021), st.randint(1, 12), st.randint(1, 28))


def _profile_mortality_synthea(st: Stream):
    d = _profile_date(st)
    temp = st.decimal(Decimal("36.0"), Decimal("40.0"), 1)
    pain = st.randint(0, 10)
    bmi = st.decimal(Decimal("30.1"), Decimal("45.0"), 1) if st.chance(2, 5) else st.decimal(
        Decimal("18.0"), Decimal("30.0"), 1
    )
    hr = st.randint(55, 130)
    tobacco = (
        "Current every day smoker"
        if st.chance(2, 5)
        else st.choice(["Never smoked", "Former smoker"])
    )
    housing = "Homeless" if st.chance(2, 5) else "Housed"
    employment = "Unemployed" if st.chance(2, 5) else "Employed full-time"
    hopeless = "Yes" if st.chance(2, 5) else "No"
    sleeping = "Yes" if st.chance(2, 5) else "No"

    rows = [
        (d, "Body temperature", render_cell(temp), "Cel"),
        (d, "Pain severity", str(pain), "score"),
        (d, "Body Mass Index", render_cell(bmi), "kg/m2"),
        (d, "Heart rate", str(hr), "min"),
        (d, "Tobacco status", tobacco, None),
        (d, "Housing status", housing, None),
        (d, "Employment status", employment, None),
        (d, "Do you feel hopeless", hopeless, None),
        (d, "In the past week, have you had trouble sleeping", sleeping, None),
    ]
    flags = [
        housing == "Homeless",
        employment == "Unemployed",
        hopeless == "Yes",
        sleeping == "Yes",
        tobacco == "Current every day smoker",
        bmi > Decimal("30"),
    ]
    label = 1 if sum(flags) >= 3 else 0
    table = make_table(["DATE", "DESCRIPTION", "VALUE", "UNITS"], [DT, T, T, T], rows)
    return table, LatentTruth(mortality_label=label)


SYNTHEA_PANEL = [
    ("Body Height", "cm", 1, Decimal("150.0"), Decimal("195.0")),
    ("Body Weight", "kg", 1, Decimal("45.0"), Decimal("120.0")),
    ("Body mass index", "kg/m2", 1, Decimal("18.0"), Decimal("45.0")),
    ("Diastolic Blood Pressure", "mm[Hg]", 0, Decimal("60"), Decimal("100")),
    ("Systolic Blood Pressure", "mm[Hg]", 0, Decimal("95"), Decimal("160")),
    ("Heart rate", "min", 0, Decimal("55"), Decimal("130")),
    ("Respiratory Rate", "min", 0, Decimal("10"), Decimal("24")),
]

SYNTHEA_EXTRA_LABS = [
    ("Erythrocytes", "10*6/uL", 1, Decimal("3.5"), Decimal("6.0")),
    ("Hematocrit", "%", 1, Decimal("32.0"), Decimal("50.0")),
    ("MCV", "fL", 1, Decimal("78.0"), Decimal("98.0")),
    ("MCH", "pg", 1, Decimal("26.0"), Decimal("34.0")),
    ("Platelets [#]", "10*3/uL", 1, Decimal("140.0"), Decimal("420.0")),
]


def _panel_rows(st: Stream, d: date, specs) -> list[tuple[Cell, ...]]:
    rows = []
    for desc, units, scale, lo, hi in specs:
        v = st.decimal(lo, hi, scale)
        rows.append((d, desc, render_cell(v), units))
    return rows


def _profile_disorder_synthea(st: Stream):
    d = _profile_date(st)
    rows = _panel_rows(st, d, SYNTHEA_PANEL)
    rows += _panel_rows(st, d, [st.choice(SYNTHEA_EXTRA_LABS) for _ in range(2)])

    symptomatic = st.chance(3, 5)
    febrile = st.chance(4, 5) if symptomatic else st.chance(1, 5)
    temp = (
        st.decimal(Decimal("38.0"), Decimal("40.0"), 1)
        if febrile
        else st.decimal(Decimal("36.0"), Decimal("37.9"), 1)
    )
    rows.append((d, "Body temperature", render_cell(temp), "Cel"))
    throat = symptomatic and st.chance(4, 5)
    if throat:
        rows.append((d, "Throat redness", "Present", None))
    if symptomatic and st.chance(3, 5):
        rows.append((d, "Cough frequency", st.choice(["High", "Moderate"]), None))
    if symptomatic and st.chance(3, 5):
        rows.append((d, "Generalized discomfort", str(st.randint(3, 8)), "score"))

    label = 1 if throat and temp >= Decimal("38.0") else 0
    table = make_table(["DATE", "DESCRIPTION", "VALUE", "UNITS"], [DT, T, T, T], rows)
    return table, LatentTruth(disorder_label=label)


def _profile_recommend_synthea(st: Stream):
    d = _profile_date(st)
    high_fever = st.chance(1, 2)
    temp = (
        st.decimal(Decimal("38.5"), Decimal("40.0"), 1)
        if high_fever
        else st.decimal(Decimal("36.0"), Decimal("38.4"), 1)
    )
    rows = [
        (d, "Body temperature", render_cell(temp), "Cel"),
        (d, "Pain severity", str(st.randint(0, 10)), "score"),
        (d, "Diastolic Blood Pressure", str(st.randint(60, 100)), "mm[Hg]"),
        (d, "Systolic Blood Pressure", str(st.randint(95, 160)), "mm[Hg]"),
        (d, "Heart rate", str(st.randint(55, 130)), "min"),
        (d, "Respiratory Rate", str(st.randint(10, 24)), "min"),
        (d, "Tobacco status", st.choice(["Never smoked", "Former smoker"]), None),
        (d, "Employment status", st.choice(["Employed full-time", "Unemployed"]), None),
        (d, "Generalized discomfort", str(st.randint(2, 9)), "score"),
        (d, "Cough frequency", st.choice(["High", "Low"]), None),
    ]
    throat = st.chance(7, 10)
    if throat:
        rows.append((d, "Throat redness", "Present", None))
    allergy = st.chance(1, 5)
    if allergy:
        rows.append((d, "Allergy to penicillin", "Present", None))

    label = 1 if throat and temp >= Decimal("38.5") and not allergy else 0
    table = make_table(["DATE", "DESCRIPTION", "VALUE", "UNITS"], [DT, T, T, T], rows)
    return table, LatentTruth(recommend_label=label)


# eICU lab regimes: (lab, labtypeid, scale, normal range, critical range(s), crit prob num/den).
EICU_LAB_REGIMES = [
    ("WBC x 1000", 3, 1, ("4.0", "11.0"), [("26.0", "42.0", 3), ("0.5", "1.9", 2)], (5, 10)),
    ("Hgb", 3, 1, ("10.0", "16.0"), [("6.0", "8.9", 1)], (9, 20)),
    ("platelets x 1000", 3, 1, ("150.0", "450.0"), [("20.0", "99.0", 1)], (9, 20)),
    ("creatinine", 1, 1, ("0.6", "1.4"), [("3.1", "6.0", 1)], (9, 20)),
    ("bicarbonate", 1, 1, ("21.0", "29.0"), [("10.0", "14.9", 1)], (9, 20)),
    ("BNP", 1, 1, ("50.0", "400.0"), [("1600.0", "3000.0", 1)], (9, 20)),
    ("sodium", 1, 1, ("135.0", "145.0"), [("120.0", "129.0", 1)], (9, 20)),
    ("glucose", 1, 1, ("80.0", "140.0"), [("190.0", "350.0", 1)], (9, 20)),
    ("troponin - I", 1, 2, ("0.01", "0.40"), [("1.10", "4.00", 1)], (9, 20)),
]

EICU_EXTRA_LABS = [
    ("anion gap", 1, 1, ("8.0", "22.0")),
    ("magnesium", 1, 1, ("1.5", "2.5")),
    ("calcium", 1, 1, ("7.5", "10.5")),
    ("lactate", 1, 1, ("0.5", "6.0")),
]

MORTALITY_FLAGS = {
    "WBC x 1000": lambda v: v > Decimal("25") or v < Decimal("2"),
    "creatinine": lambda v: v > Decimal("3.0"),
    "bicarbonate": lambda v: v < Decimal("15.0"),
    "BNP": lambda v: v > Decimal("1500.0"),
    "sodium": lambda v: v < Decimal("130.0"),
    "troponin - I": lambda v: v > Decimal("1.0"),
}


def _trim_zeros(text: str) -> str:
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def _labs_eicu(st: Stream):
    stay_id = st.randint(100000, 999999)
    lab_base = st.randint(10_000_000, 90_000_000)
    offset = -st.randint(10, 2000)

    drawn: dict[str, Decimal] = {}
    rows = []
    for lab, typeid, scale, normal, crits, prob in EICU_LAB_REGIMES:
        if st.chance(1, 10):
            continue  # lab not measured this stay
        if st.chance(*prob):
            weights = [c[2] for c in crits]
            k = st.randrange(sum(weights))
            acc = 0
            for c_lo, c_hi, w in crits:
                acc += w
                if k < acc:
                    value = st.decimal(Decimal(c_lo), Decimal(c_hi), scale)
                    break
        else:
            value = st.decimal(Decimal(normal[0]), Decimal(normal[1]), scale)
        drawn[lab] = value
        rows.append((lab, typeid, value))
    for lab, typeid, scale, (lo, hi) in EICU_EXTRA_LABS:
        if st.chance(2, 5):
            rows.append((lab, typeid, st.decimal(Decimal(lo), Decimal(hi), scale)))

    cells = []
    for i, (lab, typeid, value) in enumerate(rows):
        text = _trim_zeros(render_cell(value))
        cells.append((lab_base + i, stay_id, offset, typeid, lab, value, text))
    table = make_table(
        [
            "labid",
            "patientunitstayid",
            "labresultoffset",
            "labtypeid",
            "labname",
            "labresult",
            "labresulttext",
        ],
        [I, I, I, I, T, D, T],
        cells,
    )

    n_flags = sum(1 for lab, rule in MORTALITY_FLAGS.items() if lab in drawn and rule(drawn[lab]))
    word = "Expired" if n_flags >= 3 else "Alive"
    vector = tuple(
        1 if r.lab in drawn and r.holds(drawn[r.lab]) else 0 for r in disease_rules()
    )
    truth = LatentTruth(
        mortality_word=word,
        mortality_label=1 if word == "Expired" else 0,
        disease_vector=vector,
    )
    return table, truth


def _diagnoses_eicu(st: Stream):
    pool = sorted(icd9_titles())
    n = st.randint(4, 8)
    codes = st.sample(pool, n)
    titles = icd9_titles()
    rows = [(int(c), titles[c]) for c in codes]
    table = make_table(["ICD9_CODE", "LONG_TITLE"], [I, T], rows)
    present = set(codes)
    vector = tuple(1 if (r.codes & present) else 0 for r in drug_rules())
    return table, LatentTruth(drug_vector=vector, planted_codes=frozenset(codes))
