"""Oracle tests against hand-checkable fixture tables.

The expected values below were derived by hand from the fixture rows and are
frozen here. The naive_* helpers are a second, independent implementation
using only integer arithmetic on the raw strings; they exist to cross-check
the production decimal oracle and must stay free of ehrtab imports beyond
table parsing.
"""

from decimal import Decimal

import pytest

from ehrtab.oracle import MissingTargetError, OracleError, compute_gold, effective_age
from ehrtab.synth import LatentTruth, schema_hints
from ehrtab.table import parse_tsv
from ehrtab.tasks import (
    BinaryGold,
    BitsGold,
    Flavor,
    IdSetGold,
    NumberGold,
    TaskId,
    TaskParams,
    WordGold,
)

SY = Flavor.SYNTHEA
EI = Flavor.EICU


def load(task, flavor, text):
    return parse_tsv(text, hints=schema_hints(task, flavor))


# ---------------------------------------------------------------------------
# Independent integer-arithmetic helpers (no Decimal, no floats)


def scaled_int(text: str, scale: int) -> int:
    """Parse "36.5" at scale 1 to 365; pads missing fraction digits."""
    text = text.strip()
    neg = text.startswith("-")
    if neg:
        text = text[1:]
    whole, _, frac = text.partition(".")
    assert len(frac) <= scale, (text, scale)
    frac = frac.ljust(scale, "0")
    value = int(whole) * 10**scale + (int(frac) if scale else 0)
    return -value if neg else value


def fmt_scaled(value: int, scale: int) -> str:
    sign = "-" if value < 0 else ""
    value = abs(value)
    if scale == 0:
        return sign + str(value)
    return f"{sign}{value // 10 ** scale}.{value % 10 ** scale:0{scale}d}"


def naive_mean(texts, scale: int) -> str:
    vals = [scaled_int(t, scale) for t in texts]
    q, r = divmod(sum(vals), len(vals))
    if 2 * r >= len(vals):
        q += 1
    return fmt_scaled(q, scale)


def naive_sum(texts, scale: int) -> str:
    return fmt_scaled(sum(scaled_int(t, scale) for t in texts), scale)


def test_naive_helpers():
    assert scaled_int("36.5", 1) == 365
    assert scaled_int("7", 1) == 70
    assert scaled_int("-3.1", 1) == -31
    assert fmt_scaled(-31, 1) == "-3.1"
    assert fmt_scaled(3, 0) == "3"
    assert naive_mean(["36.1", "36.2"], 1) == "36.2"  # .15 rounds half up
    assert naive_sum(["1.2", "-0.3"], 1) == "0.9"


# ---------------------------------------------------------------------------
# Fixture tables


DU1_SYNTHEA = """ID\tRACE\tGENDER\tINCOME
001\tWhite\tMale\t45000
002\tBlack\tFemale\t52000
003\tWhite\tFemale\t28000
004\tWhite\tMale\t36000
"""

DU2_SYNTHEA = """ID\tRACE\tGENDER\tINCOME
005\tAsian\tFemale\t18000
006\tWhite\tMale\t24000
007\tBlack\tFemale\t15000
008\tWhite\tFemale\t22000
"""

DU1_EICU = """patientunitstayid\tgender\tage\tethnicity\thospitaldischargestatus
001\tFemale\t86\tafrican american\texpired
002\tFemale\t72\tcaucasian\talive
003\tMale\t67\tafrican american\texpired
004\tFemale\t90\tafrican american\texpired
005\tFemale\t59\tafrican american\talive
006\tFemale\t73\tafrican american\texpired
007\tMale\t84\tcaucasian\texpired
008\tFemale\t61\tafrican american\talive
009\tMale\t70\tafrican american\talive
010\tFemale\t> 89\tafrican american\texpired
"""

DU2_EICU = """patientunitstayid\tgender\tage\tethnicity\thospitaldischargestatus
001\tMale\t72\tcaucasian\talive
002\tFemale\t65\tafrican american\texpired
003\tMale\t89\tcaucasian\talive
004\tMale\t> 89\tcaucasian\texpired
005\tMale\t47\tcaucasian\talive
006\tFemale\t84\tcaucasian\talive
007\tMale\t73\tcaucasian\texpired
008\tMale\t60\tcaucasian\talive
009\tFemale\t90\tcaucasian\talive
010\tMale\t67\tafrican american\talive
"""

DR1_SYNTHEA = """PATIENT\tDESCRIPTION\tVALUE\tUNITS\tTYPE
001\tBody Weight\t71.4\tkg\tnumeric
002\tPain severity\t2\tscore\tnumeric
002\tPain severity\t4\tscore\tnumeric
002\tHeart rate\t88\tmin\tnumeric
003\tPain severity\t1\tscore\tnumeric
002\tRespiratory Rate\t16\tmin\tnumeric
001\tPain severity\t3\tscore\tnumeric
"""

DR2_SYNTHEA = """PATIENT\tDESCRIPTION\tVALUE\tUNITS\tTYPE
001\tPain severity\t5\tscore\tnumeric
003\tPain severity\t2\tscore\tnumeric
002\tHeart rate\t91\tmin\tnumeric
003\tPain severity\t3\tscore\tnumeric
003\tRespiratory Rate\t17\tmin\tnumeric
002\tPain severity\t1\tscore\tnumeric
003\tPain severity\t4\tscore\tnumeric
"""

DR3_SYNTHEA = """PATIENT\tDESCRIPTION\tVALUE\tUNITS\tTYPE
001\tPain severity\t2\tscore\tnumeric
002\tRespiratory Rate\t14\tmin\tnumeric
003\tPain severity\t1\tscore\tnumeric
001\tPain severity\t5\tscore\tnumeric
002\tPain severity\t3\tscore\tnumeric
001\tHeart rate\t99\tmin\tnumeric
001\tPain severity\t4\tscore\tnumeric
"""

DR1_EICU = """PATIENT\tDESCRIPTION\tUNITS\tVALUE
001\tTemperature\tTEMP ORAL\t36.6
002\tTemperature\tTEMP TYMPANIC\t37.4
002\tO2 Saturation\tO2 Sat\t94
003\tTemperature\tTEMP ORAL\t38.1
002\tTemperature\tTEMP ORAL\t36.9
002\tRespiratory Rate\tResp\t18
001\tBlood Pressure\tBP\t120/80
002\tTemperature\tTEMP ORAL\t37.0
003\tPain Assessment\tWDL\t
002\tTemperature\tTEMP TYMPANIC\t36.8
"""

DR2_EICU = """PATIENT\tDESCRIPTION\tUNITS\tVALUE
001\tTemperature\tTEMP ORAL\t36.5
002\tTemperature\tTEMP TYMPANIC\t37.2
001\tTemperature\tTEMP TYMPANIC\t36.8
003\tO2 Saturation\tO2 Sat\t97
001\tRespiratory Rate\tResp\t16
001\tTemperature\tTEMP ORAL\t36.9
001\tTemperature\tTEMP TYMPANIC\t37.0
002\tPain Assessment\tWDL\t
003\tTemperature\tTEMP ORAL\t38.3
"""

DR3_EICU = """PATIENT\tDESCRIPTION\tUNITS\tVALUE
003\tTemperature\tTEMP ORAL\t36.4
001\tRespiratory Rate\tResp\t15
003\tTemperature\tTEMP TYMPANIC\t37.2
002\tPain Assessment\tWDL\t
003\tTemperature\tTEMP ORAL\t36.9
003\tO2 Saturation\tO2 Sat\t98
003\tTemperature\tTEMP TYMPANIC\t37.1
001\tTemperature\tTEMP ORAL\t36.5
"""

DR4_SYNTHEA = """ID\tRACE\tGENDER\tHEALTHCARE\tINCOME
001\twhite\tM\t20350.20\t34899.50
002\tasian\tF\t80000.00\t62342.75
003\twhite\tF\t145000.35\t179235.89
004\tblack\tM\t48000.00\t39880.00
005\twhite\tF\t98200.00\t105000.00
"""

DR5_SYNTHEA = """ID\tRACE\tGENDER\tHEALTHCARE\tINCOME
001\twhite\tF\t98200.00\t105000.00
002\tasian\tM\t45000.50\t39200.00
003\twhite\tF\t67890.25\t82450.75
004\tblack\tF\t120000.00\t139500.00
005\tasian\tF\t78900.00\t89400.00
"""

DR4_EICU = """age\ttax\tgender\tpatientunitstayid\tadmissionweight\tunitvisitnumber\tcost\tdischargeweight
55\t1450.2\tFemale\t001\t70.5\t1\t8234.6\t68.4
72\t2130.5\tMale\t002\t85.0\t1\t16789.2\t86.3
64\t589.3\tFemale\t003\t91.2\t1\t14350.0\t88.1
60\t984.1\tFemale\t004\t64.0\t1\t7300.2\t64.0
45\t2050.7\tMale\t005\t78.3\t1\t19240.8\t82.9
"""

DR5_EICU = """age\ttax\tgender\tpatientunitstayid\tadmissionweight\tunitvisitnumber\tcost\tdischargeweight
76\t1012.3\tFemale\t001\t65.2\t1\t11400.7\t66.1
58\t875.0\tMale\t002\t82.0\t1\t9800.3\t84.0
58\t875.0\tMale\t002\t82.0\t2\t10200.5\t83.5
43\t1903.2\tFemale\t003\t70.3\t1\t7600.1\t69.0
67\t1520.7\tMale\t004\t90.4\t1\t13400.0\t91.3
"""

KU1_SYNTHEA = """START\tSTOP\tSYSTEM\tCODE
2005/04/12\t2006/11/20\tSNOMED-CT\t230690007
2007/08/03\t2010/02/17\tSNOMED-CT\t11687002
2011/05/21\t2014/09/30\tSNOMED-CT\t44054006
2015/01/13\t2018/08/07\tSNOMED-CT\t15777000
2019/03/15\t2020/10/19\tSNOMED-CT\t195967001
"""

KU1_EICU = """START\tSTOP\tSYSTEM\tCODE
2018-05-01\t2018-06-14\tSNOMED-CT\t386661006
2018-07-20\t2018-09-03\tSNOMED-CT\t161615003
2019-02-15\t2019-04-20\tSNOMED-CT\t128599005
2019-11-05\t2020-01-17\tSNOMED-CT\t230572002
2020-07-10\t2020-09-25\tSNOMED-CT\t233604007
"""


# ---------------------------------------------------------------------------
# Fixture expectations (hand-derived)


def test_du1_synthea_fixture():
    t = load(TaskId.D_U1, SY, DU1_SYNTHEA)
    params = TaskParams(selector_column="RACE", selector_value="White", threshold=30000)
    gold = compute_gold(TaskId.D_U1, SY, t, params)
    assert gold == IdSetGold(ids=("001", "004"))


def test_du2_synthea_fixture():
    t = load(TaskId.D_U2, SY, DU2_SYNTHEA)
    params = TaskParams(selector_column="GENDER", selector_value="Female", threshold=20000)
    gold = compute_gold(TaskId.D_U2, SY, t, params)
    assert gold == IdSetGold(ids=("005", "007"))


def test_du1_eicu_fixture():
    t = load(TaskId.D_U1, EI, DU1_EICU)
    params = TaskParams(
        threshold=60,
        extra_equals=(
            ("ethnicity", "african american"),
            ("gender", "Female"),
            ("hospitaldischargestatus", "expired"),
        ),
    )
    gold = compute_gold(TaskId.D_U1, EI, t, params)
    assert gold == IdSetGold(ids=("001", "004", "006", "010"))


def test_du2_eicu_fixture():
    t = load(TaskId.D_U2, EI, DU2_EICU)
    params = TaskParams(
        threshold=90,
        extra_equals=(
            ("ethnicity", "caucasian"),
            ("gender", "Male"),
            ("hospitaldischargestatus", "alive"),
        ),
    )
    gold = compute_gold(TaskId.D_U2, EI, t, params)
    assert gold == IdSetGold(ids=("001", "003", "005", "008"))


def test_age_token():
    assert effective_age("> 89") == 90
    assert effective_age("89") == 89
    assert effective_age(72) == 72


def test_dr_synthea_fixtures():
    t = load(TaskId.D_R1, SY, DR1_SYNTHEA)
    gold = compute_gold(TaskId.D_R1, SY, t, TaskParams(patient_id="002"))
    assert gold == NumberGold(value=Decimal("2"), scale=0)

    t = load(TaskId.D_R2, SY, DR2_SYNTHEA)
    gold = compute_gold(TaskId.D_R2, SY, t, TaskParams(patient_id="003"))
    assert gold == NumberGold(value=Decimal("3.0"), scale=1)
    assert naive_mean(["2", "3", "4"], 1) == "3.0"

    t = load(TaskId.D_R3, SY, DR3_SYNTHEA)
    gold = compute_gold(TaskId.D_R3, SY, t, TaskParams(patient_id="001"))
    assert gold == NumberGold(value=Decimal("11"), scale=0)
    assert naive_sum(["2", "5", "4"], 0) == "11"


def test_dr_eicu_fixtures():
    t = load(TaskId.D_R1, EI, DR1_EICU)
    gold = compute_gold(TaskId.D_R1, EI, t, TaskParams(patient_id="002"))
    assert gold == NumberGold(value=Decimal("4"), scale=0)

    t = load(TaskId.D_R2, EI, DR2_EICU)
    gold = compute_gold(TaskId.D_R2, EI, t, TaskParams(patient_id="001"))
    assert gold == NumberGold(value=Decimal("36.8"), scale=1)
    assert naive_mean(["36.5", "36.8", "36.9", "37.0"], 1) == "36.8"

    t = load(TaskId.D_R3, EI, DR3_EICU)
    gold = compute_gold(TaskId.D_R3, EI, t, TaskParams(patient_id="003"))
    assert gold == NumberGold(value=Decimal("147.6"), scale=1)
    assert naive_sum(["36.4", "37.2", "36.9", "37.1"], 1) == "147.6"


def test_dr4_dr5_fixtures():
    t = load(TaskId.D_R4, SY, DR4_SYNTHEA)
    gold = compute_gold(TaskId.D_R4, SY, t, TaskParams(patient_id="003"))
    assert gold == NumberGold(value=Decimal("34235.54"), scale=2)

    t = load(TaskId.D_R5, SY, DR5_SYNTHEA)
    gold = compute_gold(TaskId.D_R5, SY, t, TaskParams(patient_id="003"))
    assert gold == NumberGold(value=Decimal("150341.00"), scale=2)

    t = load(TaskId.D_R4, EI, DR4_EICU)
    gold = compute_gold(TaskId.D_R4, EI, t, TaskParams(patient_id="003"))
    assert gold == NumberGold(value=Decimal("-3.1"), scale=1)
    gold = compute_gold(TaskId.D_R4, EI, t, TaskParams(patient_id="005"))
    assert gold == NumberGold(value=Decimal("4.6"), scale=1)

    t = load(TaskId.D_R5, EI, DR5_EICU)
    gold = compute_gold(TaskId.D_R5, EI, t, TaskParams(patient_id="002"))
    assert gold == NumberGold(value=Decimal("20000.8"), scale=1)
    gold = compute_gold(TaskId.D_R5, EI, t, TaskParams(patient_id="001"))
    assert gold == NumberGold(value=Decimal("11400.7"), scale=1)


def test_dr4_eicu_multi_visit_change_spans_whole_stay():
    text = """age\ttax\tgender\tpatientunitstayid\tadmissionweight\tunitvisitnumber\tcost\tdischargeweight
60\t900.0\tMale\t001\t80.0\t2\t5000.0\t77.5
60\t900.0\tMale\t001\t82.5\t1\t5000.0\t81.0
"""
    t = load(TaskId.D_R4, EI, text)
    gold = compute_gold(TaskId.D_R4, EI, t, TaskParams(patient_id="001"))
    assert gold == NumberGold(value=Decimal("-5.0"), scale=1)  # 77.5 - 82.5


def test_ku1_fixtures():
    t = load(TaskId.K_U1, SY, KU1_SYNTHEA)
    gold = compute_gold(TaskId.K_U1, SY, t, TaskParams(concept_key="diabetes"))
    assert gold == BinaryGold(value=1)  # 44054006 present

    t = load(TaskId.K_U1, EI, KU1_EICU)
    gold = compute_gold(TaskId.K_U1, EI, t, TaskParams(concept_key="asthma"))
    assert gold == BinaryGold(value=0)  # 195967001 absent
    gold = compute_gold(TaskId.K_U1, EI, t, TaskParams(concept_key="pneumonia"))
    assert gold == BinaryGold(value=1)  # 233604007 present


def test_mean_tie_rounds_half_up():
    text = """PATIENT\tDESCRIPTION\tUNITS\tVALUE
001\tTemperature\tTEMP ORAL\t36.1
001\tTemperature\tTEMP TYMPANIC\t36.2
"""
    t = load(TaskId.D_R2, EI, text)
    gold = compute_gold(TaskId.D_R2, EI, t, TaskParams(patient_id="001"))
    assert gold == NumberGold(value=Decimal("36.2"), scale=1)

    text = """PATIENT\tDESCRIPTION\tVALUE\tUNITS\tTYPE
001\tPain severity\t1\tscore\tnumeric
001\tPain severity\t2\tscore\tnumeric
001\tPain severity\t2\tscore\tnumeric
001\tPain severity\t2\tscore\tnumeric
"""
    t = load(TaskId.D_R2, SY, text)
    gold = compute_gold(TaskId.D_R2, SY, t, TaskParams(patient_id="001"))
    assert gold == NumberGold(value=Decimal("1.8"), scale=1)  # 1.75 up


def test_missing_target_errors():
    t = load(TaskId.D_R2, SY, DR2_SYNTHEA)
    gold = compute_gold(TaskId.D_R1, SY, t, TaskParams(patient_id="999"))
    assert gold == NumberGold(value=Decimal("0"), scale=0)
    with pytest.raises(MissingTargetError):
        compute_gold(TaskId.D_R2, SY, t, TaskParams(patient_id="999"))
    t = load(TaskId.D_R4, SY, DR4_SYNTHEA)
    with pytest.raises(MissingTargetError):
        compute_gold(TaskId.D_R4, SY, t, TaskParams(patient_id="999"))


def test_kr_golds_come_from_truth():
    t = load(TaskId.K_R1, SY, "DATE\tDESCRIPTION\tVALUE\tUNITS\n2001-02-15\tHeart rate\t84\tmin\n")
    truth = LatentTruth(mortality_label=1)
    assert compute_gold(TaskId.K_R1, SY, t, TaskParams(), truth) == BinaryGold(value=1)
    with pytest.raises(OracleError):
        compute_gold(TaskId.K_R1, SY, t, TaskParams(), None)
    with pytest.raises(OracleError):
        compute_gold(TaskId.K_R2, SY, t, TaskParams(), truth)  # wrong label kind

    truth = LatentTruth(mortality_word="Expired", disease_vector=(1, 0) * 5)
    assert compute_gold(TaskId.K_R1, EI, t, TaskParams(), truth) == WordGold(word="Expired")
    assert compute_gold(TaskId.K_R2, EI, t, TaskParams(), truth) == BitsGold(bits=(1, 0) * 5)
