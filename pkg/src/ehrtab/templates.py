"""Packaged text resources: instruction templates, code maps, rule tables.

Templates are versioned files under resources/templates; tests pin their
wording byte-for-byte. Rendering only substitutes named placeholders.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache
from importlib import resources

from .tasks import Flavor, TaskId, TaskParams


def _read(relpath: str) -> str:
    return resources.files("ehrtab.resources").joinpath(relpath).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def instruction_template(task: TaskId, flavor: Flavor) -> str:
    return _read(f"templates/instr_{task.value}_{flavor.value}.txt")


@lru_cache(maxsize=None)
def stage_template(name: str) -> str:
    """name in {plan_du, plan_dr, plan_ku, plan_kr, align, code, direct, decide}."""
    return _read(f"templates/stage_{name}.txt")


@lru_cache(maxsize=None)
def snomed_code_names() -> dict[str, str]:
    """code -> display name for every shipped SNOMED-CT code."""
    out = {}
    for line in _read("snomed_codes.tsv").splitlines():
        code, name = line.split("\t")
        out[code] = name
    return out


@dataclass(frozen=True)
class Concept:
    key: str  # question word, lowercase
    display: str  # answer-line label
    codes: frozenset[str]


@lru_cache(maxsize=None)
def target_concepts() -> dict[str, Concept]:
    """Concepts a K-U1 question may ask about, keyed by question word."""
    out = {}
    for line in _read("snomed_targets.tsv").splitlines():
        key, display, codes = line.split("\t")
        out[key] = Concept(key, display, frozenset(codes.split(",")))
    return out


@lru_cache(maxsize=None)
def icd9_titles() -> dict[str, str]:
    out = {}
    for line in _read("icd9_codes.tsv").splitlines():
        code, title = line.split("\t")
        out[code] = title
    return out


@dataclass(frozen=True)
class DiseaseRule:
    """One multilabel position: lab comparison against a fixed threshold."""

    position: int
    name: str
    lab: str
    op: str  # ">" or "<"
    threshold: Decimal

    def holds(self, value: Decimal) -> bool:
        return value > self.threshold if self.op == ">" else value < self.threshold


@lru_cache(maxsize=None)
def disease_rules() -> tuple[DiseaseRule, ...]:
    rules = []
    for line in _read("diseases_eicu.tsv").splitlines():
        pos, name, lab, op, thresh = line.split("\t")
        rules.append(DiseaseRule(int(pos), name, lab, op, Decimal(thresh)))
    return tuple(rules)


@dataclass(frozen=True)
class DrugRule:
    """One multilabel position: drug indicated by any of its ICD-9 codes."""

    position: int
    name: str
    codes: frozenset[str]


@lru_cache(maxsize=None)
def drug_rules() -> tuple[DrugRule, ...]:
    rules = []
    for line in _read("drugs_eicu.tsv").splitlines():
        pos, name, codes = line.split("\t")
        rules.append(DrugRule(int(pos), name, frozenset(codes.split(","))))
    return tuple(rules)


def _numbered(names: list[str]) -> str:
    return "\n".join(f"{i + 1}. {n}" for i, n in enumerate(names))


def _title_words(value: str) -> str:
    return " ".join(w.capitalize() for w in value.split())


def render_instruction(task: TaskId, flavor: Flavor, table_text: str, params: TaskParams) -> str:
    """Instantiate the (task, flavor) template with the table text and params."""
    tpl = instruction_template(task, flavor)
    fields: dict[str, str] = {"table": table_text.rstrip("\n")}
    if task in (TaskId.D_U1, TaskId.D_U2):
        if flavor is Flavor.SYNTHEA:
            fields["selector"] = (params.selector_value or "").lower()
            fields["threshold"] = str(params.threshold)
        else:
            extras = dict(params.extra_equals)
            fields["ethnicity_word"] = _title_words(extras.get("ethnicity", ""))
            fields["gender_word"] = extras.get("gender", "").lower()
            fields["threshold"] = str(params.threshold)
    elif task in (TaskId.D_R1, TaskId.D_R2, TaskId.D_R3, TaskId.D_R4, TaskId.D_R5):
        fields["patient_id"] = params.patient_id or ""
    elif task is TaskId.K_U1:
        concept = target_concepts()[params.concept_key or ""]
        fields["condition"] = concept.key
        fields["condition_cap"] = concept.display
    elif task is TaskId.K_R2 and flavor is Flavor.EICU:
        fields["option_list"] = _numbered([r.name for r in disease_rules()])
    elif task is TaskId.K_R3 and flavor is Flavor.EICU:
        fields["option_list"] = _numbered([r.name for r in drug_rules()])
    return tpl.format(**fields)
