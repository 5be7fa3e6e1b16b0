"""Event categories, the keyword lexicon and keyword matching.

The lexicon maps each of nine event categories to a small set of keyword
lemmas. Surface forms are produced by explicit inflection rules plus an
override table rather than a stemmer, so every matched form is auditable.
Abbreviation lemmas ("st", "dr", "blvd") only ever match as whole tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import yaml


class EventCategory(Enum):
    PRE = 0   # preventative measures (evacuation, shelter)
    RES = 1   # help and rescue
    CAS = 2   # casualties
    HOU = 3   # housing
    UTI = 4   # utilities and supplies
    TRA = 5   # transportation
    FCI = 6   # flood control infrastructure
    BWS = 7   # business / work / school
    HAZ = 8   # built-environment hazards
    OTHER = 9  # catch-all

    def __lt__(self, other: "EventCategory") -> bool:
        return self.value < other.value


EVENT_CATEGORIES: tuple[EventCategory, ...] = tuple(
    c for c in EventCategory if c is not EventCategory.OTHER
)

# Default keyword lemmas per category (single tokens only).
DEFAULT_LEMMAS: dict[EventCategory, tuple[str, ...]] = {
    EventCategory.PRE: ("evacuate", "evacuation", "evacuee", "shelter", "refugee"),
    EventCategory.RES: ("rescue", "boat", "help", "donate", "guard"),
    EventCategory.CAS: ("die", "dead", "drown", "injure", "hurt"),
    EventCategory.HOU: ("house", "home", "room", "apt", "apartment"),
    EventCategory.UTI: ("power", "electricity", "gas", "store", "food", "supply"),
    EventCategory.TRA: ("airplane", "plane", "flight", "airport",
                        "highway", "freeway", "road", "avenue", "ave",
                        "dr", "rd", "st", "hwy", "fwy", "blvd"),
    EventCategory.FCI: ("reservoir", "bayou", "canal", "dam", "levee"),
    EventCategory.BWS: ("office", "school", "closed", "open", "work"),
    EventCategory.HAZ: ("fire", "explosion", "collapse", "poison", "electrocute"),
}

# Irregular forms the suffix rules cannot produce.
INFLECTION_OVERRIDES: dict[str, frozenset[str]] = {
    "die": frozenset({"dies", "died", "dying"}),
    "hurt": frozenset({"hurts", "hurting"}),
}

_VOWELS = set("aeiou")
# Lemmas with these endings are treated as nouns: pluralized only.
_NOUN_SUFFIXES = ("tion", "sion", "ity", "ness", "ment", "ee", "ance", "ence", "ship")
_SIBILANT_ENDINGS = ("s", "x", "z", "ch", "sh")


def _vowel_groups(lemma: str) -> int:
    return len(re.findall(r"[aeiou]+", lemma))


def _doubles_final(lemma: str) -> bool:
    # Single-syllable consonant-vowel-consonant ending: stop -> stopped.
    if len(lemma) < 3 or _vowel_groups(lemma) != 1:
        return False
    last, mid, pre = lemma[-1], lemma[-2], lemma[-3]
    return (last not in _VOWELS and last not in "wxy"
            and mid in _VOWELS and pre not in _VOWELS)


def _pluralize(lemma: str) -> str:
    if lemma.endswith("y") and len(lemma) > 1 and lemma[-2] not in _VOWELS:
        return lemma[:-1] + "ies"
    if lemma.endswith(_SIBILANT_ENDINGS):
        return lemma + "es"
    return lemma + "s"


def expand_variants(lemma: str, overrides: Optional[Mapping[str, Iterable[str]]] = None) -> frozenset[str]:
    """Surface forms of a lowercase lemma: itself, rule inflections, overrides.

    Vowel-less abbreviations get only the plural; noun-suffixed lemmas are
    pluralized only; already-inflected -ed lemmas stay fixed. Everything else
    gets plural/3rd-person, past and gerund forms with e-drop and
    consonant-doubling handled.
    """
    forms = {lemma}
    if not _VOWELS & set(lemma):
        forms.add(lemma + "s")
    elif lemma.endswith("ed") and len(lemma) > 3:
        pass
    elif lemma.endswith(_NOUN_SUFFIXES):
        forms.add(_pluralize(lemma))
    else:
        forms.add(_pluralize(lemma))
        if lemma.endswith("e"):
            forms.add(lemma + "d")
        elif lemma.endswith("y") and len(lemma) > 1 and lemma[-2] not in _VOWELS:
            forms.add(lemma[:-1] + "ied")
        elif _doubles_final(lemma):
            forms.add(lemma + lemma[-1] + "ed")
        else:
            forms.add(lemma + "ed")
        if lemma.endswith("ie"):
            forms.add(lemma[:-2] + "ying")
        elif lemma.endswith("e") and not lemma.endswith(("ee", "oe", "ye")):
            forms.add(lemma[:-1] + "ing")
        elif _doubles_final(lemma):
            forms.add(lemma + lemma[-1] + "ing")
        else:
            forms.add(lemma + "ing")
    table = INFLECTION_OVERRIDES if overrides is None else {**INFLECTION_OVERRIDES, **{k: frozenset(v) for k, v in overrides.items()}}
    forms |= set(table.get(lemma, ()))
    return frozenset(forms)


@dataclass(frozen=True)
class KeywordHit:
    category: EventCategory
    lemma: str
    token_index: int


@dataclass
class KeywordLexicon:
    """Per-category lemma sets with an expanded surface-form table."""

    lemmas: dict[EventCategory, tuple[str, ...]]
    variants: dict[str, frozenset[str]] = field(default_factory=dict)
    surface_map: dict[str, tuple[tuple[EventCategory, str], ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if EventCategory.OTHER in self.lemmas and self.lemmas[EventCategory.OTHER]:
            raise ValueError("OTHER carries no keywords")
        if not self.variants:
            self.variants = {}
            for cat in self.lemmas:
                for lemma in self.lemmas[cat]:
                    if lemma != lemma.lower():
                        raise ValueError(f"lemma not lowercase: {lemma!r}")
                    self.variants.setdefault(lemma, expand_variants(lemma))
        surface: dict[str, list[tuple[EventCategory, str]]] = {}
        for cat in sorted(self.lemmas, key=lambda c: c.value):
            for lemma in self.lemmas[cat]:
                for form in sorted(self.variants[lemma]):
                    surface.setdefault(form, [])
                    if (cat, lemma) not in surface[form]:
                        surface[form].append((cat, lemma))
        self.surface_map = {k: tuple(v) for k, v in surface.items()}

    def categories_of(self, token: str) -> tuple[EventCategory, ...]:
        return tuple(cat for cat, _ in self.surface_map.get(token, ()))

    def match_keywords(self, tokens: Sequence[str]) -> set[KeywordHit]:
        """All (category, lemma, index) hits of surface forms in ``tokens``."""
        hits: set[KeywordHit] = set()
        for idx, token in enumerate(tokens):
            for cat, lemma in self.surface_map.get(token, ()):
                hits.add(KeywordHit(category=cat, lemma=lemma, token_index=idx))
        return hits

    def keyword_positions(self, tokens: Sequence[str]) -> tuple[int, ...]:
        """Sorted indices of tokens that are any keyword surface form."""
        return tuple(sorted({h.token_index for h in self.match_keywords(tokens)}))

    def keyword_baseline_predict(self, tokens: Sequence[str]) -> set[EventCategory]:
        """Sense-blind baseline: categories of all keyword hits, else {OTHER}."""
        cats = {h.category for h in self.match_keywords(tokens)}
        return cats if cats else {EventCategory.OTHER}


def default_lexicon() -> KeywordLexicon:
    return KeywordLexicon(lemmas=dict(DEFAULT_LEMMAS))


def load_lexicon(path: str | Path) -> KeywordLexicon:
    """Load a lexicon config: category code -> lemma list.

    Entries are either a plain lemma string or a mapping
    ``{lemma: ..., variants: [...]}`` pinning the surface forms explicitly.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError("lexicon config must map category codes to lemma lists")
    lemmas: dict[EventCategory, tuple[str, ...]] = {}
    variants: dict[str, frozenset[str]] = {}
    for code, entries in raw.items():
        cat = EventCategory[code]
        if cat is EventCategory.OTHER:
            raise ValueError("OTHER carries no keywords")
        lemma_list: list[str] = []
        for entry in entries or []:
            if isinstance(entry, str):
                lemma = entry.lower()
                variants.setdefault(lemma, expand_variants(lemma))
            else:
                lemma = str(entry["lemma"]).lower()
                explicit = {str(v).lower() for v in entry.get("variants", [])}
                variants[lemma] = frozenset({lemma} | explicit)
            lemma_list.append(lemma)
        lemmas[cat] = tuple(lemma_list)
    return KeywordLexicon(lemmas=lemmas, variants=variants)


def save_lexicon(lexicon: KeywordLexicon, path: str | Path) -> None:
    doc = {cat.name: list(lexicon.lemmas[cat]) for cat in sorted(lexicon.lemmas, key=lambda c: c.value)}
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, allow_unicode=True)
