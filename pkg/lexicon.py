"""
Text normalization layer - tokenization, lemmatization and synonym lookup

The lexicon is a set of flat dictionary files:
- lemma dictionary: ``surface<TAB>lemma`` per line
- synonym / antonym groups: comma separated lemmas per line
- stopwords: one lemma per line
- stem rules: ``suffix<TAB>replacement`` per line, tried in file order when the
  lemma dictionary misses. A rule whose replacement equals its suffix protects
  the word from further stripping.

Morphology sits behind ``Normalizer``. ``RuleNormalizer`` (lemma dictionary
plus stem rules) is the default; ``PorterNormalizer`` keeps the lemma
dictionary as an exception list and falls back to the nltk Porter stemmer.
"""
import re
import logging
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Set, Tuple, Union

from nltk.stem import PorterStemmer

from exceptions import LexiconError
from models import Gene

logger = logging.getLogger(__name__)

LemmaList = List[str]
PathLike = Union[str, Path]

TOKEN_PATTERN = re.compile(r"[^\W_]+")

# File names looked up by load_lexicon_dir
LEMMA_FILE = "lemmas.tsv"
SYNONYM_FILE = "synonyms.txt"
STOPWORD_FILE = "stopwords.txt"
STEM_RULE_FILE = "stem_rules.tsv"
ANTONYM_FILE = "antonyms.txt"


class StemRule(NamedTuple):
    suffix: str
    replacement: str

    @property
    def protects(self) -> bool:
        return self.suffix == self.replacement


def tokenize(text: str) -> List[str]:
    """Lowercase the text and split it on every non letter/digit character"""
    return TOKEN_PATTERN.findall(text.lower())


def _lemma_table(lemma_map: Optional[Mapping[str, str]]) -> MappingProxyType:
    table = MappingProxyType(dict(lemma_map or {}))
    for lemma in sorted(set(table.values())):
        if lemma in table and table[lemma] != lemma:
            raise LexiconError(f"lemma chain at '{lemma}'")
    return table


class Normalizer:
    """Morphology interface: one token in, its lemma out (stopwords are the lexicon's business)"""

    name = "normalizer"

    def lemma_of(self, token: str) -> str:
        raise NotImplementedError


class RuleNormalizer(Normalizer):
    """Lemma dictionary first, then the ordered suffix rules"""

    name = "Rules"
    MIN_STEM = 3

    def __init__(
        self,
        lemma_map: Optional[Mapping[str, str]] = None,
        stem_rules: Optional[Iterable[Tuple[str, str]]] = None,
    ):
        self.lemma_map = _lemma_table(lemma_map)
        self.stem_rules = tuple(StemRule(*rule) for rule in (stem_rules or []))
        self._lemmas = frozenset(self.lemma_map.values())

    def _strip(self, token: str) -> str:
        if not token.isalpha():
            return token
        while True:
            rule = next(
                (
                    r for r in self.stem_rules
                    if token.endswith(r.suffix) and len(token) - len(r.suffix) >= self.MIN_STEM
                ),
                None,
            )
            if rule is None or rule.protects:
                return token
            token = token[: len(token) - len(rule.suffix)] + rule.replacement

    def lemma_of(self, token: str) -> str:
        if token in self._lemmas:
            return token
        if token in self.lemma_map:
            return self.lemma_map[token]
        stem = self._strip(token)
        return self.lemma_map.get(stem, stem)


class PorterNormalizer(Normalizer):
    """Lemma dictionary as an exception list, nltk Porter stemmer for everything else"""

    name = "Porter"

    def __init__(self, lemma_map: Optional[Mapping[str, str]] = None):
        self.lemma_map = _lemma_table(lemma_map)
        self._lemmas = frozenset(self.lemma_map.values())
        self._stemmer = PorterStemmer()

    def lemma_of(self, token: str) -> str:
        if token in self._lemmas:
            return token
        if token in self.lemma_map:
            return self.lemma_map[token]
        if not token.isalpha():
            return token
        # A Porter stem is not always a fixed point ("agreed" -> "agre" -> "agr")
        for _ in range(len(token)):
            stem = self._stemmer.stem(token)
            if stem == token:
                break
            token = stem
        return self.lemma_map.get(token, token)


NORMALIZER_KINDS = (RuleNormalizer.name, PorterNormalizer.name)


def build_normalizer(
    kind: str,
    lemma_map: Optional[Mapping[str, str]] = None,
    stem_rules: Optional[Iterable[Tuple[str, str]]] = None,
) -> Normalizer:
    """
    Build the normalizer named by ``kind``

    Args:
        kind: "Rules" or "Porter"
        lemma_map: Lemma dictionary, used by both
        stem_rules: Suffix rules, used by "Rules" only

    Returns:
        Normalizer instance
    """
    if kind == RuleNormalizer.name:
        return RuleNormalizer(lemma_map, stem_rules)
    if kind == PorterNormalizer.name:
        if stem_rules:
            logger.info(f"Porter normalizer ignores {len(list(stem_rules))} stem rules")
        return PorterNormalizer(lemma_map)
    raise LexiconError(f"unknown normalizer '{kind}', expected one of {', '.join(NORMALIZER_KINDS)}")


class Lexicon:
    """Immutable term dictionary: normalizer, synonym groups, stopwords"""

    def __init__(
        self,
        lemma_map: Optional[Dict[str, str]] = None,
        synonym_groups: Optional[Iterable[Iterable[str]]] = None,
        stopwords: Optional[Iterable[str]] = None,
        stem_rules: Optional[Iterable[Tuple[str, str]]] = None,
        antonym_groups: Optional[Iterable[Iterable[str]]] = None,
        normalizer: Optional[Normalizer] = None,
    ):
        if normalizer is not None and (lemma_map or stem_rules):
            raise ValueError("pass either a normalizer or lemma_map/stem_rules, not both")
        self.normalizer = normalizer or RuleNormalizer(lemma_map, stem_rules)
        self.stopwords = frozenset(stopwords or [])

        self._group_of: Dict[str, frozenset] = {}
        self.synonym_groups = self._normalize_groups(synonym_groups, "synonym")
        # Loaded and validated, never consulted by the algorithm
        self.antonym_groups = self._normalize_groups(antonym_groups, "antonym")
        for group in self.synonym_groups:
            for lemma in group:
                self._group_of[lemma] = group

    def _normalize_groups(self, groups: Optional[Iterable[Iterable[str]]], kind: str) -> Tuple[frozenset, ...]:
        """Members are stored as lemma keys, so 'Panels' in a file matches 'panel' in text"""
        normalized = []
        seen: Set[str] = set()
        for group in groups or []:
            members = set()
            for member in sorted(group):
                key = self.lemma_key(member)
                if not key or member in self.stopwords:
                    raise LexiconError(f"stopword '{member}' in a {kind} group")
                if key != member:
                    logger.debug(f"{kind} group member '{member}' stored as '{key}'")
                members.add(key)
            for key in sorted(members):
                if key in seen:
                    raise LexiconError(f"lemma '{key}' in two {kind} groups")
                seen.add(key)
            normalized.append(frozenset(members))
        return tuple(normalized)

    def lemma_of(self, token: str) -> str:
        """Resolve a token to its lemma, ignoring stopwords"""
        return self.normalizer.lemma_of(token)

    def normalize(self, token: str) -> Optional[str]:
        """
        Normalize one token

        Args:
            token: Output element of ``tokenize``

        Returns:
            The lemma, or None when the token is a stopword
        """
        lemma = self.lemma_of(token)
        if token in self.stopwords or lemma in self.stopwords:
            return None
        return lemma

    def analyze(self, text: str) -> List[Tuple[str, Optional[str]]]:
        """Token -> lemma pairs, stopwords mapped to None"""
        return [(token, self.normalize(token)) for token in tokenize(text)]

    def lemmatize_text(self, text: str) -> LemmaList:
        return [lemma for _, lemma in self.analyze(text) if lemma is not None]

    def lemma_key(self, phrase: str) -> str:
        """Identity of a (possibly multi-word) concept"""
        return " ".join(self.lemmatize_text(phrase))

    def synonyms_of(self, lemma: str) -> Set[str]:
        group = self._group_of.get(lemma)
        if group is None:
            return set()
        return set(group - {lemma})


def _read_lines(path: PathLike) -> List[Tuple[int, str]]:
    path = Path(path)
    if not path.is_file():
        raise LexiconError("file not found", path=str(path))
    lines = []
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append((number, raw.rstrip("\r\n")))
    return lines


def _single_token(value: str, path: PathLike, number: int, what: str) -> str:
    tokens = tokenize(value)
    if len(tokens) != 1:
        raise LexiconError(f"expected a single-word {what}, got '{value.strip()}'", str(path), number)
    return tokens[0]


def _read_lemma_map(path: PathLike) -> Dict[str, str]:
    lemma_map: Dict[str, str] = {}
    for number, line in _read_lines(path):
        fields = [f for f in line.split("\t") if f.strip()]
        if len(fields) != 2:
            raise LexiconError("expected 'surface<TAB>lemma'", str(path), number)
        surface = _single_token(fields[0], path, number, "surface form")
        lemma = _single_token(fields[1], path, number, "lemma")
        if lemma_map.get(surface, lemma) != lemma:
            raise LexiconError(f"conflicting lemmas for '{surface}'", str(path), number)
        lemma_map[surface] = lemma
    return lemma_map


def _read_groups(path: PathLike) -> List[Set[str]]:
    groups = []
    for number, line in _read_lines(path):
        group = set()
        for member in line.split(","):
            key = " ".join(tokenize(member))
            if not key:
                raise LexiconError("empty group member", str(path), number)
            group.add(key)
        groups.append(group)
    return groups


def _read_stopwords(path: PathLike) -> Set[str]:
    return {_single_token(line, path, number, "stopword") for number, line in _read_lines(path)}


def _read_stem_rules(path: PathLike) -> List[StemRule]:
    rules = []
    for number, line in _read_lines(path):
        suffix, _, replacement = line.partition("\t")
        suffix, replacement = suffix.strip().lower(), replacement.strip().lower()
        if not suffix.isalpha() or (replacement and not replacement.isalpha()):
            raise LexiconError("expected 'suffix<TAB>replacement' of letters", str(path), number)
        rule = StemRule(suffix, replacement)
        if not rule.protects and len(replacement) >= len(suffix):
            raise LexiconError(
                f"replacement '{replacement}' must be shorter than suffix '{suffix}'", str(path), number
            )
        rules.append(rule)
    return rules


def load_lexicon(
    lemmas: Optional[PathLike] = None,
    synonyms: Optional[PathLike] = None,
    stopwords: Optional[PathLike] = None,
    stem_rules: Optional[PathLike] = None,
    antonyms: Optional[PathLike] = None,
    normalizer: str = RuleNormalizer.name,
) -> Lexicon:
    """
    Load a lexicon from dictionary files

    Args:
        lemmas: Lemma dictionary (TSV)
        synonyms: Synonym groups
        stopwords: Stopword list
        stem_rules: Suffix rules (TSV)
        antonyms: Antonym groups
        normalizer: Normalizer kind, "Rules" or "Porter"

    Returns:
        Lexicon satisfying its invariants

    Raises:
        LexiconError on missing files, malformed lines, or invariant violations
    """
    try:
        lexicon = Lexicon(
            synonym_groups=_read_groups(synonyms) if synonyms else None,
            stopwords=_read_stopwords(stopwords) if stopwords else None,
            antonym_groups=_read_groups(antonyms) if antonyms else None,
            normalizer=build_normalizer(
                normalizer,
                lemma_map=_read_lemma_map(lemmas) if lemmas else None,
                stem_rules=_read_stem_rules(stem_rules) if stem_rules else None,
            ),
        )
    except LexiconError as e:
        logger.error(f"Failed to load lexicon: {e}")
        raise

    logger.info(
        f"Lexicon loaded: {lexicon.normalizer.name} normalizer, {len(lexicon.synonym_groups)} synonym groups, "
        f"{len(lexicon.stopwords)} stopwords"
    )
    return lexicon


def load_lexicon_dir(directory: PathLike, normalizer: str = RuleNormalizer.name) -> Lexicon:
    """Load the standard dictionary files found in a directory (absent files are skipped)"""
    directory = Path(directory)
    if not directory.is_dir():
        raise LexiconError("dictionary directory not found", path=str(directory))

    def pick(name: str) -> Optional[Path]:
        candidate = directory / name
        return candidate if candidate.is_file() else None

    return load_lexicon(
        lemmas=pick(LEMMA_FILE),
        synonyms=pick(SYNONYM_FILE),
        stopwords=pick(STOPWORD_FILE),
        stem_rules=pick(STEM_RULE_FILE),
        antonyms=pick(ANTONYM_FILE),
        normalizer=normalizer,
    )


def load_keyword_pool(path: PathLike, lexicon: Lexicon) -> List[Gene]:
    """
    Read the keyword pool: one concept (word or phrase) per line

    Args:
        path: Pool file
        lexicon: Lexicon used to build the lemma keys

    Returns:
        Genes in file order, deduplicated by lemma key
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Keyword pool not found: {path}")

    genes: List[Gene] = []
    seen: Set[str] = set()
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        phrase = " ".join(raw.split())
        if not phrase or phrase.startswith("#"):
            continue
        key = lexicon.lemma_key(phrase)
        if not key:
            logger.warning(f"{path}:{number}: '{phrase}' has no lemma after stopword removal, skipped")
            continue
        if key in seen:
            continue
        seen.add(key)
        genes.append(Gene(lemma_key=key, surface=phrase))

    logger.info(f"Keyword pool: {len(genes)} concepts from {path}")
    return genes
