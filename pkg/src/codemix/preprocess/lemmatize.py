"""Rule-based noun lemmatizer for lowercase English tokens.

Suffix-detachment rules in the WordNet morphy style, but dictionary-free:
irregular plurals and invariant s-final words are listed explicitly, and the
rule order guarantees idempotence (no rule output is itself reducible). A
final guard refuses any rewrite whose result would be re-written by an
earlier pipeline stage (a stopword or a contraction key), which keeps the
full English pipeline a fixed point on its own output.
"""

from __future__ import annotations

from functools import lru_cache

from .tables import load_contractions, load_stopwords

IRREGULAR = {
    "men": "man", "women": "woman", "children": "child", "teeth": "tooth",
    "feet": "foot", "geese": "goose", "mice": "mouse", "lice": "louse",
    "oxen": "ox", "wives": "wife", "knives": "knife", "lives": "life",
    "leaves": "leaf", "wolves": "wolf", "halves": "half", "shelves": "shelf",
    "calves": "calf", "loaves": "loaf", "thieves": "thief",
    "scarves": "scarf", "selves": "self", "elves": "elf", "buses": "bus",
}

# s-final words that are not plurals
KEEP_AS_IS = frozenset("""
news series species physics politics mathematics economics ethics
athletics gymnastics linguistics statistics measles diabetes rabies
billiards darts lens means clothes alms amends doldrums outskirts
pants scissors shorts thanks trousers
""".split())


@lru_cache(maxsize=1)
def _guard() -> frozenset:
    return frozenset(load_contractions()) | load_stopwords("english")


def lemma_token(token: str) -> str:
    if token in IRREGULAR:
        return IRREGULAR[token]
    if token in KEEP_AS_IS:
        return token
    if len(token) < 4 or not token.endswith("s"):
        return token
    if token.endswith(("ss", "us", "is")):
        return token
    if token.endswith("ies") and len(token) >= 5:
        result = token[:-3] + "y"
    elif token.endswith(("sses", "xes", "ches", "shes", "zzes")) and len(token) >= 5:
        result = token[:-2]
    else:
        result = token[:-1]
    if result in _guard():
        return token
    return result


def lemmatize(text: str) -> str:
    """Replace each whitespace token by its lemma; unknown tokens pass through."""
    return " ".join(lemma_token(t) for t in text.split())
