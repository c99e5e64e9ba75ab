"""Prompt templates and a deterministic bag-of-features text encoder.

Prompts come in two flavors: domain prompts describe where a graph comes
from, property prompts describe measured statistics with a coarse
low/medium/high label.  The encoder hashes word unigrams and character
trigrams of the case-folded text into a fixed-width signed-count vector and
L2-normalizes it.  All hashing goes through blake2b so the vectors are stable
across processes (the builtin hash() is salted per run).
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from .rng import as_generator

__all__ = [
    "ENCODER_ID",
    "GROUP_LEVELS",
    "render_domain_prompt",
    "render_property_prompt",
    "encode_text",
    "TextEncoder",
    "EmbeddingStore",
    "save_embeddings",
    "load_embeddings",
]

ENCODER_ID = "hash3gram-v1"

GROUP_LEVELS = ("low", "medium", "high")

# At least three phrasings per known domain; every phrasing mentions both the
# graph name and a recognizable domain word.
_DOMAIN_TEMPLATES = {
    "fb": [
        "The {name} graph represents a social friendship network from Facebook.",
        "The {name} graph captures who is friends with whom on a Facebook-style social platform.",
        "Drawn from Facebook, the {name} graph links people through social ties.",
    ],
    "asn": [
        "The {name} graph represents a network of autonomous systems exchanging internet routes.",
        "The {name} graph captures peering between autonomous systems on the internet.",
        "Drawn from internet routing data, the {name} graph connects autonomous systems.",
    ],
    "email": [
        "The {name} graph represents an email exchange network within an organization.",
        "The {name} graph captures who emails whom inside an institution.",
        "Drawn from mail logs, the {name} graph links accounts by email traffic.",
    ],
    "web": [
        "The {name} graph represents hyperlinks between pages of a web site.",
        "The {name} graph captures how web pages reference each other.",
        "Drawn from a web crawl, the {name} graph connects linked pages.",
    ],
    "road": [
        "The {name} graph represents intersections joined by segments of a road network.",
        "The {name} graph captures the layout of a road system.",
        "Drawn from a road map, the {name} graph links junctions by streets.",
    ],
    "power": [
        "The {name} graph represents a network of buses in a power distribution system.",
        "The {name} graph captures how buses interconnect across a power grid.",
        "Drawn from a power distribution system, the {name} graph links electrical buses.",
    ],
    "chem": [
        "The {name} graph represents atoms joined by bonds in a chemical compound.",
        "The {name} graph captures the bond structure of a chemical molecule.",
        "Drawn from chemistry data, the {name} graph links atoms within a compound.",
    ],
    "bio": [
        "The {name} graph represents interactions between proteins in a biological pathway.",
        "The {name} graph captures a biological interaction network.",
        "Drawn from biology, the {name} graph links molecules that interact in the cell.",
    ],
    "econ": [
        "The {name} graph represents dependencies in an economic model.",
        "The {name} graph captures couplings between variables of an economic system.",
        "Drawn from economic modeling, the {name} graph links interdependent quantities.",
    ],
    "rt": [
        "The {name} graph represents retweet activity between accounts on a microblogging platform.",
        "The {name} graph captures who retweets whom on social media.",
        "Drawn from retweet cascades, the {name} graph links accounts by shared posts.",
    ],
    "col": [
        "The {name} graph represents a scientific collaboration network of coauthors.",
        "The {name} graph captures which researchers collaborate on papers.",
        "Drawn from coauthorship records, the {name} graph links collaborating scientists.",
    ],
    "eco": [
        "The {name} graph represents feeding relationships in an ecological food web.",
        "The {name} graph captures which species interact within an ecosystem.",
        "Drawn from ecology, the {name} graph links species by trophic interactions.",
    ],
    "citation": [
        "The {name} graph represents citations between scholarly papers.",
        "The {name} graph captures which papers cite which in a citation network.",
        "Drawn from bibliographic data, the {name} graph links papers by citation.",
    ],
}

_GENERIC_TEMPLATES = [
    "The {name} graph is a network drawn from the {domain} domain.",
    "The {name} graph represents connectivity observed in {domain} data.",
    "Drawn from the {domain} domain, the {name} graph records observed links.",
]

_PROPERTY_TEMPLATES = {
    "degree": [
        "The graph has a {level} average degree of {deg:.2f}, with an average clustering coefficient of {cc:.2f}.",
        "With an average degree of {deg:.2f}, the graph sits in the {level} connectivity range; its average clustering coefficient is {cc:.2f}.",
        "This graph shows {level} connectivity: the average degree is {deg:.2f} and the average clustering coefficient is {cc:.2f}.",
    ],
    "clustering": [
        "The graph has a {level} average clustering coefficient of {cc:.2f}, with an average degree of {deg:.2f}.",
        "With an average clustering coefficient of {cc:.2f}, the graph is {level} in local cohesion; its average degree is {deg:.2f}.",
        "This graph shows {level} local clustering: the average clustering coefficient is {cc:.2f} and the average degree is {deg:.2f}.",
    ],
}


def render_domain_prompt(domain: str, name: str,
                         rng: np.random.Generator | int = 0) -> str:
    """One sentence tying ``name`` to its domain, phrasing chosen by the rng."""
    rng = as_generator(rng)
    key = domain.strip().lower()
    templates = _DOMAIN_TEMPLATES.get(key)
    if templates is None:
        templates = [t for t in _GENERIC_TEMPLATES]
    pick = templates[int(rng.integers(len(templates)))]
    return pick.format(name=name, domain=domain)


def render_property_prompt(
    avg_degree: float,
    avg_clustering: float,
    level: str,
    which: str,
    rng: np.random.Generator | int = 0,
) -> str:
    """One sentence stating both statistics to two decimals, with the
    low/medium/high adjective attached to the grouped one."""
    if level not in GROUP_LEVELS:
        raise ValueError(f"level must be one of {GROUP_LEVELS}, got {level!r}")
    if which not in _PROPERTY_TEMPLATES:
        raise ValueError(f"which must be 'degree' or 'clustering', got {which!r}")
    rng = as_generator(rng)
    templates = _PROPERTY_TEMPLATES[which]
    pick = templates[int(rng.integers(len(templates)))]
    return pick.format(level=level, deg=avg_degree, cc=avg_clustering)


def _hash64(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


_WORD_RE = re.compile(r"[a-z0-9]+")


def encode_text(text: str, dim: int) -> np.ndarray:
    """Signed hashed bag of word unigrams and character trigrams, unit norm."""
    if dim < 8:
        raise ValueError(f"embedding dim must be >= 8, got {dim}")
    folded = text.casefold().strip()
    if not folded:
        raise ValueError("cannot encode empty text")
    tokens = _WORD_RE.findall(folded)
    tokens += [folded[i:i + 3] for i in range(len(folded) - 2)]
    vec = np.zeros(dim, dtype=np.float64)
    for tok in tokens:
        h = _hash64(tok)
        idx = h % dim
        sign = 1.0 if (h >> 62) & 1 else -1.0
        vec[idx] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # total cancellation is possible in principle; fall back to a
        # deterministic point mass so the embedding stays usable
        vec[_hash64(folded) % dim] = 1.0
        norm = 1.0
    return vec / norm


@dataclass(frozen=True)
class TextEncoder:
    """Callable wrapper so training code only sees text -> vector."""

    dim: int
    encoder_id: str = ENCODER_ID

    def __call__(self, text: str) -> np.ndarray:
        return encode_text(text, self.dim)


class EmbeddingStore:
    """Embeddings loaded from a file, keyed by the sha256 of the prompt text."""

    def __init__(self, dim: int, encoder_id: str, rows: dict[str, np.ndarray]):
        self.dim = int(dim)
        self.encoder_id = encoder_id
        self._rows = dict(rows)

    def __len__(self) -> int:
        return len(self._rows)

    def __call__(self, text: str) -> np.ndarray:
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        try:
            return self._rows[key]
        except KeyError:
            raise KeyError(f"no stored embedding for prompt: {text!r}") from None


def save_embeddings(path, texts, dim: int,
                    encoder=None) -> None:
    """Encode ``texts`` and write one row per unique prompt.

    Format: a header line ``dim=<d> encoder=<id>`` followed by rows of the
    prompt's sha256 hex digest and d floats (written with repr precision, so
    a round-trip is bit-exact).
    """
    encoder = encoder or TextEncoder(dim)
    seen = {}
    for text in texts:
        key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        if key not in seen:
            vec = np.asarray(encoder(text), dtype=np.float64)
            if vec.shape != (dim,):
                raise ValueError(
                    f"encoder returned shape {vec.shape}, expected ({dim},)")
            seen[key] = vec
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={dim} encoder={getattr(encoder, 'encoder_id', ENCODER_ID)}\n")
        for key in sorted(seen):
            floats = " ".join(f"{v:.17g}" for v in seen[key])
            fh.write(f"{key} {floats}\n")


def load_embeddings(path) -> EmbeddingStore:
    """Parse an embedding file; malformed rows are reported by line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty embedding file")
    m = re.fullmatch(r"dim=(\d+) encoder=(\S+)", lines[0].strip())
    if not m:
        raise ValueError(f"{path}:1: header must be 'dim=<d> encoder=<id>'")
    dim = int(m.group(1))
    encoder_id = m.group(2)
    if dim < 8:
        raise ValueError(f"{path}:1: dim must be >= 8, got {dim}")
    rows: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise ValueError(
                f"{path}:{lineno}: expected hash plus {dim} floats, "
                f"got {len(parts)} fields")
        key = parts[0]
        try:
            vec = np.array([float(p) for p in parts[1:]], dtype=np.float64)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric embedding value") from None
        rows[key] = vec
    return EmbeddingStore(dim, encoder_id, rows)
