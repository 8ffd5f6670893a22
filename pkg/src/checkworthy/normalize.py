"""Tweet text normalization.

Emojis become their lowercase descriptive names, URLs become ``URL``,
hashtags become ``HASHTAG`` and user mentions become ``@USER``.  Everything
else is left alone apart from whitespace collapsing: no lowercasing, no
punctuation stripping.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

# Characters in these ranges never survive normalization.  Emoji found in
# the name table are replaced by their names; any remaining code point in a
# range (stray modifiers, selectors, joiners, unassigned pictographs) is dropped.
EMOJI_RANGES = (
    (0x200D, 0x200D),    # zero width joiner
    (0x20E3, 0x20E3),    # combining enclosing keycap
    (0x2600, 0x27BF),    # miscellaneous symbols, dingbats
    (0x2B00, 0x2BFF),    # miscellaneous symbols and arrows
    (0xFE00, 0xFE0F),    # variation selectors
    (0x1F000, 0x1FAFF),  # mahjong .. symbols and pictographs extended-A
    (0xE0020, 0xE007F),  # tag characters
)
EMOJI_RANGE_RE = re.compile("[" + "".join(f"{chr(a)}-{chr(b)}" for a, b in EMOJI_RANGES) + "]")

URL_RE = re.compile(r"(?<![\w.])(?:https?://|www\.|t\.co/)\S+", re.IGNORECASE)
HASHTAG_RE = re.compile(r"(?<!\w)#\w+")
MENTION_RE = re.compile(r"(?<!\w)@\w+")
HASHTAG_WORD_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z]?[a-z]+|\d+")

_MAX_PASSES = 10


@dataclass(frozen=True)
class NormalizeOptions:
    url_token: str = "URL"
    hashtag_token: str = "HASHTAG"
    user_token: str = "@USER"
    replace_mentions: bool = True
    # keep hashtag content as separate words instead of the generic token
    segment_hashtags: bool = False


@dataclass(frozen=True)
class EmojiTable:
    version: str
    names: dict
    first_chars: frozenset
    max_len: int


@lru_cache(maxsize=1)
def emoji_table() -> EmojiTable:
    names = {}
    version = None
    text = resources.files("checkworthy").joinpath("data/emoji_names.tsv").read_text(encoding="utf-8")
    for line in text.splitlines():
        key, value = line.split("\t", 1)
        if key == "# version":
            version = value
        elif not key.startswith("#"):
            names["".join(chr(int(cp, 16)) for cp in key.split())] = value
    if version is None:
        raise RuntimeError("emoji name table has no version header")
    return EmojiTable(version, names, frozenset(s[0] for s in names), max(map(len, names)))


TABLE_VERSION = emoji_table().version


def replace_emojis(text: str) -> str:
    """Replace emoji sequences (longest match first) by `` name ``, drop leftovers."""
    table = emoji_table()
    out = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in table.first_chars:
            for size in range(min(table.max_len, n - i), 0, -1):
                name = table.names.get(text[i:i + size])
                if name is not None:
                    out.append(f" {name} ")
                    i += size
                    break
            else:
                out.append(ch)
                i += 1
        else:
            out.append(ch)
            i += 1
    return EMOJI_RANGE_RE.sub("", "".join(out))


def _segment(match, token):
    words = HASHTAG_WORD_RE.findall(match.group(0)[1:])
    return " ".join(words) if words else token


def _single_pass(text: str, opts: NormalizeOptions) -> str:
    text = replace_emojis(text)
    text = URL_RE.sub(opts.url_token, text)
    if opts.segment_hashtags:
        text = HASHTAG_RE.sub(lambda m: _segment(m, opts.hashtag_token), text)
    else:
        text = HASHTAG_RE.sub(opts.hashtag_token, text)
    if opts.replace_mentions:
        text = MENTION_RE.sub(opts.user_token, text)
    return " ".join(text.split())


def normalize_tweet(text: str, options: NormalizeOptions | None = None) -> str:
    """Normalize one tweet.  Total over unicode strings and idempotent.

    A substitution can expose a new entity (``#`` + URL becomes ``#URL``, a
    hashtag), so passes repeat until the text stops changing.
    """
    opts = options or NormalizeOptions()
    current = _single_pass(text, opts)
    for _ in range(_MAX_PASSES):
        nxt = _single_pass(current, opts)
        if nxt == current:
            return current
        current = nxt
    raise RuntimeError(f"normalization did not converge for {text!r}")


def normalize_corpus(corpus, options: NormalizeOptions | None = None) -> list[tuple[str, str]]:
    return [(r.tweet_id, normalize_tweet(r.text, options)) for r in corpus]


def violations(text: str) -> list[str]:
    """Which normalized-text invariants ``text`` breaks (empty list if none)."""
    found = []
    if URL_RE.search(text):
        found.append("url")
    if EMOJI_RANGE_RE.search(text):
        found.append("emoji")
    if HASHTAG_RE.search(text):
        found.append("hashtag")
    return found
