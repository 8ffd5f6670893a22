"""
Normalizing tweet text
======================

Emojis become their names, links and hashtags become fixed tokens, and user
mentions are masked.  The output never changes when normalized again.
"""

from checkworthy.normalize import NormalizeOptions, normalize_tweet, violations

tweets = [
    "Check this 😂 https://t.co/abc #Breaking",
    "@WHO says 12 new cases today 👍🏽 www.who.int/news",
    "I ❤️ NY #NewYork #COVID19",
    "   lots   of\tspace\n",
]

for raw in tweets:
    out = normalize_tweet(raw)
    print(f"{raw!r}\n  -> {out!r}")
    assert normalize_tweet(out) == out and not violations(out)

# Mentions can be kept, and hashtags can keep their words instead of a token.
opts = NormalizeOptions(replace_mentions=False, segment_hashtags=True)
print(normalize_tweet("@WHO update #VaccineReport", opts))
