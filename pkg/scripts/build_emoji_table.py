"""Regenerate src/checkworthy/data/emoji_names.tsv from the `emoji` package.

Names are the CLDR short names shipped by `emoji`, lowercased with
underscores turned into spaces.  Run after bumping the `emoji` version and
bump TABLE_REVISION when the transformation below changes.
"""

import sys
from pathlib import Path

import emoji

TABLE_REVISION = 1
OUT = Path(__file__).resolve().parents[1] / "src" / "checkworthy" / "data" / "emoji_names.tsv"

# '#' and '*' inside a name would look like hashtag / markup tokens downstream
REWRITES = {"#": "number sign", "*": "asterisk"}


def clean(name):
    name = name.strip(":").replace("_", " ").lower()
    for old, new in REWRITES.items():
        name = name.replace(old, new)
    return " ".join(name.split())


def main():
    rows = sorted(
        (" ".join(f"{ord(c):04X}" for c in seq), clean(data["en"]))
        for seq, data in emoji.EMOJI_DATA.items()
    )
    version = f"{emoji.__version__}-r{TABLE_REVISION}"
    with open(OUT, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# version\t{version}\n")
        fh.write("# source\temoji package CLDR short names, lowercased, underscores as spaces\n")
        for cps, name in rows:
            fh.write(f"{cps}\t{name}\n")
    print(f"wrote {len(rows)} entries to {OUT} (version {version})", file=sys.stderr)


if __name__ == "__main__":
    main()
