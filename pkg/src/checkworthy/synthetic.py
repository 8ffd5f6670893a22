"""Small synthetic corpora for desk-scale runs.

Check-worthy tweets carry claim-like text and an image showing a claim-like
phrase; the others carry casual text and a casual phrase.  The classes are
separable by construction in both modalities.  Rendered phrases are also
stored as the platform OCR text.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

FONT_CANDIDATES = (
    "/usr/share/fonts/truetype/dejavu/DejaVuSans-Bold.ttf",
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
)

YES_TEXTS = [
    "Officials confirm {n} new coronavirus deaths in the city today",
    "Minister claims the vaccine causes {n} percent more infections",
    "Government reports {n} million people lost their jobs this year",
    "Study proves drinking hot water cures the virus in {n} hours",
    "Health ministry says {n} hospitals are now at full capacity",
]
NO_TEXTS = [
    "What a lovely sunset at the beach tonight {e}",
    "Happy birthday to my best friend {e}",
    "Enjoying a cup of coffee this morning {e}",
    "My puppy learned a new trick today {e}",
    "Cannot wait for the weekend {e}",
]
YES_PHRASES = ["BREAKING NEWS", "DEATH TOLL RISES", "OFFICIAL FIGURES", "VACCINE REPORT", "CASES CONFIRMED"]
NO_PHRASES = ["GOOD MORNING", "HAPPY WEEKEND", "SUMMER VIBES", "LOVE YOU", "COFFEE TIME"]
EMOJIS = ["😂", "❤️", "☕", "🐶", "🌅", ""]
COLORS = ["white", "lightyellow", "lightblue", "mistyrose", "honeydew"]


def load_font(size: int):
    for path in FONT_CANDIDATES:
        try:
            return ImageFont.truetype(path, size)
        except OSError:
            continue
    return ImageFont.load_default(size=size)


def render_text(text: str, path, size=(640, 160), background="white", fill="black", font_size=44) -> Path:
    """Draw ``text`` on a plain background and save it; empty text gives a blank image."""
    image = Image.new("RGB", size, background)
    if text:
        draw = ImageDraw.Draw(image)
        draw.text((24, (size[1] - font_size) // 2), text, fill=fill, font=load_font(font_size))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image.save(path)
    return path


def make_records(n: int, seed: int = 0, prefix: str = "") -> list[dict]:
    rng = random.Random(seed)
    offset = rng.randrange(len(YES_PHRASES))
    rows = []
    for i in range(n):
        yes = i % 2 == 0
        # phrases cycle so every one of them shows up in any split of 10+ records
        if yes:
            text = rng.choice(YES_TEXTS).format(n=rng.randint(2, 900))
            phrase = YES_PHRASES[(i // 2 + offset) % len(YES_PHRASES)]
        else:
            text = rng.choice(NO_TEXTS).format(e=rng.choice(EMOJIS)).strip()
            phrase = NO_PHRASES[(i // 2 + offset) % len(NO_PHRASES)]
        if rng.random() < 0.3:
            text += " https://t.co/" + "".join(rng.choices("abcdefXYZ123", k=8))
        if rng.random() < 0.3:
            text = "@" + rng.choice(["WHO", "news_desk", "friend"]) + " " + text
        rows.append({
            "tweet_id": f"{prefix}{1000 + i}",
            "tweet_text": text,
            "ocr_text": phrase,
            "class_label": "Yes" if yes else "No",
            "_phrase": phrase,
            "_background": rng.choice(COLORS),
        })
    return rows


def write_corpus(directory, sizes=None, seed: int = 0, render: bool = True) -> dict:
    """Write one JSONL file per split (plus rendered images) and return the split paths.

    ``sizes`` maps split name to record count; the default totals 40 records.
    """
    sizes = sizes or {"train": 24, "dev": 8, "test": 8}
    directory = Path(directory)
    (directory / "images").mkdir(parents=True, exist_ok=True)
    paths = {}
    for k, (split, n) in enumerate(sizes.items()):
        rows = make_records(n, seed=seed * 1000 + k, prefix=f"{split[:2]}")
        path = directory / f"{split}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                image = Path("images") / f"{row['tweet_id']}.png"
                if render:
                    render_text(row["_phrase"], directory / image, background=row["_background"])
                out = {k: v for k, v in row.items() if not k.startswith("_")}
                out["image_path"] = str(image)
                fh.write(json.dumps(out, ensure_ascii=False) + "\n")
        paths[split] = path
    return paths
