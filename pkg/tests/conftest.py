import json
import logging

import pytest
from PIL import Image


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


@pytest.fixture
def make_split(tmp_path):
    """Write a small split file with local images; returns its path."""

    def _make(name, rows, color="white"):
        img_dir = tmp_path / "images"
        img_dir.mkdir(exist_ok=True)
        out = []
        for row in rows:
            row = dict(row)
            if "image_path" not in row and "image_url" not in row:
                img = img_dir / f"{row['tweet_id']}.png"
                if not img.exists():
                    Image.new("RGB", (8, 8), color).save(img)
                row["image_path"] = f"images/{img.name}"
            out.append(row)
        return write_jsonl(tmp_path / f"{name}.jsonl", out)

    return _make


@pytest.fixture(autouse=True)
def _quiet_third_party():
    for name in ("transformers", "urllib3"):
        logging.getLogger(name).setLevel(logging.ERROR)
