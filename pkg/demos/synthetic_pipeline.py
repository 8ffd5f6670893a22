"""
A desk-scale run of the whole pipeline
======================================

Writes a 40-tweet synthetic corpus with rendered images, trains the text and
OCR branches with the tiny encoder, scores them and their fusion on dev, and
writes a submission for test.  Takes a couple of minutes on a CPU.

    python demos/synthetic_pipeline.py [output_dir]
"""

import sys
from pathlib import Path

import yaml

from checkworthy import cli
from checkworthy.synthetic import write_corpus

root = Path(sys.argv[1] if len(sys.argv) > 1 else "synthetic_run")
paths = write_corpus(root / "data")
print("corpus:", {k: str(v) for k, v in paths.items()})

tiny = {"encoder": "tiny", "epochs": 10, "batch_size": 4, "learning_rate": 1e-3, "max_sequence_length": 32}
config = {
    "data": {k: f"data/{k}.jsonl" for k in paths},
    "text": tiny,
    "ocr": {"source": "engine", "hyperparameters": tiny},
    "seed": 13,
    "output_dir": "out",
}
(root / "config.yaml").write_text(yaml.safe_dump(config))
cfg = str(root / "config.yaml")

# Each step is the same call the command line makes.
for argv in (["train", "-c", cfg, "--branch", "text"],
             ["train", "-c", cfg, "--branch", "ocr"],
             ["evaluate", "-c", cfg, "--split", "dev"],
             ["predict", "-c", cfg, "--input", "data/test.jsonl"]):
    print("$ checkworthy", " ".join(argv))
    if cli.main(argv) != 0:
        sys.exit(1)

print((root / "out/predict/submission.tsv").read_text())
