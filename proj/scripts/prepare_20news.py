#!/usr/bin/env python3
"""Turn the 20news-bydate tarball into the files the evaluation tools expect.

Inputs:  20news-bydate.tar.gz (http://qwone.com/~jason/20Newsgroups/)
Outputs in --out (default data/20news):
  corpus.txt       one document per line, lowercased alphabetic tokens,
                   headers stripped, train documents first then test
  labels.tsv       "<newsgroup>\t<same tokenized text>"
  train_split.txt  0-based line indices of the train documents
"""

import argparse
import io
import re
import tarfile
from pathlib import Path

TOKEN = re.compile(r"[a-z]+")


def tokenize(raw: bytes) -> str:
    text = raw.decode("latin-1")
    # drop the RFC-822-style header block but keep the Subject line, which
    # carries topical words
    split = text.find("\n\n")
    if split != -1:
        header, text = text[:split], text[split + 2:]
        for line in header.splitlines():
            if line.lower().startswith("subject:"):
                text = line[len("subject:"):] + "\n" + text
                break
    return " ".join(TOKEN.findall(text.lower()))


def numeric_key(name: str):
    stem = name.rsplit("/", 1)[-1]
    return (0, int(stem)) if stem.isdigit() else (1, stem)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("tarball", help="path to 20news-bydate.tar.gz")
    parser.add_argument("--out", default="data/20news")
    args = parser.parse_args()

    # member name: 20news-bydate-<train|test>/<newsgroup>/<docid>
    docs = {"train": [], "test": []}
    with tarfile.open(args.tarball, "r:gz") as tar:
        for member in tar.getmembers():
            if not member.isfile():
                continue
            parts = member.name.split("/")
            if len(parts) != 3:
                continue
            subset = "train" if parts[0].endswith("train") else "test"
            handle = tar.extractfile(member)
            if handle is None:
                continue
            docs[subset].append((parts[1], parts[2], tokenize(handle.read())))

    for subset in docs:
        docs[subset].sort(key=lambda item: (item[0], numeric_key(item[1])))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ordered = docs["train"] + docs["test"]
    with io.open(out / "corpus.txt", "w", encoding="utf-8") as corpus, \
         io.open(out / "labels.tsv", "w", encoding="utf-8") as labels:
        for group, _, text in ordered:
            corpus.write(text + "\n")
            labels.write(f"{group}\t{text}\n")
    with io.open(out / "train_split.txt", "w", encoding="utf-8") as split:
        for index in range(len(docs["train"])):
            split.write(f"{index}\n")

    print(f"{len(docs['train'])} train + {len(docs['test'])} test documents -> {out}")


if __name__ == "__main__":
    main()
