#!/usr/bin/env python3
"""Split the single-line text8 corpus into pseudo-paragraph lines.

Input:  text8.zip or the unpacked text8 file (http://mattmahoney.net/dc/text8.zip)
Output: --out (default data/text8/corpus.txt), --tokens-per-line tokens per line
"""

import argparse
import zipfile
from pathlib import Path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("source", help="text8.zip or the raw text8 file")
    parser.add_argument("--out", default="data/text8/corpus.txt")
    parser.add_argument("--tokens-per-line", type=int, default=1000)
    args = parser.parse_args()

    if args.source.endswith(".zip"):
        with zipfile.ZipFile(args.source) as z:
            text = z.read("text8").decode("ascii")
    else:
        text = Path(args.source).read_text(encoding="ascii")

    tokens = text.split()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="ascii") as sink:
        for start in range(0, len(tokens), args.tokens_per_line):
            sink.write(" ".join(tokens[start:start + args.tokens_per_line]) + "\n")
    print(f"{len(tokens)} tokens -> {out}")


if __name__ == "__main__":
    main()
