#!/usr/bin/env python3
"""Convert the WordSim353 'combined' table into the eval-sim TSV format.

Input:  combined.tab (from wordsim353.zip) or a CSV variant
Output: --out (default data/wordsim353/wordsim353.tsv) with lines
        "word1<TAB>word2<TAB>score"; the header becomes a comment
"""

import argparse
import csv
from pathlib import Path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("source", help="combined.tab or combined.csv")
    parser.add_argument("--out", default="data/wordsim353/wordsim353.tsv")
    args = parser.parse_args()

    delimiter = "," if args.source.endswith(".csv") else "\t"
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = 0
    with open(args.source, newline="", encoding="utf-8-sig") as src, out.open("w") as sink:
        sink.write("# word1\tword2\thuman_score\n")
        for record in csv.reader(src, delimiter=delimiter):
            if len(record) < 3:
                continue
            w1, w2, score = record[0].strip(), record[1].strip(), record[2].strip()
            try:
                value = float(score)
            except ValueError:
                continue  # header row
            sink.write(f"{w1.lower()}\t{w2.lower()}\t{value}\n")
            rows += 1
    print(f"{rows} pairs -> {out}")


if __name__ == "__main__":
    main()
