#!/usr/bin/env python3
"""Convert the public Cora distribution (cora.content + cora.cites) into the
plain-text dataset layout this project loads (edges.txt / features.csv /
labels.txt).

Node ids are assigned by order of appearance in cora.content; class ids are
assigned alphabetically by class name.  Citation pairs are written as-is, one
per line -- the loader symmetrizes and deduplicates on read.
"""

import argparse
import pathlib
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src", type=pathlib.Path,
                    help="directory containing cora.content and cora.cites")
    ap.add_argument("dst", type=pathlib.Path,
                    help="output dataset directory")
    args = ap.parse_args()

    content = args.src / "cora.content"
    cites = args.src / "cora.cites"
    for f in (content, cites):
        if not f.is_file():
            print(f"missing input: {f}", file=sys.stderr)
            return 1

    node_ids = {}
    rows = []
    class_names = set()
    with content.open() as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            paper, feats, label = parts[0], parts[1:-1], parts[-1]
            node_ids[paper] = len(node_ids)
            rows.append((feats, label))
            class_names.add(label)

    class_of = {name: i for i, name in enumerate(sorted(class_names))}

    args.dst.mkdir(parents=True, exist_ok=True)
    with (args.dst / "features.csv").open("w") as fh:
        for feats, _ in rows:
            fh.write(",".join(feats) + "\n")
    with (args.dst / "labels.txt").open("w") as fh:
        for _, label in rows:
            fh.write(f"{class_of[label]}\n")
    with (args.dst / "edges.txt").open("w") as fh:
        for line in cites.open():
            parts = line.split()
            if not parts:
                continue
            u, v = node_ids[parts[0]], node_ids[parts[1]]
            fh.write(f"{u} {v}\n")

    print(f"nodes={len(rows)} classes={len(class_of)} -> {args.dst}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
