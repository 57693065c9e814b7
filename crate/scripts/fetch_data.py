#!/usr/bin/env python3
"""Download the benchmark datasets and convert them to the project formats.

Usage:
    python3 scripts/fetch_data.py [--root DATA_DIR] [dataset ...]

Datasets: cora citeseer pubmed cornell texas wisconsin actor (default: all).

Writes, per dataset directory:
    graph.txt      "n m" header, then m lines "i j" (i < j, undirected, deduped)
    features.txt   "n d" header, then n rows of d reals
    labels.txt     "n C" header, then n labels
and, for the citation datasets, the canonical public split as
    train.txt / val.txt / test.txt   (one node id per line)

Network access and numpy/scipy are required (pickled citation data).
The training code itself never touches the network; point SIMP_GCN_DATA at
--root (default ./data) once this script has run.
"""

import argparse
import os
import pickle
import sys
import urllib.request

PLANETOID_URL = "https://github.com/kimiyoung/planetoid/raw/master/data"
GEOM_GCN_URL = "https://raw.githubusercontent.com/graphdml-uiuc-jlu/geom-gcn/master/new_data"

CITATION = ("cora", "citeseer", "pubmed")
WEB = {"cornell": "cornell", "texas": "texas", "wisconsin": "wisconsin", "actor": "film"}


def fetch(url, dest):
    if os.path.exists(dest):
        return
    print(f"  fetching {url}")
    os.makedirs(os.path.dirname(dest), exist_ok=True)
    urllib.request.urlretrieve(url, dest)


def write_dataset(out_dir, edges, features, labels, num_classes):
    os.makedirs(out_dir, exist_ok=True)
    n = len(features)
    edges = sorted({(min(i, j), max(i, j)) for i, j in edges if i != j})
    with open(os.path.join(out_dir, "graph.txt"), "w") as f:
        f.write(f"{n} {len(edges)}\n")
        for i, j in edges:
            f.write(f"{i} {j}\n")
    d = len(features[0])
    with open(os.path.join(out_dir, "features.txt"), "w") as f:
        f.write(f"{n} {d}\n")
        for row in features:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")
    with open(os.path.join(out_dir, "labels.txt"), "w") as f:
        f.write(f"{n} {num_classes}\n")
        for y in labels:
            f.write(f"{int(y)}\n")
    print(f"  wrote {out_dir} (n={n}, m={len(edges)}, d={d}, C={num_classes})")


def write_split(out_dir, train, val, test):
    for name, ids in (("train", train), ("val", val), ("test", test)):
        with open(os.path.join(out_dir, f"{name}.txt"), "w") as f:
            for i in ids:
                f.write(f"{i}\n")


def convert_citation(name, root, cache):
    import numpy as np
    import scipy.sparse as sp

    parts = {}
    for ext in ("x", "y", "tx", "ty", "allx", "ally", "graph"):
        path = os.path.join(cache, f"ind.{name}.{ext}")
        fetch(f"{PLANETOID_URL}/ind.{name}.{ext}", path)
        with open(path, "rb") as f:
            parts[ext] = pickle.load(f, encoding="latin1")
    idx_path = os.path.join(cache, f"ind.{name}.test.index")
    fetch(f"{PLANETOID_URL}/ind.{name}.test.index", idx_path)
    test_idx = [int(line) for line in open(idx_path)]

    test_sorted = sorted(test_idx)
    x, y = parts["x"], parts["y"]
    allx, ally, tx, ty = parts["allx"], parts["ally"], parts["tx"], parts["ty"]

    # citeseer's test index has gaps: pad missing test rows with zeros
    full_range = list(range(test_sorted[0], test_sorted[-1] + 1))
    tx_full = sp.lil_matrix((len(full_range), x.shape[1]))
    ty_full = np.zeros((len(full_range), y.shape[1]))
    for row, idx in enumerate(test_idx):
        pos = idx - test_sorted[0]
        tx_full[pos] = tx[row]
        ty_full[pos] = ty[row]

    features = sp.vstack([allx, tx_full]).tolil()
    labels_onehot = np.vstack([ally, ty_full])
    # restore the permuted ordering of the test rows
    features[test_idx, :] = features[test_sorted, :]
    labels_onehot[test_idx, :] = labels_onehot[test_sorted, :]

    labels = labels_onehot.argmax(axis=1)
    edges = [(i, j) for i, nbrs in parts["graph"].items() for j in nbrs]
    out_dir = os.path.join(root, name)
    write_dataset(out_dir, edges, features.toarray(), labels, labels_onehot.shape[1])

    train = list(range(len(y)))
    val = list(range(len(y), len(y) + 500))
    write_split(out_dir, train, val, test_sorted)
    print(f"  wrote canonical split (|train|={len(train)}, |val|=500, |test|={len(test_sorted)})")


def convert_web(name, remote, root, cache):
    edge_file = os.path.join(cache, f"{remote}_edges.txt")
    node_file = os.path.join(cache, f"{remote}_nodes.txt")
    fetch(f"{GEOM_GCN_URL}/{remote}/out1_graph_edges.txt", edge_file)
    fetch(f"{GEOM_GCN_URL}/{remote}/out1_node_feature_label.txt", node_file)

    features, labels = [], []
    with open(node_file) as f:
        next(f)  # header
        rows = []
        for line in f:
            node_id, feat, label = line.strip().split("\t")
            rows.append((int(node_id), feat, int(label)))
    rows.sort()
    assert [r[0] for r in rows] == list(range(len(rows))), "node ids must be dense"
    if name == "actor":
        # features are sparse keyword indices; binarize into a dense vector
        dim = 1 + max(int(t) for _, feat, _ in rows for t in feat.split(","))
        for _, feat, label in rows:
            vec = [0.0] * dim
            for t in feat.split(","):
                vec[int(t)] = 1.0
            features.append(vec)
            labels.append(label)
    else:
        for _, feat, label in rows:
            features.append([float(v) for v in feat.split(",")])
            labels.append(label)

    edges = []
    with open(edge_file) as f:
        next(f)  # header
        for line in f:
            i, j = line.split()
            edges.append((int(i), int(j)))
    write_dataset(os.path.join(root, name), edges, features, labels, max(labels) + 1)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default="data")
    ap.add_argument("datasets", nargs="*", default=list(CITATION) + list(WEB))
    args = ap.parse_args()
    cache = os.path.join(args.root, "_raw")
    for name in args.datasets:
        print(f"{name}:")
        if name in CITATION:
            convert_citation(name, args.root, cache)
        elif name in WEB:
            convert_web(name, WEB[name], args.root, cache)
        else:
            sys.exit(f"unknown dataset {name!r}")


if __name__ == "__main__":
    main()
