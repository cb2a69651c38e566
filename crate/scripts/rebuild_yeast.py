"""Rebuild the 10-class UCI YEAST table from the binary KEEL splits in keel-ds.

    pip download --no-deps keel-ds
    python3 scripts/rebuild_yeast.py keel_ds-*.whl > data/yeast.csv

Every KEEL yeast file reuses the same 1484 UCI rows with a one-vs-rest or
group-vs-group label. Class membership is recovered by intersecting them.
"""
import collections
import sys
import zipfile

RAW = "keel_ds/data/imbalanced/raw/"


def read(z, name):
    rows = []
    for line in z.read(RAW + name + ".dat").decode().splitlines():
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 9:
            raise ValueError(f"{name}: expected 8 features, got {len(parts) - 1}")
        rows.append((tuple(f"{float(v):.2f}" for v in parts[:8]), parts[8]))
    return rows


def side(rows, label):
    return collections.Counter(f for f, l in rows if l == label)


def main(path):
    z = zipfile.ZipFile(path)
    base = read(z, "yeast1")
    assert len(base) == 1484, len(base)

    # (class, file, side) in resolution order; each row takes the first class
    # whose multiset still has capacity for its feature tuple.
    rules = [
        ("NUC", "yeast1", "positive"),
        ("ME3", "yeast3", "positive"),
        ("ME2", "yeast4", "positive"),
        ("ME1", "yeast5", "positive"),
        ("EXC", "yeast6", "positive"),
        ("CYT", "yeast-2_vs_4", "negative"),
        ("VAC", "yeast-1-2-8-9_vs_7", "positive"),
        ("POX", "yeast-2_vs_8", "positive"),
    ]
    pools = [(c, side(read(z, f), s)) for c, f, s in rules]
    erl_or_known = side(read(z, "yeast-1-2-8-9_vs_7"), "negative")  # NUC CYT POX ERL

    labels = [None] * len(base)
    for i, (feat, _) in enumerate(base):
        for cls, pool in pools:
            if pool[feat] > 0:
                pool[feat] -= 1
                labels[i] = cls
                break
    # NUC, CYT and POX rows were consumed above, so whatever remains of the
    # four-class group is ERL; everything else is MIT.
    used = collections.Counter(base[i][0] for i in range(len(base)) if labels[i] in ("NUC", "CYT", "POX"))
    erl = erl_or_known - used
    for i, (feat, _) in enumerate(base):
        if labels[i] is None:
            if erl[feat] > 0:
                erl[feat] -= 1
                labels[i] = "ERL"
            else:
                labels[i] = "MIT"

    counts = collections.Counter(labels)
    expected = {"CYT": 463, "NUC": 429, "MIT": 244, "ME3": 163, "ME2": 51,
                "ME1": 44, "EXC": 35, "VAC": 30, "POX": 20, "ERL": 5}
    assert counts == expected, counts
    for (feat, _), lab in zip(base, labels):
        print(",".join(feat) + "," + lab)


if __name__ == "__main__":
    main(sys.argv[1])
