"""Convert the raw dataset sources into the numeric CSVs under data/.

Sources (all redistributable copies of public datasets):
  * boston.csv     - MASS::Boston (R), via the Rdatasets CSV dump
  * wine_red.csv   - UCI Wine Quality (red), as shipped by the linfa-datasets crate
  * diabetes.csv   - Efron et al. diabetes data, as shipped by linfa-datasets
  * housing.csv    - Ecdat::Housing (Windsor house prices), Rdatasets CSV dump
  * computers.csv  - Ecdat::Computers (PC prices 1993-95), Rdatasets CSV dump

Usage: python3 scripts/prepare_data.py <rdatasets_csv_root> <linfa_datasets_data_dir>
"""
import csv
import gzip
import os
import sys

OUT = os.path.join(os.path.dirname(__file__), "..", "data")


def write(name, header, rows):
    with open(os.path.join(OUT, name), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"{name}: {len(rows)} rows, {len(header)} columns")


def rdataset(root, rel, drop=(), yes_no=True):
    with open(os.path.join(root, rel)) as fh:
        rows = list(csv.reader(fh))
    header = rows[0][1:]
    keep = [i for i, h in enumerate(header) if h not in drop]
    out = []
    for r in rows[1:]:
        vals = r[1:]
        conv = []
        for i in keep:
            v = vals[i]
            if yes_no and v in ("yes", "no"):
                v = "1" if v == "yes" else "0"
            conv.append(v)
        out.append(conv)
    return [header[i] for i in keep], out


def main():
    rroot, linfa = sys.argv[1], sys.argv[2]
    write("boston.csv", *rdataset(rroot, "MASS/Boston.csv"))
    write("housing.csv", *rdataset(rroot, "Ecdat/Housing.csv"))
    write("computers.csv", *rdataset(rroot, "Ecdat/Computers.csv"))

    with gzip.open(os.path.join(linfa, "winequality-red.csv.gz"), "rt") as fh:
        rows = list(csv.reader(fh))
    header = [h.replace(" ", "_") for h in rows[0]]
    write("wine_red.csv", header, rows[1:])

    with gzip.open(os.path.join(linfa, "diabetes_data.csv.gz"), "rt") as fh:
        x = [r for r in csv.reader(fh) if r]
    with gzip.open(os.path.join(linfa, "diabetes_target.csv.gz"), "rt") as fh:
        y = [r[0] for r in csv.reader(fh) if r]
    header = ["age", "sex", "bmi", "bp", "s1", "s2", "s3", "s4", "s5", "s6", "progression"]
    write("diabetes.csv", header, [xi + [yi] for xi, yi in zip(x, y)])


if __name__ == "__main__":
    main()
