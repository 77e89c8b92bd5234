#!/usr/bin/env python3
"""Convert locally available copies of the UCI Glass and Statlog (Landsat
satellite) datasets into the CSV layout read by `cbpt`.

Sources, in order of preference:
  * the original UCI files passed on the command line
    (glass.data, sat.trn + sat.tst), or
  * the PyPI wheels `rdatasets` (MASS::fgl, the UCI Glass data) and
    `keel_ds` (satimage, the UCI Statlog Landsat data), which ship the
    data inside the package and can be fetched from a package mirror.

Usage:
  convert_uci_datasets.py --out data/ [--glass glass.data]
                          [--sat sat.trn sat.tst] [--wheels DIR]
"""
import argparse
import csv
import glob
import io
import lzma
import os
import pickle
import zipfile

GLASS_COLUMNS = ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe"]
GLASS_TYPES = {"WinF": "1", "WinNF": "2", "Veh": "3", "Con": "5", "Tabl": "6", "Head": "7"}


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}: {len(rows)} rows, {len(header) - 1} features")


def glass_from_uci(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) == 11:
                rows.append(parts[1:10] + [parts[10]])
    return rows


def glass_from_rdatasets(wheel):
    z = zipfile.ZipFile(wheel)
    df = pickle.loads(lzma.decompress(z.read("rdatasets/_data/MASS/fgl.pkl.compress")))
    rows = []
    for _, r in df.iterrows():
        rows.append([f"{float(r[c]):.10g}" for c in GLASS_COLUMNS] + [GLASS_TYPES[str(r["type"])]])
    return rows


def sat_from_uci(paths):
    rows = []
    for p in paths:
        with open(p) as fh:
            for line in fh:
                parts = line.split()
                if len(parts) == 37:
                    rows.append(parts)
    return rows


def sat_from_keel(wheel):
    z = zipfile.ZipFile(wheel)
    text = z.read("keel_ds/data/balanced/raw/satimage.dat").decode()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        rows.append([p.strip() for p in line.split(",")])
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--glass")
    ap.add_argument("--sat", nargs="+")
    ap.add_argument("--wheels", default=".")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    if args.glass:
        glass = glass_from_uci(args.glass)
    else:
        glass = glass_from_rdatasets(glob.glob(os.path.join(args.wheels, "rdatasets-*.whl"))[0])
    write_csv(os.path.join(args.out, "glass.csv"), GLASS_COLUMNS + ["Type"], glass)

    if args.sat:
        sat = sat_from_uci(args.sat)
    else:
        sat = sat_from_keel(glob.glob(os.path.join(args.wheels, "keel_ds-*.whl"))[0])
    header = [f"A{i + 1}" for i in range(36)] + ["Class"]
    write_csv(os.path.join(args.out, "statlog.csv"), header, sat)


if __name__ == "__main__":
    main()
