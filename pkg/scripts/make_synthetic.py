#!/usr/bin/env python3
"""Write the grating texture dataset (PGMs + train/test manifests) for CLI demos."""
import argparse

from gaborbarcode.synthetic import grating_dataset, write_dataset

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("out", help="directory to create")
p.add_argument("--per-class", type=int, default=25)
p.add_argument("--train", type=int, default=20, help="images per class placed in train.csv")
p.add_argument("--noise", type=float, default=0.05)
p.add_argument("--seed", type=int, default=0)
args = p.parse_args()
train, test = write_dataset(grating_dataset(args.per_class, noise=args.noise, seed=args.seed),
                            args.out, args.train)
print(train)
print(test)
