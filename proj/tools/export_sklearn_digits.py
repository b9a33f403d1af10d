#!/usr/bin/env python3
# Copyright 2026 The vecmpc Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the scikit-learn handwritten digits as an EMB1 file.

1797 rows of 8x8 grey levels (0..16), scaled to [0, 1] and centered per
feature, so the rows behave like dense embeddings with real cluster
structure.
"""

import argparse
import struct

import numpy as np
from sklearn.datasets import load_digits


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("-o", "--out", default="tests/data/digits.emb")
    args = ap.parse_args()
    x = load_digits().data.astype(np.float64) / 16.0
    x -= x.mean(axis=0)
    x = x.astype("<f4")
    with open(args.out, "wb") as f:
        f.write(b"EMB1")
        f.write(struct.pack("<II", x.shape[0], x.shape[1]))
        f.write(x.tobytes(order="C"))
    print(f"wrote {x.shape[0]}x{x.shape[1]} to {args.out}")


if __name__ == "__main__":
    main()
