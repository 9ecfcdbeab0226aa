"""Writes reference vectors for the seeded sampler and the hash embedder.

Standalone re-implementation used as a cross-language oracle for the Rust
code. Run from the repository root:

    python3 python/gen_reference.py
"""

import hashlib
import json
import math
import os
import re
import struct

MASK = (1 << 64) - 1
SAMPLE_CASES = [(100, 10), (1000, 100), (50, 50), (7, 3), (1, 1), (10, 0)]
EMBED_TEXTS = [
    "(Inception, directed by, Christopher Nolan)",
    "who directed Inception",
    "Tom Hardy",
    "",
    "!!!",
    "the the the",
]
EMBED_DIM = 64


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)


def sample_indices(n, size, seed):
    rng = SplitMix64(seed)
    idx = list(range(n))
    for i in range(size):
        j = rng.next() % (n - i) + i
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:size]


def hash_embed(text):
    tokens = [t for t in re.split(r"[^0-9a-z]+", text.lower()) if t]
    if not tokens:
        tokens = [text]
    v = [0.0] * EMBED_DIM
    for tok in tokens:
        h = struct.unpack("<Q", hashlib.sha256(tok.encode()).digest()[:8])[0]
        sign = -1.0 if h >> 63 else 1.0
        v[h % EMBED_DIM] += sign
    norm = math.sqrt(sum(x * x for x in v))
    if norm == 0.0:
        v = [0.0] * EMBED_DIM
        v[0] = 1.0
        return v
    # match f32 storage
    return [struct.unpack("<f", struct.pack("<f", x / norm))[0] for x in v]


def main():
    root = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..")
    out_dir = os.path.join(root, "assets", "reference")
    os.makedirs(out_dir, exist_ok=True)
    streams = {}
    for seed in range(10):
        rng = SplitMix64(seed)
        streams[str(seed)] = [str(rng.next()) for _ in range(5)]
    samples = [
        {"n": n, "size": size, "seed": seed, "indices": sample_indices(n, size, seed)}
        for seed in range(10)
        for n, size in SAMPLE_CASES
    ]
    with open(os.path.join(out_dir, "sampling.json"), "w") as f:
        json.dump({"splitmix64": streams, "samples": samples}, f, indent=1)
        f.write("\n")
    embeds = [{"text": t, "vector": hash_embed(t)} for t in EMBED_TEXTS]
    with open(os.path.join(out_dir, "hash_embed.json"), "w") as f:
        json.dump(embeds, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
