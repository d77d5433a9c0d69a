"""Slow reference implementations shared by the test modules.

Everything here is written from the documented update rules using plain
python loops, independent of the kernel code paths under test.
"""

import numpy as np

SCALE = 1000


def pack(bits):
    return np.packbits(bits, bitorder="little")


def make_samples(rng, n, dim, p_one=0.5):
    bits = (rng.random((n, dim)) < p_one).astype(np.uint8)
    packed = np.stack([pack(b) for b in bits])
    return packed, bits


def ham_oracle(pa, pb, dim):
    a = np.unpackbits(pa, bitorder="little")[:dim]
    b = np.unpackbits(pb, bitorder="little")[:dim]
    return int(np.sum(a != b))


def majority_oracle(counts, tie_bits):
    out = np.empty(counts.shape[0], dtype=np.uint8)
    for j in range(counts.shape[0]):
        out[j] = tie_bits[j] if counts[j] == 0 else (1 if counts[j] > 0 else 0)
    return out


class McReference:
    """Straight python transcription of the multi-centroid training rule."""

    def __init__(self, dim, tie_bits, scale=SCALE):
        self.dim = dim
        self.tie = tie_bits
        self.scale = scale
        self.counts = []
        self.packed = []
        self.cls = []
        self.added = []
        self.updates = []
        self.seen = {0: False, 1: False}

    def _spawn(self, p, b, y):
        self.counts.append(np.where(b > 0, self.scale, -self.scale).astype(np.int64))
        self.packed.append(p.copy())
        self.cls.append(y)
        self.added.append(self.scale)
        self.updates.append(1)

    def feed(self, packed, bits, labels):
        for i in range(len(labels)):
            y = int(labels[i])
            if not self.seen[y]:
                self.seen[y] = True
                self._spawn(packed[i], bits[i], y)
                continue
            dists = [ham_oracle(p, packed[i], self.dim) for p in self.packed]
            best = min(range(len(dists)), key=lambda r: (dists[r], self.cls[r], r))
            if self.cls[best] == y:
                self.counts[best] += np.where(bits[i] > 0, self.scale, -self.scale)
                self.packed[best] = pack(majority_oracle(self.counts[best], self.tie))
                self.added[best] += self.scale
                self.updates[best] += 1
            else:
                self._spawn(packed[i], bits[i], y)


class OnlineReference:
    """Python transcription of the weighted online rule."""

    def __init__(self, dim, tie_bits, subtract, scale=SCALE):
        self.dim = dim
        self.tie = tie_bits
        self.subtract = subtract
        self.scale = scale
        self.wfp = np.rint(np.arange(dim + 1) / dim * scale).astype(np.int64)
        nbytes = (dim + 7) // 8
        self.protos = np.zeros((2, nbytes), dtype=np.uint8)
        self.counts = np.zeros((2, dim), dtype=np.int64)
        self.adds = np.zeros(2, dtype=np.int64)
        self.updates = np.zeros(2, dtype=np.int64)
        self.members = np.zeros(2, dtype=np.int64)
        self.seeded = [False, False]
        self.log = []

    def _rebin(self, r):
        self.protos[r] = pack(majority_oracle(self.counts[r], self.tie))

    def feed(self, packed, bits, labels):
        for i in range(len(labels)):
            y = int(labels[i])
            if not self.seeded[y]:
                self.seeded[y] = True
                self.protos[y] = packed[i]
                self.counts[y] = np.where(bits[i] > 0, self.scale, -self.scale)
                self.adds[y] = self.scale
                self.updates[y] = 1
                self.members[y] = self.scale
                self.log.append(-1)
                continue
            h = ham_oracle(packed[i], self.protos[y], self.dim)
            self.log.append(h)
            w = int(self.wfp[h])
            if w:
                self.counts[y] += np.where(bits[i] > 0, w, -w)
                self._rebin(y)
                self.adds[y] += w
                self.updates[y] += 1
                self.members[y] += w
            if self.subtract and all(self.seeded) and w:
                d_own = ham_oracle(packed[i], self.protos[y], self.dim)
                d_other = ham_oracle(packed[i], self.protos[1 - y], self.dim)
                d0, d1 = (d_own, d_other) if y == 0 else (d_other, d_own)
                pred = 0 if d0 <= d1 else 1
                if pred != y:
                    self.counts[pred] -= np.where(bits[i] > 0, w, -w)
                    self._rebin(pred)
                    self.adds[pred] -= w
                    self.updates[pred] += 1
