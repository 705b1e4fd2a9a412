#!/usr/bin/env python3
"""Reference values for the golden tests, computed without the C++ library.

Implements MT19937-64 and the draw conventions from scratch and reads the
corpus file directly. Run: python3 tests/oracles/golden.py
"""
import pathlib

MASK = (1 << 64) - 1


class MT64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & MASK
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.idx = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.idx = 0

    def next(self):
        if self.idx >= 312:
            self._twist()
        y = self.mt[self.idx]
        self.idx += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK

    def below(self, bound):
        limit = MASK - (MASK % bound)
        while True:
            x = self.next()
            if x < limit:
                return x % bound

    def unit(self):
        return (self.next() >> 11) * 2.0 ** -53


def lifecycle(seed, continue_prob=0.6, cm_prob=0.9, max_inc=12, weights=(1, 1, 1, 1)):
    rng = MT64(seed)
    seq = [1, 2]
    total = float(sum(weights))
    n = 0
    while n < max_inc and rng.unit() < continue_prob:
        r = rng.unit() * total
        pick = 0
        while pick + 1 < 4:
            if r < weights[pick]:
                break
            r -= weights[pick]
            pick += 1
        seq.append(3 + pick)
        n += 1
    if rng.unit() < cm_prob:
        seq.append(7)
    return seq


def corpus_pool(category, descriptor):
    path = pathlib.Path(__file__).resolve().parents[2] / "data/corpus/sample_corpus.tsv"
    pool = []
    for line in path.read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        cat, desc, value, _ = line.split("\t")
        if cat == category and desc == descriptor and value not in pool:
            pool.append(value)
    return pool


GIVEN = ["alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi", "ivan", "judy", "mallory",
         "niaj", "olivia", "peggy", "rupert", "sybil", "trent", "victor", "walter", "yvonne", "zoe", "amir",
         "bianca", "chen", "dmitri", "elena", "farah", "goran", "hana", "igor", "jonas", "kenji"]
FAMILY = ["smith", "jones", "garcia", "miller", "davis", "lopez", "wilson", "tanaka", "kowalski", "nguyen",
          "ivanova", "schmidt", "rossi", "silva", "haddad", "okafor"]


def user(seed):
    rng = MT64(seed)
    g = GIVEN[rng.below(len(GIVEN))]
    f = FAMILY[rng.below(len(FAMILY))]
    return g[0] + f


if __name__ == "__main__":
    g = MT64(5489)
    print("mt19937_64(5489) 10000th:", [g.next() for _ in range(10000)][-1])
    print("lifecycle seed 42:", lifecycle(42))
    pool = corpus_pool("File", "Payload")
    print("File.Payload seed 7:", pool[MT64(7).below(len(pool))])
    print("System.User seed 0:", user(0))
