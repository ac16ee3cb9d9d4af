"""Portable 64-bit pseudo-random generator for synthetic fixtures.

xorshift64* (Marsaglia xorshift with shifts 12/25/27, output multiplied by
0x2545F4914F6CDD1D mod 2**64).  The state is initialised from the integer seed
with one splitmix64 step (increment 0x9E3779B97F4A7C15, mixers
0xBF58476D1CE4E5B9 and 0x94D049BB133111EB, shifts 30/27/31); a zero state is
replaced by the splitmix increment.

Doubles take the top 53 bits of an output: ``(x >> 11) * 2**-53``.  Integers
below ``n`` are ``floor(random() * n)``.
"""
MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MULT = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = splitmix64(int(seed) & MASK64) or GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * MULT) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        return int(self.random() * n)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def bernoulli(self, p: float, n: int) -> list[bool]:
        """``n`` independent draws of ``random() < p``."""
        r = self.random
        return [r() < p for _ in range(n)]


def derive_seed(*parts: int) -> int:
    """Deterministic child seed from a sequence of integers."""
    h = 0
    for p in parts:
        h = splitmix64(h ^ (int(p) & MASK64))
    return h
