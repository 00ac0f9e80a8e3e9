"""Deterministic random number generation for the sampler.

SplitMix64 is used instead of numpy's Generator because the compiled and the
pure-Python Gibbs kernels must consume an *identical* stream: both implement
the same integer recurrence, so a fit is bit-reproducible across backends.
All distribution sampling (gamma, beta, Dirichlet) is built on top of the
uniform stream with fixed algorithms, never on library samplers whose draw
order may change between versions.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# uniform() maps the top 53 bits of a draw onto [0, 1)
_INV53 = 2.0 ** -53


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit hash."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, stream: int) -> int:
    """Derive an independent child seed, e.g. one per epoch.

    Documented derivation: mix the master seed, offset by a golden-ratio
    multiple of the stream index, and mix again. Pure function, so epoch
    fits can run concurrently without affecting results.
    """
    return mix64((mix64(master_seed) + GOLDEN * (stream + 1)) & MASK64)


class SplitMix64:
    """Minimal deterministic RNG with the distribution draws the sampler needs.

    The state is a single uint64, exposed so the compiled kernel can pick the
    stream up mid-sweep and hand it back.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    @classmethod
    def from_state(cls, state: int) -> "SplitMix64":
        rng = cls.__new__(cls)
        rng.state = state & MASK64
        return rng

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """One double in [0, 1), 53 random bits."""
        return (self.next_u64() >> 11) * _INV53

    def randint_below(self, n: int) -> int:
        """Integer in [0, n). Truncation bias is < 2**-53 per draw."""
        r = int(self.uniform() * n)
        return n - 1 if r == n else r

    def normal(self) -> float:
        """Standard normal via Box-Muller (cosine branch only, stateless)."""
        u1 = 1.0 - self.uniform()  # (0, 1]: keeps log() finite
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def gamma(self, shape: float, rate: float = 1.0) -> float:
        """Gamma draw, Marsaglia-Tsang squeeze; shape<1 handled by boosting.

        Floored at 1e-300: draws below that are legitimate for tiny shapes
        but an exact 0.0 would poison stick weights downstream.
        """
        if shape <= 0.0 or rate <= 0.0:
            raise ValueError(f"gamma requires shape>0 and rate>0, got "
                             f"shape={shape}, rate={rate}")
        if shape < 1.0:
            # X_a = X_{a+1} * U^{1/a}
            boost = (1.0 - self.uniform()) ** (1.0 / shape)
            return max(self.gamma(shape + 1.0, rate) * boost, 1e-300)
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.normal()
            v = 1.0 + c * x
            if v <= 0.0:
                continue
            v = v * v * v
            u = 1.0 - self.uniform()  # (0, 1]
            if u < 1.0 - 0.0331 * (x * x) * (x * x):
                return d * v / rate
            if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
                return d * v / rate

    def beta(self, a: float, b: float) -> float:
        """Beta draw. a == 1 uses the exact inverse CDF (one uniform),
        matching the stick-splitting step inside the compiled kernel."""
        if a == 1.0:
            u = self.uniform()
            return 1.0 - (1.0 - u) ** (1.0 / b)
        ga = self.gamma(a)
        gb = self.gamma(b)
        return ga / (ga + gb)

    def dirichlet(self, alphas) -> list[float]:
        draws = [self.gamma(float(a)) for a in alphas]
        total = sum(draws)
        return [g / total for g in draws]

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randint_below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]
