"""Bounded-difference concentration for distinct-tuple sampling, Hoeffding
utilities, and Gaussian-norm tails.

The central object is the self-avoiding variant of the bounded-differences
inequality: for a function of m pairwise-distinct coordinates whose
conditional-expectation swing in coordinate i is at most c_i,

    Pr[ |f - E f| >= g ] <= 2 exp(-2 g^2 / sum c_i^2).

The empirical harness samples distinct tuples, probes the declared
sensitivities, and checks measured tails against the bound.
"""

from __future__ import annotations

import math

import numpy as np

from .util import sample_distinct, trial_rng


def mcdiarmid_bound(c, gamma: float) -> float:
    """Two-sided tail bound 2 exp(-2 gamma^2 / sum c_i^2)."""
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("all sensitivity constants must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return 2.0 * math.exp(-2.0 * gamma * gamma / float(np.sum(c * c)))


def hoeffding_bound(t: float, a: float, b: float) -> float:
    """Moment bound E[exp(tX)] <= exp(t^2 (b-a)^2 / 8) for X in [a, b], EX=0."""
    if t <= 0:
        raise ValueError("t must be positive")
    if a > b:
        raise ValueError("need a <= b")
    return math.exp(t * t * (b - a) ** 2 / 8.0)


def hoeffding_columnsum_bound(n_cols: int, n_rows: int, eps: float) -> float:
    """Union bound 4 C exp(-2 N eps^2) on any column average exceeding eps
    for a random-row unimodular ensemble."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return 4.0 * n_cols * math.exp(-2.0 * n_rows * eps * eps)


class DistinctTupleSampler:
    """Uniform samples over ordered m-tuples with pairwise-distinct entries.

    Partial Fisher-Yates over the ground set, so each coordinate is
    marginally uniform and all entries are distinct by construction.
    """

    def __init__(self, ground_size: int, m: int, seed: int = 0):
        if m > ground_size:
            raise ValueError("tuple length exceeds ground set")
        self.ground_size = ground_size
        self.m = m
        self.seed = seed

    def sample(self, index: int = 0) -> np.ndarray:
        rng = trial_rng(self.seed, index)
        return sample_distinct(rng, self.ground_size, self.m)

    def samples(self, trials: int) -> np.ndarray:
        out = np.empty((trials, self.m), dtype=np.int64)
        for t in range(trials):
            out[t] = self.sample(t)
        return out


def mcdiarmid_empirical(fn, ground_size: int, m: int, c, gamma: float,
                        trials: int = 10000, seed: int = 0,
                        probe_trials: int = 200) -> dict:
    """Empirical tail of fn over distinct tuples versus the analytic bound.

    ``fn`` maps an (T, m) integer array of tuples to (T,) floats.  Before
    sampling, coordinate sensitivities are probed: random single-coordinate
    substitutions must move fn by at most the declared c_i (a pointwise
    bound implies the conditional-expectation bound).  Returns the tail
    estimate, the bound, and a pass flag at +3 binomial sigmas.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (m,):
        raise ValueError("need one sensitivity constant per coordinate")
    rng = np.random.Generator(np.random.PCG64(seed ^ 0x5EED))
    for _ in range(probe_trials):
        base = sample_distinct(rng, ground_size, m)
        i = int(rng.integers(0, m))
        used = set(base.tolist())
        alt = int(rng.integers(0, ground_size))
        while alt in used:
            alt = int(rng.integers(0, ground_size))
        mod = base.copy()
        mod[i] = alt
        delta = abs(float(fn(base[None, :])[0]) - float(fn(mod[None, :])[0]))
        if delta > c[i] + 1e-9:
            raise ValueError(
                f"sensitivity probe failed: coordinate {i} moved fn by "
                f"{delta:.6g} > declared c_i={c[i]:.6g}")

    sampler = DistinctTupleSampler(ground_size, m, seed)
    chunk = 4096
    vals = np.empty(trials)
    pos = 0
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        tup = np.empty((hi - lo, m), dtype=np.int64)
        for t in range(lo, hi):
            tup[t - lo] = sampler.sample(t)
        vals[lo:hi] = fn(tup)
        pos = hi
    mean = float(vals.mean())
    tail = float(np.mean(np.abs(vals - mean) >= gamma))
    bound = mcdiarmid_bound(c, gamma)
    sigma = math.sqrt(max(tail * (1 - tail), 1.0 / trials) / trials)
    return {
        "mean": mean,
        "empirical_tail": tail,
        "bound": bound,
        "sigma": sigma,
        "pass": bool(tail <= min(bound, 1.0) + 3.0 * sigma),
    }


def _gamma_upper_reg(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x), series / continued
    fraction split at x = a + 1."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 1.0
    lead = math.exp(-x + a * math.log(x) - math.lgamma(a))
    if x < a + 1.0:
        # series for the lower function P(a, x)
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(1000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        return 1.0 - total * lead
    # Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c_ = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c_ = b + an / c_
        if abs(c_) < tiny:
            c_ = tiny
        d = 1.0 / d
        delta = d * c_
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return lead * h


def gaussian_tail_S(r: float, n: int) -> float:
    """Upper tail Pr[ ||Z|| >= r ] for Z a standard normal n-vector.

    Equals the regularized upper incomplete gamma Q(n/2, r^2/2); evaluated
    by series for small arguments and by continued fraction for large,
    relative error around 1e-10 or better.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if n < 1:
        raise ValueError("n must be at least 1")
    return _gamma_upper_reg(n / 2.0, r * r / 2.0)


def noise_bound_probability(eps_prime: float, gamma: float, sigma: float,
                            alpha_norm: float, n: int, delta: float) -> float:
    """Success probability floor 1 - 2 (delta + S(gamma ||a|| / sigma)).

    Probability that noisy-measurement energy stays within the widened
    band (1 +- (eps' + gamma))^2 ||a||^2, clamped to [0, 1].
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    p = 1.0 - 2.0 * (delta + gaussian_tail_S(gamma * alpha_norm / sigma, n))
    return min(1.0, max(0.0, p))
