"""Pure-Python numeric kernels.

These are the reference implementations of the small hot loops shared by
belief updates, candidate scoring and policy losses. The compiled twin in
``_fast.pyx`` performs the same operations in the same order, so the two
backends produce identical floats.

All probability vectors are plain sequences of floats over a fixed domain
order. Entropies are in bits; policy log-probabilities are natural logs.
"""

import math

# Probabilities below this are treated as exact zeros in entropy/KL sums,
# avoiding -0.0 noise from renormalization residue.
PROB_EPS = 1e-12


def entropy_bits(p):
    """Shannon entropy of a probability vector, in bits (0*log 0 = 0)."""
    acc = 0.0
    for x in p:
        if x >= PROB_EPS:
            acc -= x * math.log2(x)
    return acc


def kl_bits(post, prior):
    """KL divergence D(post || prior) in bits.

    Entries of `post` below PROB_EPS contribute nothing. A positive
    posterior entry with zero prior mass yields +inf.
    """
    acc = 0.0
    for i in range(len(post)):
        x = post[i]
        if x >= PROB_EPS:
            q = prior[i]
            if q <= 0.0:
                return math.inf
            acc += x * math.log2(x / q)
    return acc


def restrict_renorm(p, keep):
    """Restrict `p` to the domain indices in `keep` and renormalize.

    Returns (vector, mass) where `mass` is the probability the prior vector
    assigned to the kept indices. When mass == 0 the returned vector is all
    zeros and the caller must treat the evidence as contradictory.
    """
    n = len(p)
    out = [0.0] * n
    mass = 0.0
    for i in keep:
        mass += p[i]
    if mass > 0.0:
        for i in keep:
            out[i] = p[i] / mass
    return out, mass


def zscore(values):
    """Population z-scores; the all-zero vector when the spread is degenerate."""
    n = len(values)
    mean = 0.0
    for x in values:
        mean += x
    mean /= n
    var = 0.0
    for x in values:
        d = x - mean
        var += d * d
    var /= n
    std = math.sqrt(var)
    if std < PROB_EPS:
        return [0.0] * n
    return [(x - mean) / std for x in values]


def log_softmax(scores):
    """Natural-log softmax of a score vector (max-stabilized)."""
    m = scores[0]
    for x in scores:
        if x > m:
            m = x
    total = 0.0
    for x in scores:
        total += math.exp(x - m)
    lse = m + math.log(total)
    return [x - lse for x in scores]
