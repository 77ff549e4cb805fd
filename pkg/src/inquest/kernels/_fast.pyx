# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled numeric kernels: same operations, same order as `pure.py`.

No fast-math or reassociation flags are used, so results are bit-identical
to the pure backend.
"""

from libc.math cimport log2, log, exp, sqrt, INFINITY

PROB_EPS = 1e-12

cdef double _EPS = 1e-12


def entropy_bits(p):
    """Shannon entropy of a probability vector, in bits (0*log 0 = 0)."""
    cdef double acc = 0.0
    cdef double x
    cdef Py_ssize_t i, n = len(p)
    for i in range(n):
        x = <double> p[i]
        if x >= _EPS:
            acc -= x * log2(x)
    return acc


def kl_bits(post, prior):
    """KL divergence D(post || prior) in bits."""
    cdef double acc = 0.0
    cdef double x, q
    cdef Py_ssize_t i, n = len(post)
    for i in range(n):
        x = <double> post[i]
        if x >= _EPS:
            q = <double> prior[i]
            if q <= 0.0:
                return INFINITY
            acc += x * log2(x / q)
    return acc


def restrict_renorm(p, keep):
    """Restrict `p` to indices in `keep` and renormalize; returns (vector, mass)."""
    cdef Py_ssize_t n = len(p)
    cdef Py_ssize_t i, k
    cdef double mass = 0.0
    out = [0.0] * n
    for i in range(len(keep)):
        k = <Py_ssize_t> keep[i]
        mass += <double> p[k]
    if mass > 0.0:
        for i in range(len(keep)):
            k = <Py_ssize_t> keep[i]
            out[k] = (<double> p[k]) / mass
    return out, mass


def zscore(values):
    """Population z-scores; the all-zero vector when the spread is degenerate."""
    cdef Py_ssize_t i, n = len(values)
    cdef double mean = 0.0, var = 0.0, std, d, x
    for i in range(n):
        mean += <double> values[i]
    mean /= n
    for i in range(n):
        d = (<double> values[i]) - mean
        var += d * d
    var /= n
    std = sqrt(var)
    if std < _EPS:
        return [0.0] * n
    return [((<double> values[i]) - mean) / std for i in range(n)]


def log_softmax(scores):
    """Natural-log softmax of a score vector (max-stabilized)."""
    cdef Py_ssize_t i, n = len(scores)
    cdef double m, x, total = 0.0, lse
    m = <double> scores[0]
    for i in range(n):
        x = <double> scores[i]
        if x > m:
            m = x
    for i in range(n):
        total += exp((<double> scores[i]) - m)
    lse = m + log(total)
    return [(<double> scores[i]) - lse for i in range(n)]
