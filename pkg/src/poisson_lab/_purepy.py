"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Signatures and integer outputs match the Cython module exactly; this module
is used when the extension is not built or ``POISSON_LAB_PURE=1`` is set.
"""

import numpy as np
from scipy.signal import lfilter

BACKEND = "python"

_MASK = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_TWO_M53 = 1.0 / 9007199254740992.0
_CHUNK_ELEMS = 1 << 20


def _philox(c0, c1, c2, c3, k0, k1):
    k0 = int(k0) & 0xFFFFFFFF
    k1 = int(k1) & 0xFFFFFFFF
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> np.uint64(32)) ^ c1 ^ np.uint64(k0),
            p1 & _MASK,
            (p0 >> np.uint64(32)) ^ c3 ^ np.uint64(k1),
            p0 & _MASK,
        )
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def philox4x32(ctr, k0, k1):
    ctr = np.asarray(ctr, dtype=np.uint32)
    c = [ctr[:, i].astype(np.uint64) for i in range(4)]
    out = _philox(*c, k0, k1)
    return np.stack(out, axis=1).astype(np.uint32)


def _to_unit(c0, c1):
    x = (c0 << np.uint64(32)) | c1
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def _uniform_grid(seed, reps, ks, stream):
    # reps: (R, 1), ks: (1, K) -> (R, K)
    seed = int(seed)
    reps = np.asarray(reps, dtype=np.uint64)
    ks = np.asarray(ks, dtype=np.uint64)
    c0 = ks & _MASK
    c1 = reps & _MASK
    c2 = reps >> np.uint64(32)
    c3 = np.uint64(stream)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    out = _philox(c0, c1, c2, c3, seed & 0xFFFFFFFF, seed >> 32)
    return _to_unit(out[0], out[1])


def uniforms(seed, rep0, nrep, k, stream):
    reps = np.arange(rep0, rep0 + nrep, dtype=np.uint64)[:, None]
    ks = np.arange(k, dtype=np.uint64)[None, :]
    return np.ascontiguousarray(_uniform_grid(seed, reps, ks, stream))


def uniform_pairs(seed, reps, ks, stream):
    return _uniform_grid(seed, np.asarray(reps), np.asarray(ks), stream)


def _variates(u, rates, logq, kind):
    if kind == 0:
        return (u < rates).astype(np.int64)
    return np.floor(np.log(u) / logq).astype(np.int64)


def _row_chunks(k, rep0, nrep):
    step = max(1, _CHUNK_ELEMS // max(k, 1))
    for start in range(0, nrep, step):
        yield start, min(step, nrep - start)


def sample_rows(rates, logq, kind, seed, rep0, nrep, stream):
    rates = np.asarray(rates, dtype=np.float64)
    k = rates.shape[0]
    out = np.empty((nrep, k), dtype=np.int64)
    for start, count in _row_chunks(k, rep0, nrep):
        u = uniforms(seed, rep0 + start, count, k, stream)
        out[start:start + count] = _variates(u, rates, logq, kind)
    return out


def segment_sums(rates, logq, kind, seed, rep0, nrep, cuts, stream):
    cuts = np.asarray(cuts, dtype=np.int64)
    lo, hi = int(cuts[0]), int(cuts[-1])
    out = np.empty((nrep, len(cuts) - 1), dtype=np.int64)
    ks = np.arange(lo, hi, dtype=np.uint64)[None, :]
    for start, count in _row_chunks(hi - lo, rep0, nrep):
        reps = np.arange(rep0 + start, rep0 + start + count, dtype=np.uint64)[:, None]
        u = _uniform_grid(seed, reps, ks, stream)
        x = _variates(u, rates[lo:hi], logq[lo:hi], kind)
        csum = np.zeros((count, hi - lo + 1), dtype=np.int64)
        np.cumsum(x, axis=1, out=csum[:, 1:])
        out[start:start + count] = np.diff(csum[:, cuts - lo], axis=1)
    return out


def _window_max_2d(rows, m):
    k = rows.shape[1]
    csum = np.zeros((rows.shape[0], k + 1), dtype=np.int64)
    np.cumsum(rows, axis=1, out=csum[:, 1:])
    return (csum[:, m:] - csum[:, :k - m + 1]).max(axis=1)


def window_max(row, m):
    row = np.asarray(row, dtype=np.int64)
    if row.shape[0] == 0:
        return 0
    return int(_window_max_2d(row[None, :], int(m))[0])


def window_max_rows(rates, logq, kind, seed, rep0, nrep, m, stream):
    rates = np.asarray(rates, dtype=np.float64)
    k = rates.shape[0]
    out = np.zeros(nrep, dtype=np.int64)
    if k == 0:
        return out
    for start, count in _row_chunks(k, rep0, nrep):
        u = uniforms(seed, rep0 + start, count, k, stream)
        out[start:start + count] = _window_max_2d(_variates(u, rates, logq, kind), m)
    return out


def poisson_binomial(p):
    p = np.asarray(p, dtype=np.float64)
    f = np.zeros(p.shape[0] + 1)
    f[0] = 1.0
    for i, pi in enumerate(p):
        qi = 1.0 - pi
        f[i + 1] = f[i] * pi
        f[1:i + 1] = f[1:i + 1] * qi + f[0:i] * pi
        f[0] = f[0] * qi
    return f


def geometric_convolve(q, kmax):
    f = np.zeros(int(kmax) + 1)
    f[0] = 1.0
    for qi in np.asarray(q, dtype=np.float64):
        f = lfilter([1.0 - qi], [1.0, -qi], f)
    return f
