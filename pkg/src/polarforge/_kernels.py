"""Compiled successive-cancellation kernels shared by SC, SCL and Fano decoding.

LLR and partial-sum buffers use a full ``(n + 1, N)`` layout: row ``s`` holds
every level-``s`` node (blocks of ``2**s`` entries) at its natural position,
and row ``n`` holds the channel LLRs.  A node is recomputed only when its
block start is entered, so a sequential decoder can retreat to any earlier
leaf without recomputing anything.
"""

import math

import numpy as np
from numba import njit

LN2 = math.log(2.0)


@njit(cache=True, nogil=True)
def f_exact(a, b):
    # 2*artanh(tanh(a/2) tanh(b/2)) in a form that stays finite for large |a|, |b|
    sgn = 1.0
    if a < 0.0:
        sgn = -sgn
    if b < 0.0:
        sgn = -sgn
    if a == 0.0 or b == 0.0:
        return 0.0
    m = min(abs(a), abs(b))
    return sgn * m + math.log1p(math.exp(-abs(a + b))) - math.log1p(math.exp(-abs(a - b)))


@njit(cache=True, nogil=True)
def f_minsum(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0
    m = min(abs(a), abs(b))
    return m if (a < 0.0) == (b < 0.0) else -m


@njit(cache=True, nogil=True)
def g_combine(a, b, u):
    return b - a if u else b + a


@njit(cache=True, nogil=True)
def leaf_llr(llr, ps, j, n, minsum):
    """Bring the buffers up to date for leaf ``j`` and return its LLR."""
    # nodes whose block starts at j: levels 0..min(trailing_zeros(j), n - 1)
    top = n - 1
    if j > 0:
        tz = 0
        while not (j >> tz) & 1:
            tz += 1
        top = min(tz, n - 1)
    for s in range(top, -1, -1):
        h = 1 << s
        base = (j >> (s + 1)) << (s + 1)
        if j & h:
            for k in range(h):
                llr[s, base + h + k] = g_combine(llr[s + 1, base + k], llr[s + 1, base + h + k],
                                                 ps[s, base + k])
        elif minsum:
            for k in range(h):
                llr[s, base + k] = f_minsum(llr[s + 1, base + k], llr[s + 1, base + h + k])
        else:
            for k in range(h):
                llr[s, base + k] = f_exact(llr[s + 1, base + k], llr[s + 1, base + h + k])
    return llr[0, j]


@njit(cache=True, nogil=True)
def commit_bit(ps, j, u, n):
    """Record decision ``u`` at leaf ``j`` and fold completed blocks upward."""
    ps[0, j] = u
    s = 0
    while s < n and (j >> s) & 1:
        h = 1 << s
        base = (j >> (s + 1)) << (s + 1)
        for k in range(h):
            ps[s + 1, base + k] = ps[s, base + k] ^ ps[s, base + h + k]
            ps[s + 1, base + h + k] = ps[s, base + h + k]
        s += 1


@njit(cache=True, nogil=True)
def log2_prob(L, u):
    """log2 Pr(U = u) for a bit with natural-log LLR ``L``."""
    x = L if u == 0 else -L
    # -log2(1 + e^-x), stable for either sign of x
    if x >= 0.0:
        return -math.log1p(math.exp(-x)) / LN2
    return (x - math.log1p(math.exp(x))) / LN2


@njit(cache=True, nogil=True)
def sc_decode_one(chan, frozen, n, minsum, llr, ps, u_out):
    N = 1 << n
    for k in range(N):
        llr[n, k] = chan[k]
    for j in range(N):
        L = leaf_llr(llr, ps, j, n, minsum)
        u = 0
        if not frozen[j] and L < 0.0:
            u = 1
        u_out[j] = u
        commit_bit(ps, j, u, n)


@njit(cache=True, nogil=True)
def sc_decode_batch(chans, frozen, n, minsum):
    B, N = chans.shape
    out = np.zeros((B, N), dtype=np.uint8)
    llr = np.zeros((n + 1, N))
    ps = np.zeros((n + 1, N), dtype=np.uint8)
    for b in range(B):
        sc_decode_one(chans[b], frozen, n, minsum, llr, ps, out[b])
    return out


@njit(cache=True, nogil=True)
def crc_remainder(bits, poly):
    """MSB-first long division of ``bits * x^w`` by ``poly`` (w + 1 coefficients, leading 1)."""
    w = poly.shape[0] - 1
    reg = np.zeros(bits.shape[0] + w, dtype=np.uint8)
    reg[: bits.shape[0]] = bits
    for i in range(bits.shape[0]):
        if reg[i]:
            for k in range(w + 1):
                reg[i + k] ^= poly[k]
    return reg[bits.shape[0]:]


@njit(cache=True, nogil=True)
def _crc_ok(word, poly):
    w = poly.shape[0] - 1
    k = word.shape[0] - w
    rem = crc_remainder(word[:k], poly)
    for i in range(w):
        if rem[i] != word[k + i]:
            return False
    return True


@njit(cache=True, nogil=True)
def scl_decode_one(chan, frozen, n, list_size, minsum, poly, use_crc, llr, ps, u, metric,
                   cand_metric, cand_order, keep, u_out):
    """LLR-domain list decoding with sign-mismatch path penalties.

    Buffers ``llr``, ``ps``, ``u`` carry one slice per list slot.  Returns the
    slot chosen as the decoder output in ``u_out``.
    """
    N = 1 << n
    for k in range(N):
        llr[0, n, k] = chan[k]
    metric[0] = 0.0
    active = np.zeros(list_size, dtype=np.bool_)
    active[0] = True
    n_active = 1
    leaf = np.zeros(list_size)
    for j in range(N):
        for p in range(list_size):
            if active[p]:
                leaf[p] = leaf_llr(llr[p], ps[p], j, n, minsum)
        if frozen[j]:
            for p in range(list_size):
                if active[p]:
                    if leaf[p] < 0.0:
                        metric[p] += -leaf[p]
                    u[p, j] = 0
                    commit_bit(ps[p], j, 0, n)
            continue
        # candidates in (slot, bit) order; stable sort keeps bit 0 first on ties
        nc = 0
        for p in range(list_size):
            if active[p]:
                L = leaf[p]
                cand_metric[nc] = metric[p] + (-L if L < 0.0 else 0.0)
                cand_order[nc] = 2 * p
                nc += 1
                cand_metric[nc] = metric[p] + (L if L >= 0.0 else 0.0)
                cand_order[nc] = 2 * p + 1
                nc += 1
        idx = np.argsort(cand_metric[:nc], kind="mergesort")
        n_keep = min(list_size, nc)
        keep[:] = 0
        for r in range(n_keep):
            c = cand_order[idx[r]]
            keep[c // 2] |= 1 << (c % 2)
        new_metric = np.empty(list_size)
        for p in range(list_size):
            if active[p] and keep[p] == 0:
                active[p] = False
                n_active -= 1
        for p in range(list_size):
            if not active[p] or keep[p] == 0:
                continue
            L = leaf[p]
            if keep[p] == 3:
                q = 0
                while active[q] or keep[q] == 4:
                    q += 1
                keep[q] = 4
                llr[q, :, :] = llr[p, :, :]
                ps[q, :, :] = ps[p, :, :]
                u[q, :j] = u[p, :j]
                new_metric[q] = metric[p] + (L if L >= 0.0 else 0.0)
                u[q, j] = 1
                commit_bit(ps[q], j, 1, n)
                new_metric[p] = metric[p] + (-L if L < 0.0 else 0.0)
                u[p, j] = 0
                commit_bit(ps[p], j, 0, n)
            else:
                b = 0 if keep[p] == 1 else 1
                pen = 0.0
                if b == 0 and L < 0.0:
                    pen = -L
                elif b == 1 and L >= 0.0:
                    pen = L
                new_metric[p] = metric[p] + pen
                u[p, j] = b
                commit_bit(ps[p], j, b, n)
        for p in range(list_size):
            if keep[p] == 4:
                active[p] = True
                n_active += 1
        for p in range(list_size):
            if active[p]:
                metric[p] = new_metric[p]
    # rank surviving paths, smallest metric (then slot) first
    ranked = np.empty(list_size)
    for p in range(list_size):
        ranked[p] = metric[p] if active[p] else np.inf
    order = np.argsort(ranked, kind="mergesort")
    best = order[0]
    if use_crc:
        k = 0
        for j in range(N):
            if not frozen[j]:
                k += 1
        word = np.empty(k, dtype=np.uint8)
        for r in range(n_active):
            p = order[r]
            t = 0
            for j in range(N):
                if not frozen[j]:
                    word[t] = u[p, j]
                    t += 1
            if _crc_ok(word, poly):
                best = p
                break
    u_out[:] = u[best]


@njit(cache=True, nogil=True)
def scl_decode_batch(chans, frozen, n, list_size, minsum, poly, use_crc):
    B, N = chans.shape
    out = np.zeros((B, N), dtype=np.uint8)
    llr = np.zeros((list_size, n + 1, N))
    ps = np.zeros((list_size, n + 1, N), dtype=np.uint8)
    u = np.zeros((list_size, N), dtype=np.uint8)
    metric = np.zeros(list_size)
    cand_metric = np.zeros(2 * list_size)
    cand_order = np.zeros(2 * list_size, dtype=np.int64)
    keep = np.zeros(list_size, dtype=np.int64)
    for b in range(B):
        scl_decode_one(chans[b], frozen, n, list_size, minsum, poly, use_crc, llr, ps, u, metric,
                       cand_metric, cand_order, keep, out[b])
    return out


@njit(cache=True, nogil=True)
def _conv_bit(v, j, b, conv):
    # u_j for hypothesis v_j = b given the committed v_0..v_{j-1}
    acc = b & conv[0]
    for k in range(1, conv.shape[0]):
        if j - k < 0:
            break
        acc ^= conv[k] & v[j - k]
    return acc


@njit(cache=True, nogil=True)
def fano_decode_one(chan, data, bias, n, conv, delta, max_visits, minsum, llr, ps, v, u, M, bm,
                    best, choice):
    """Fano search over the irregular PAC tree.

    Returns ``(visits, exhausted)``; the decoded carrier is left in ``v``.
    ``M[j]`` is the path metric of the node at depth ``j``; ``bm[j, b]`` the
    branch metric for ``v_j = b``, which is ``log2 Pr(u_j) + bias[j]``.
    """
    N = 1 << n
    for k in range(N):
        llr[n, k] = chan[k]
    T = 0.0
    j = 0
    M[0] = 0.0
    visits = 0
    _branch_metrics(llr, ps, v, j, n, conv, data, bias, minsum, bm, best)
    look = 0
    while True:
        if data[j]:
            b = best[j] if look == 0 else 1 - best[j]
        else:
            b = 0
        mf = M[j] + bm[j, b]
        if mf >= T:
            visits += 1
            if visits > max_visits:
                return visits - 1, True
            v[j] = b
            u[j] = _conv_bit(v, j, b, conv)
            choice[j] = look
            M[j + 1] = mf
            commit_bit(ps, j, u[j], n)
            j += 1
            if j == N:
                return visits, False
            _branch_metrics(llr, ps, v, j, n, conv, data, bias, minsum, bm, best)
            if M[j - 1] < T + delta:
                while M[j] >= T + delta:
                    T += delta
            look = 0
            continue
        while True:
            mb = M[j - 1] if j > 0 else -np.inf
            if mb >= T:
                j -= 1
                if data[j] and choice[j] == 0:
                    look = 1
                    break
            else:
                T -= delta
                look = 0
                break


@njit(cache=True, nogil=True)
def _branch_metrics(llr, ps, v, j, n, conv, data, bias, minsum, bm, best):
    L = leaf_llr(llr, ps, j, n, minsum)
    for b in range(2):
        bm[j, b] = log2_prob(L, _conv_bit(v, j, b, conv)) + bias[j]
    best[j] = 1 if bm[j, 1] > bm[j, 0] else 0


@njit(cache=True, nogil=True)
def fano_decode_batch(chans, data, bias, n, conv, delta, max_visits, minsum):
    B, N = chans.shape
    out = np.zeros((B, N), dtype=np.uint8)
    visits = np.zeros(B, dtype=np.int64)
    exhausted = np.zeros(B, dtype=np.bool_)
    llr = np.zeros((n + 1, N))
    ps = np.zeros((n + 1, N), dtype=np.uint8)
    u = np.zeros(N, dtype=np.uint8)
    M = np.zeros(N + 1)
    bm = np.zeros((N, 2))
    best = np.zeros(N, dtype=np.uint8)
    choice = np.zeros(N, dtype=np.uint8)
    for b in range(B):
        visits[b], exhausted[b] = fano_decode_one(chans[b], data, bias, n, conv, delta, max_visits,
                                                  minsum, llr, ps, out[b], u, M, bm, best, choice)
    return out, visits, exhausted
