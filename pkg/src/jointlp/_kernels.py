"""Compiled inner loops for the cyclic schedule."""

import math

import numba as nb
import numpy as np

NEG_INF = -np.inf


@nb.njit(cache=True, inline="always")
def _lae(a, b):
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@nb.njit(cache=True)
def _lse(v):
    acc = NEG_INF
    for t in range(v.shape[0]):
        acc = _lae(acc, v[t])
    return acc


@nb.njit(cache=True)
def _parity_even(rows, j, m, k1, num_edges):
    ev, od = 0.0, NEG_INF
    for t in range(rows.shape[1]):
        e = rows[j, t]
        if e == num_edges:
            break
        li = -k1 * m[e]
        ev, od = _lae(ev, od + li), _lae(od, ev + li)
    return ev


@nb.njit(cache=True)
def cyclic_sweeps(bvals, src, dst, bit, num_states, rows, edge_check, edge_var, var_ptr, var_edges,
                  m, big_m, gamma, k1, k2, clamp, n_sweeps, stop_on_codeword, tol,
                  block_trace):
    """Run up to ``n_sweeps`` Gauss-Seidel sweeps in place.

    Returns (sweeps done, codeword flag, trace, clamp flags per block).
    """
    N, O = bvals.shape
    E = m.shape[0]
    M = rows.shape[0]
    S = num_states
    n_trace = n_sweeps * N if block_trace else n_sweeps
    trace = np.empty(n_trace)
    clamps = np.zeros(n_sweeps * N, dtype=np.bool_)
    check_logs = np.empty(M)
    for j in range(M):
        check_logs[j] = _parity_even(rows, j, m, k1, E)
    B = np.empty((N + 1, S))
    A = np.empty(S)
    A2 = np.empty(S)
    lam = np.empty(O)
    t0 = np.empty(O)
    ntr = 0
    prev = NEG_INF
    done = 0
    found = False
    for sweep in range(n_sweeps):
        # backward pass with the messages as they stand
        for k in range(S):
            B[N, k] = 0.0
        for i in range(N, 0, -1):
            s_i = 0.0
            for q in range(var_ptr[i - 1], var_ptr[i]):
                s_i += m[var_edges[q]]
            for k in range(S):
                B[i - 1, k] = NEG_INF
            for e in range(O):
                le = -k2 * (bvals[i - 1, e] - s_i * bit[e])
                B[i - 1, src[e]] = _lae(B[i - 1, src[e]], B[i, dst[e]] + le)
        for k in range(S):
            A[k] = 0.0
        for p in range(N):
            blk = sweep * N + p
            clamped = False
            # extrinsic trellis log-ratio
            num, den = NEG_INF, NEG_INF
            for e in range(O):
                v = A[src[e]] - k2 * bvals[p, e] + B[p + 1, dst[e]]
                if bit[e] == 0:
                    num = _lae(num, v)
                else:
                    den = _lae(den, v)
            g_ext = num - den
            if not math.isfinite(g_ext):
                g_ext = clamp * k1 if (den == NEG_INF and num != NEG_INF) else -clamp * k1
                clamped = True
            d = var_ptr[p + 1] - var_ptr[p]
            msum = 0.0
            mp = np.empty(d)
            for q in range(d):
                e_p = var_edges[var_ptr[p] + q]
                j = edge_check[e_p]
                ev, od = 0.0, NEG_INF
                for t in range(rows.shape[1]):
                    e = rows[j, t]
                    if e == E:
                        break
                    if e == e_p:
                        continue
                    li = -k1 * m[e]
                    ev, od = _lae(ev, od + li), _lae(od, ev + li)
                val = (od - ev) / k1
                if not math.isfinite(val) or abs(val) > clamp:
                    val = clamp if val > 0 else -clamp
                    clamped = True
                mp[q] = val
                msum += val
            s_new = (msum + d * g_ext / k1) / (1.0 + d * k2 / k1)
            gp = g_ext - k2 * s_new
            snew_total = 0.0
            for q in range(d):
                e_p = var_edges[var_ptr[p] + q]
                val = mp[q] + gp / k1
                if abs(val) > clamp:
                    val = clamp if val > 0 else -clamp
                    clamped = True
                m[e_p] = val
                big_m[e_p] = mp[q]
                snew_total += val
            gamma[p] = gp
            clamps[blk] = clamped
            for q in range(d):
                j = edge_check[var_edges[var_ptr[p] + q]]
                check_logs[j] = _parity_even(rows, j, m, k1, E)
            for e in range(O):
                lam[e] = -k2 * (bvals[p, e] - snew_total * bit[e])
            if block_trace:
                for e in range(O):
                    t0[e] = A[src[e]] + lam[e] + B[p + 1, dst[e]]
                csum = 0.0
                for j in range(M):
                    csum += check_logs[j]
                trace[ntr] = -csum / k1 - _lse(t0) / k2
                ntr += 1
            for k in range(S):
                A2[k] = NEG_INF
            for e in range(O):
                A2[dst[e]] = _lae(A2[dst[e]], A[src[e]] + lam[e])
            for k in range(S):
                A[k] = A2[k]
        if not block_trace:
            csum = 0.0
            for j in range(M):
                csum += check_logs[j]
            trace[ntr] = -csum / k1 - _lse(A) / k2
            ntr += 1
        done = sweep + 1
        current = trace[ntr - 1]
        if stop_on_codeword:
            ok = True
            for j in range(M):
                par = 0
                for t in range(rows.shape[1]):
                    e = rows[j, t]
                    if e == E:
                        break
                    if gamma[edge_var[e]] < 0:
                        par ^= 1
                if par:
                    ok = False
                    break
            if ok:
                found = True
                break
        if tol > 0 and current - prev <= tol * (1.0 + abs(current)):
            break
        prev = current
    return done, found, trace[:ntr], clamps[: done * N]


@nb.njit(cache=True)
def _check_messages(rows, m, k1, clamp, out):
    """Extrinsic parity update for every edge via prefix/suffix sums."""
    E = m.shape[0]
    d_max = rows.shape[1]
    pe = np.empty(d_max + 1)
    po = np.empty(d_max + 1)
    se = np.empty(d_max + 1)
    so = np.empty(d_max + 1)
    for j in range(rows.shape[0]):
        d = 0
        while d < d_max and rows[j, d] != E:
            d += 1
        pe[0], po[0] = 0.0, NEG_INF
        for t in range(d):
            li = -k1 * m[rows[j, t]]
            pe[t + 1] = _lae(pe[t], po[t] + li)
            po[t + 1] = _lae(po[t], pe[t] + li)
        se[d], so[d] = 0.0, NEG_INF
        for t in range(d - 1, -1, -1):
            li = -k1 * m[rows[j, t]]
            se[t] = _lae(se[t + 1], so[t + 1] + li)
            so[t] = _lae(so[t + 1], se[t + 1] + li)
        for t in range(d):
            ev = _lae(pe[t] + se[t + 1], po[t] + so[t + 1])
            od = _lae(pe[t] + so[t + 1], po[t] + se[t + 1])
            val = (od - ev) / k1
            if val > clamp:
                val = clamp
            elif val < -clamp:
                val = -clamp
            out[rows[j, t]] = val


@nb.njit(cache=True)
def flooding_iterations(bvals, src, dst, bit, num_states, rows, edge_var, m, big_m, gamma,
                        k1, k2, clamp, inner_rounds, outer_limit, check_first,
                        stop_on_codeword, damping):
    """Algorithm-1 iterations in place: full trellis pass, then ``inner_rounds``
    Jacobi rounds of the check/bit updates.

    Returns (iterations done, codeword flag, per-iteration dual values at
    anchor N, per-iteration clamp flags).
    """
    N, O = bvals.shape
    E = m.shape[0]
    M = rows.shape[0]
    S = num_states
    gclamp = clamp * k1
    trace = np.empty(outer_limit)
    clamps = np.zeros(outer_limit, dtype=np.bool_)
    loglam = np.empty((N, O))
    la = np.empty((N + 1, S))
    lb = np.empty((N + 1, S))
    tmp = np.empty(S)
    s = np.empty(N)
    m_old = np.empty(E)
    done = 0
    found = False
    log_s = math.log(S)
    for it in range(outer_limit):
        clamped = False
        # bit-to-trellis messages
        for i in range(N):
            s[i] = 0.0
        for e in range(E):
            s[edge_var[e]] += m[e]
        for i in range(N):
            for e in range(O):
                loglam[i, e] = -k2 * (bvals[i, e] - s[i] * bit[e])
        # normalized forward / backward recursions
        for k in range(S):
            la[0, k] = -log_s
            lb[N, k] = -log_s
        for i in range(1, N + 1):
            for k in range(S):
                tmp[k] = NEG_INF
            for e in range(O):
                tmp[dst[e]] = _lae(tmp[dst[e]], la[i - 1, src[e]] + loglam[i - 1, e])
            z = _lse(tmp)
            for k in range(S):
                la[i, k] = tmp[k] - z
        for i in range(N, 0, -1):
            for k in range(S):
                tmp[k] = NEG_INF
            for e in range(O):
                tmp[src[e]] = _lae(tmp[src[e]], lb[i, dst[e]] + loglam[i - 1, e])
            z = _lse(tmp)
            for k in range(S):
                lb[i - 1, k] = tmp[k] - z
        # trellis-to-bit messages
        for i in range(N):
            num, den = NEG_INF, NEG_INF
            for e in range(O):
                v = la[i, src[e]] + loglam[i, e] + lb[i + 1, dst[e]]
                if bit[e] == 0:
                    num = _lae(num, v)
                else:
                    den = _lae(den, v)
            g = num - den
            if math.isnan(g):
                g = 0.0
                clamped = True
            elif not abs(g) <= gclamp:
                g = gclamp if g > 0 else -gclamp
                clamped = True
            gamma[i] = g
        # inner loop
        for e in range(E):
            m_old[e] = m[e]
        for _ in range(inner_rounds):
            if check_first:
                _check_messages(rows, m, k1, clamp, big_m)
            for e in range(E):
                v = big_m[e] + gamma[edge_var[e]] / k1
                if v > clamp:
                    v = clamp
                elif v < -clamp:
                    v = -clamp
                m[e] = v
            if not check_first:
                _check_messages(rows, m, k1, clamp, big_m)
        if damping != 1.0:
            for e in range(E):
                m[e] = damping * m[e] + (1.0 - damping) * m_old[e]
        for e in range(E):
            if abs(m[e]) >= clamp:
                clamped = True
        clamps[it] = clamped
        # dual objective with the new messages (anchor-free path partition form)
        for i in range(N):
            s[i] = 0.0
        for e in range(E):
            s[edge_var[e]] += m[e]
        csum = 0.0
        for j in range(M):
            csum += _parity_even(rows, j, m, k1, E)
        for k in range(S):
            tmp[k] = 0.0
        a2 = np.empty(S)
        for i in range(N):
            for k in range(S):
                a2[k] = NEG_INF
            for e in range(O):
                a2[dst[e]] = _lae(a2[dst[e]], tmp[src[e]] - k2 * (bvals[i, e] - s[i] * bit[e]))
            for k in range(S):
                tmp[k] = a2[k]
        trace[it] = -csum / k1 - _lse(tmp) / k2
        done = it + 1
        if stop_on_codeword:
            ok = True
            for j in range(M):
                par = 0
                for t in range(rows.shape[1]):
                    e = rows[j, t]
                    if e == E:
                        break
                    if gamma[edge_var[e]] < 0:
                        par ^= 1
                if par:
                    ok = False
                    break
            if ok:
                found = True
                break
    return done, found, trace[:done], clamps[:done]
