"""Pure-Python Gibbs kernels (reference implementation).

`_kernels.pyx` is a line-for-line compiled twin of this module. Both consume
the same SplitMix64 stream with identical operation order, so given the same
inputs they produce bit-identical states - which makes this module the
correctness oracle for the compiled one (see tests/test_backends.py).

Keep changes synchronized: any arithmetic reordering here silently breaks
cross-backend reproducibility.
"""

from __future__ import annotations

from .rng import SplitMix64

BACKEND_NAME = "python"


def token_pass(words, doc_ids, z, n_jk, n_kw, n_k, beta, stick_rest,
               alpha0, gamma, eta, k_active, rng_state, shuffle):
    """One Gibbs sweep over every token.

    For each token: remove it from the counts, draw a topic from the
    direct-assignment conditional (existing topics by doc count + stick
    weight times the smoothed word likelihood; a new topic by the residual
    stick mass over a uniform word prior), then add it back. A new topic
    splits the residual stick; a topic emptied by the move returns its
    stick mass to the residual and its slot is compacted away.

    Returns the new number of active topics, or -1 if the draw needed more
    topic slots than the arrays have (caller restores a snapshot, grows the
    arrays, and retries).
    """
    rng = SplitMix64.from_state(int(rng_state[0]))
    n_tokens = len(words)
    k_cap = beta.shape[0]
    vocab_size = n_kw.shape[1]
    k = int(k_active)
    beta_u = float(stick_rest[0])
    veta = vocab_size * eta
    p_cum = [0.0] * k_cap

    order = list(range(n_tokens))
    if shuffle:
        rng.shuffle(order)

    for t in order:
        w = int(words[t])
        j = int(doc_ids[t])
        k_old = int(z[t])

        n_jk[j, k_old] -= 1
        n_kw[k_old, w] -= 1
        n_k[k_old] -= 1

        row = n_jk[j]
        col = n_kw[:, w]
        total = 0.0
        for kk in range(k):
            p = (row[kk] + alpha0 * beta[kk]) \
                * (col[kk] + eta) / (n_k[kk] + veta)
            total += p
            p_cum[kk] = total
        total += alpha0 * beta_u / vocab_size

        u = rng.uniform() * total
        k_new = k
        for kk in range(k):
            if u < p_cum[kk]:
                k_new = kk
                break

        if k_new == k:
            if k == k_cap:
                rng_state[0] = rng.state
                return -1
            v = 1.0 - (1.0 - rng.uniform()) ** (1.0 / gamma)
            beta[k] = v * beta_u
            beta_u = (1.0 - v) * beta_u
            k += 1

        z[t] = k_new
        n_jk[j, k_new] += 1
        n_kw[k_new, w] += 1
        n_k[k_new] += 1

        if n_k[k_old] == 0:
            last = k - 1
            beta_u += beta[k_old]
            if k_old != last:
                beta[k_old] = beta[last]
                n_k[k_old] = n_k[last]
                n_kw[k_old, :] = n_kw[last, :]
                n_jk[:, k_old] = n_jk[:, last]
                for i in range(n_tokens):
                    if z[i] == last:
                        z[i] = k_old
            beta[last] = 0.0
            n_k[last] = 0
            n_kw[last, :] = 0
            n_jk[:, last] = 0
            k = last

    stick_rest[0] = beta_u
    rng_state[0] = rng.state
    return k


def table_pass(n_jk, m_jk, beta, alpha0, k_active, rng_state):
    """Resample per-(document, topic) table counts.

    Simulates sequential restaurant seating: customer 1 always opens a
    table (no draw consumed); customer i opens a new one with probability
    theta / (i - 1 + theta), theta = alpha0 * beta_k.
    """
    rng = SplitMix64.from_state(int(rng_state[0]))
    n_docs = n_jk.shape[0]
    k = int(k_active)
    for j in range(n_docs):
        row = n_jk[j]
        for kk in range(k):
            n = int(row[kk])
            if n == 0:
                m_jk[j, kk] = 0
                continue
            theta = alpha0 * beta[kk]
            m = 1
            for i in range(2, n + 1):
                if rng.uniform() < theta / ((i - 1) + theta):
                    m += 1
            m_jk[j, kk] = m
    rng_state[0] = rng.state


def sample_table_count(n, theta, rng_state):
    """Table count for one (document, topic) cell; exposed for direct testing
    of the seating law this backend actually runs."""
    rng = SplitMix64.from_state(int(rng_state[0]))
    m = 1
    for i in range(2, n + 1):
        if rng.uniform() < theta / ((i - 1) + theta):
            m += 1
    rng_state[0] = rng.state
    return m
