"""Independent oracles and frozen expected values.

Frozen constants were computed with the extended-precision routine below
(decimal, 60 digits) before the implementation existed; `recompute_frozen`
lets a test confirm the frozen digits.  The grid searches and brute-force
predicates here deliberately use different formulas than the package
(KL-form mutual information, per-symbol float comparisons) so they stay
independent of the code paths they check.
"""

from __future__ import annotations

from decimal import Decimal, getcontext

import numpy as np

# --- frozen values (bits) ---------------------------------------------------

H_BERN_01 = 0.46899559358928122125
I_BSC_01_UNIFORM = 0.53100440641071877875  # 1 - h(0.1)
H_026 = 0.82674637249261789546            # h(0.26) = h(0.1 conv 0.2)
H_BERN_03 = 0.88129089923069261822
COMPOUND_BSC_01_02 = 0.27807190511263765213  # min(1-h(0.1), 1-h(0.2))
H_02 = 0.72192809488736234787              # h(0.2)
H_005 = 0.28639695711595612877             # h(0.05)
I_BSC_005_UNIFORM = 0.71360304288404387123  # 1 - h(0.05)


def recompute_frozen() -> dict[str, float]:
    getcontext().prec = 60

    def dlog2(x: Decimal) -> Decimal:
        return x.ln() / Decimal(2).ln()

    def h(p: Decimal) -> Decimal:
        if p == 0 or p == 1:
            return Decimal(0)
        return -(p * dlog2(p) + (1 - p) * dlog2(1 - p))

    return {
        "H_BERN_01": float(h(Decimal("0.1"))),
        "I_BSC_01_UNIFORM": float(1 - h(Decimal("0.1"))),
        "H_026": float(h(Decimal("0.26"))),
        "H_BERN_03": float(h(Decimal("0.3"))),
        "COMPOUND_BSC_01_02": float(1 - h(Decimal("0.2"))),
        "H_02": float(h(Decimal("0.2"))),
        "H_005": float(h(Decimal("0.05"))),
        "I_BSC_005_UNIFORM": float(1 - h(Decimal("0.05"))),
    }


# --- independent information measures (KL form) ------------------------------


def mi_kl(joint: np.ndarray) -> float:
    """I(A;B) from a 2-D joint via the KL-divergence formula."""
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    return float((joint[mask] * np.log2(joint[mask] / (pa @ pb)[mask])).sum())


def grid_pmfs(dim: int, step: float) -> np.ndarray:
    """Exhaustive pmf grid over `dim` symbols with the given step."""
    m = round(1.0 / step)
    if dim == 2:
        a = np.arange(m + 1) / m
        return np.stack([a, 1.0 - a], axis=1)
    if dim == 3:
        out = []
        for i in range(m + 1):
            for j in range(m + 1 - i):
                out.append((i / m, j / m, (m - i - j) / m))
        return np.asarray(out)
    raise ValueError("grid oracle supports dim 2 or 3")


def grid_max_min(term_fn, dim: int, step: float) -> tuple[np.ndarray, float]:
    """Brute-force max over the pmf grid of min_k term_fn(p)[k]."""
    best_p, best_v = None, -np.inf
    for p in grid_pmfs(dim, step):
        v = min(term_fn(p))
        if v > best_v:
            best_p, best_v = p, v
    return best_p, best_v


def mode1_terms(p, channels, h_xy, rates, quantizers, kappa):
    """Independent evaluation of the codeword-side helper margins."""
    out = []
    for k, t in enumerate(channels):
        joint = p[:, None] * t
        i_wu = mi_kl(joint)
        nv = int(quantizers[k].max()) + 1
        jv = np.zeros((nv, t.shape[1]))
        for w in range(t.shape[0]):
            jv[quantizers[k][w]] += p[w] * t[w]
        # I(W;V|U) = H(V|U) since V is a function of W
        pu = joint.sum(axis=0)
        mask = jv > 0
        h_vu = float(-(jv[mask] * np.log2(jv[mask])).sum())
        h_u = float(-(pu[pu > 0] * np.log2(pu[pu > 0])).sum())
        out.append(kappa * i_wu + min(rates[k], kappa * (h_vu - h_u)) - h_xy[k])
    return out


def tuncel_terms(p, channels, h_xy, kappa):
    return [kappa * mi_kl(p[:, None] * t) - h_xy[k] for k, t in enumerate(channels)]


# --- brute-force typicality predicate (per-symbol float comparison) ----------


def naive_pair_typical(seq_a, seq_b, joint: np.ndarray, eps: float) -> bool:
    n = len(seq_a)
    for a in range(joint.shape[0]):
        for b in range(joint.shape[1]):
            cnt = sum(1 for i in range(n) if seq_a[i] == a and seq_b[i] == b)
            if abs(cnt / n - joint[a, b]) > eps * joint[a, b] + 1e-12:
                return False
    return True


def naive_list_decode(u_seq, y_seq, cx: np.ndarray, cw: np.ndarray,
                      p_xy: np.ndarray, p_wu: np.ndarray,
                      eps: float, delta: float) -> list[int]:
    out = []
    for m in range(cx.shape[0]):
        if naive_pair_typical(cx[m], y_seq, p_xy, eps) and \
           naive_pair_typical(cw[m], u_seq, p_wu, delta):
            out.append(m)
    return out
