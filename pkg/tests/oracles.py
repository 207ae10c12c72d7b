"""Independent reference implementations used only to check the library.

Deliberately written with different algorithms than the production code:
full-matrix edit distance instead of two-row DP, Decimal rounding instead of
integer arithmetic, and a double loop over explicit pair lists for the
unlinked-pair search.
"""
from __future__ import annotations

from decimal import Decimal, ROUND_HALF_UP

from aopkb.store import EntityStore


def levenshtein_matrix(a: str, b: str) -> int:
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[n][m]


_KEEP = set("abcdefghijklmnopqrstuvwxyz0123456789")


def normalize_oracle(s: str) -> str:
    # alphanumeric means ASCII [a-z0-9]; everything else folds to a space
    out = []
    prev_space = True
    for ch in s.lower():
        if ch in _KEEP:
            out.append(ch)
            prev_space = False
        elif not prev_space:
            out.append(" ")
            prev_space = True
    return "".join(out).strip()


def ratio_oracle(a: str, b: str) -> int:
    if not a and not b:
        return 100
    max_len = max(len(a), len(b))
    dist = levenshtein_matrix(a, b)
    value = Decimal(100) * (1 - Decimal(dist) / Decimal(max_len))
    return int(value.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def fuzzy_oracle(a: str, b: str) -> int:
    na, nb = normalize_oracle(a), normalize_oracle(b)
    plain = ratio_oracle(na, nb)
    token = ratio_oracle(" ".join(sorted(na.split())), " ".join(sorted(nb.split())))
    return max(plain, token)


def brute_force_unlinked_pairs(
    store: EntityStore, scope: str = "WithinAop"
) -> list[tuple[int, int, int]]:
    results = []
    all_edges = [
        (k.upstream_event_id, k.downstream_event_id) for k in store.kers.values()
    ]
    for aop_id in sorted(store.aops):
        aop = store.aops[aop_id]
        if scope == "Global":
            edges = all_edges
        else:
            edges = []
            for kid, _adj in aop.ker_memberships:
                ker = store.kers.get(kid)
                if ker is not None:
                    edges.append((ker.upstream_event_id, ker.downstream_event_id))
        members = sorted({eid for eid, _role in aop.event_memberships})
        for a in members:
            for b in members:
                if a >= b:
                    continue
                linked = False
                for u, v in edges:
                    if (u == a and v == b) or (u == b and v == a):
                        linked = True
                if not linked:
                    results.append((aop_id, a, b))
    return results
