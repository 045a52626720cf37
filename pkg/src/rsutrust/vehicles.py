"""Vehicle layer: V2V neighbourhood graph and hop-limited opinion floods computed for many messages at once.

A flood column is one message (an RSU beacon being disputed, or a road event).
Each vehicle decides once, when the flood first reaches it, what it
rebroadcasts: vehicles able to check the claim themselves repeat their own
verdict, others repeat the plurality of the copies they just heard and stay
silent on a tie. Malicious vehicles then tamper with what they pass on.
"""
from __future__ import annotations

from typing import List, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

NONE = -1


DENSE_LIMIT = 1500


def v2v_graph(positions: np.ndarray, range_m: float):
    """Symmetric 0/1 adjacency; a dense array for small fleets, CSR otherwise."""
    n = len(positions)
    if n < 2:
        return np.zeros((n, n), dtype=np.float32)
    pairs = cKDTree(positions).query_pairs(range_m, output_type="ndarray")
    if n <= DENSE_LIMIT:
        adj = np.zeros((n, n), dtype=np.float32)
        adj[pairs[:, 0], pairs[:, 1]] = 1.0
        adj[pairs[:, 1], pairs[:, 0]] = 1.0
        return adj
    i = np.concatenate([pairs[:, 0], pairs[:, 1]])
    j = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return sparse.csr_matrix((np.ones(len(i)), (i, j)), shape=(n, n))


def plurality(ones: np.ndarray, zeros: np.ndarray) -> np.ndarray:
    return np.where(ones > zeros, 1, np.where(zeros > ones, 0, NONE)).astype(np.int8)


def opinion_flood(adj, origin: np.ndarray, verifier: np.ndarray, verdict: np.ndarray,
                  malicious: np.ndarray, rng: np.random.Generator, tamper_p: float, hop_limit: int,
                  drop_share: float = 0.5) -> Tuple[np.ndarray, np.ndarray]:
    """Propagate opinion messages.

    origin:   (n, F) int8, value each originator broadcasts first, NONE elsewhere.
    verifier: (n, F) bool, vehicles that can judge the claim themselves.
    verdict:  (n, F) int8, their own judgement.
    tamper_p: chance a malicious relay tampers; a tampering relay drops with
              probability drop_share and flips otherwise.

    Returns (sent, level): the value each vehicle broadcast (NONE if silent)
    and the hop level at which it did.
    """
    sent = origin.astype(np.int8, copy=True)
    level = np.where(sent != NONE, 0, NONE).astype(np.int8)
    decided = sent != NONE
    frontier = sent.copy()
    n_cols = sent.shape[1]
    for hop in range(1, hop_limit):
        heard = np.asarray(adj @ np.hstack([frontier == 1, frontier == 0]).astype(adj.dtype))
        ones, zeros = heard[:, :n_cols], heard[:, n_cols:]
        ri, ci = np.nonzero((ones + zeros > 0) & ~decided)
        if not len(ri):
            break
        o, z = ones[ri, ci], zeros[ri, ci]
        content = np.where(o > z, 1, np.where(z > o, 0, NONE)).astype(np.int8)
        check = verifier[ri, ci]
        content[check] = verdict[ri, ci][check]
        if tamper_p > 0:
            bad = np.flatnonzero(malicious[ri])
            if len(bad):
                hit = bad[rng.random(len(bad)) < tamper_p]
                if len(hit):
                    drop = rng.random(len(hit)) < drop_share
                    content[hit[drop]] = NONE
                    keep = hit[~drop]
                    content[keep] = np.where(content[keep] == NONE, NONE, 1 - content[keep])
        frontier = np.full_like(sent, NONE)
        frontier[ri, ci] = content
        sent[ri, ci] = content
        level[ri[content != NONE], ci[content != NONE]] = hop
        decided[ri, ci] = True
    return sent, level


def relative_disagreement(sensed: np.ndarray, claimed: np.ndarray, tolerance: float) -> np.ndarray:
    """(n, F) bool: any sensor field of column f differs from vehicle n's reading by more than tolerance."""
    # sensed (n, 3), claimed (F, 3)
    diff = np.abs(claimed[None, :, :] - sensed[:, None, :]) / np.maximum(np.abs(sensed[:, None, :]), 1e-6)
    return (diff > tolerance).any(axis=2)


def ignore_origins(has_copy: np.ndarray, disagree: np.ndarray, malicious: np.ndarray,
                   rng: np.random.Generator, false_ignore_p: float, suppress_p: float) -> np.ndarray:
    """First IGNORE_RSU broadcasts for each beacon column."""
    origin = np.full(has_copy.shape, NONE, dtype=np.int8)
    honest = ~malicious[:, None]
    origin[has_copy & disagree & honest] = 0
    mal = has_copy & malicious[:, None]
    # malicious vehicles that caught a real falsehood may hide or invert it
    caught = np.flatnonzero((mal & disagree).ravel())
    flat = origin.ravel()
    if len(caught):
        u = rng.random(len(caught))
        tamper = u < suppress_p
        flip = rng.random(len(caught)) >= 0.5
        flat[caught[~tamper]] = 0
        flat[caught[tamper & flip]] = 1
    clean = np.flatnonzero((mal & ~disagree).ravel())
    if len(clean):
        flat[clean[rng.random(len(clean)) < false_ignore_p]] = 0
    return origin


def event_origins(observer: np.ndarray, malicious: np.ndarray, rng: np.random.Generator,
                  modify_p: float) -> np.ndarray:
    origin = np.where(observer, 1, NONE).astype(np.int8)
    bad = np.flatnonzero((observer & malicious[:, None]).ravel())
    if len(bad):
        flat = origin.ravel()
        flat[bad[rng.random(len(bad)) < modify_p]] = 0
    return origin


def reports_for(sent: np.ndarray, column: int, listeners: np.ndarray) -> List[Tuple[int, int]]:
    """(vehicle, value) pairs heard by a receiver whose in-range vehicles are `listeners`."""
    idx = np.flatnonzero(listeners & (sent[:, column] != NONE))
    return list(zip(idx.tolist(), sent[idx, column].tolist()))


def column_reports(sent: np.ndarray, level: np.ndarray, wanted: np.ndarray,
                   listeners: np.ndarray) -> List[Tuple[int, int, List[int], List[int], int]]:
    """What each receiver hears of each flood column.

    wanted:    (R, F) bool, receiver r collects reports on column f.
    listeners: (R, n) bool, vehicles within range of receiver r.
    Returns (receiver, column, vehicles, values, deepest hop level) for every
    non-empty pair, ordered by receiver then column.
    """
    heard = sent != NONE
    mask = listeners[:, None, :] & heard.T[None, :, :] & wanted[:, :, None]
    r_idx, c_idx, v_idx = np.nonzero(mask)
    if not len(r_idx):
        return []
    vals = sent[v_idx, c_idx]
    lvls = level[v_idx, c_idx]
    key = r_idx * mask.shape[1] + c_idx
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    ends = np.r_[starts[1:], len(key)]
    v_list, val_list = v_idx.tolist(), vals.tolist()
    peak = np.maximum.reduceat(lvls, starts).tolist()
    out = []
    for k, (a, b) in enumerate(zip(starts.tolist(), ends.tolist())):
        out.append((int(r_idx[a]), int(c_idx[a]), v_list[a:b], val_list[a:b], peak[k]))
    return out
