#!/usr/bin/env python3
"""Independent oracle for the toy fixture.

Recomputes the expected predictions of every ablation cell with dense
numpy matrices and brute-force path enumeration, and writes them to
golden/<context>_<algorithm>[_nf].txt. Run from this directory:

    python3 oracle.py
"""
import itertools
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
DAMPING = 0.85
ITERATIONS = 30
LAMBDA = 0.5
MIN_WORDS = 20
MAX_PATH = 6


def read_graph(path):
    ids, weights = [], {}

    def vid(x):
        if x not in ids:
            ids.append(x)
        return ids.index(x)

    for line in open(path):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        f = dict(field.split(":", 1) for field in line.split())
        u, v = vid(f["u"]), vid(f["v"])
        w = float(f.get("w", "1"))
        pairs = [(u, v)] if f.get("d") == "1" or u == v else [(u, v), (v, u)]
        for p in pairs:
            weights[p] = weights.get(p, 0.0) + w
    return ids, weights


def read_dict(path):
    d = {}
    for line in open(path):
        parts = line.split()
        d[parts[0]] = [(c, int(n)) for c, n in (p.rsplit(":", 1) for p in parts[1:])]
    return d


def read_corpus(path):
    sentences = []
    for line in open(path):
        line = line.rstrip("\n")
        if line.startswith("<sent"):
            sentences.append([])
        elif line.startswith("<doc") or not line:
            continue
        else:
            surface, lemma, pos, iid, flag = line.split("\t")
            sentences[-1].append((lemma, pos, None if iid == "-" else iid))
    return sentences


def content(tok):
    return tok[1] in "nvar" and len(tok[1]) == 1


def window(sentences, target, min_words):
    first = last = target
    count = sum(map(content, sentences[target]))
    follow = True
    while count < min_words and (first > 0 or last + 1 < len(sentences)):
        if (follow and last + 1 < len(sentences)) or first == 0:
            last += 1
            count += sum(map(content, sentences[last]))
        else:
            first -= 1
            count += sum(map(content, sentences[first]))
        follow = not follow
    return [(si, ti, t) for si in range(first, last + 1) for ti, t in enumerate(sentences[si]) if content(t)]


def smoothed(senses):
    tot = sum(n + 1 for _, n in senses)
    return [(n + 1) / tot for _, n in senses]


def dense_ppr(ids, weights, v):
    n = len(ids)
    M = np.zeros((n, n))
    for (s, t), w in weights.items():
        M[t, s] += w
    out = M.sum(axis=0)
    p = v.copy()
    for _ in range(ITERATIONS):
        dangling = sum(p[i] for i in range(n) if out[i] <= 0)
        step = np.zeros(n)
        for s in range(n):
            if out[s] > 0:
                step += p[s] * M[:, s] / out[s]
        p = (1 - DAMPING) * v + DAMPING * (step + dangling * v)
    return p


def personalization(ids, win, d, use_freq, exclude):
    words = []
    for si, ti, (lemma, pos, _) in win:
        if (si, ti) == exclude:
            continue
        hw = f"{lemma.lower()}#{pos}"
        if hw in d:
            words.append(d[hw])
    v = np.zeros(len(ids))
    for senses in words:
        split = smoothed(senses) if use_freq else [1 / len(senses)] * len(senses)
        for (c, _), share in zip(senses, split):
            if c in ids:
                v[ids.index(c)] += share / len(words)
    if v.sum() == 0:
        return None
    return v / v.sum()


def rank(senses, walk, use_freq):
    tot = sum(walk)
    walk = [w / tot for w in walk] if tot > 0 else [1 / len(senses)] * len(senses)
    freq = smoothed(senses)
    scores = [LAMBDA * f + (1 - LAMBDA) * w if use_freq else w for f, w in zip(freq, walk)]
    order = sorted(range(len(senses)), key=lambda i: -scores[i])
    return [senses[i][0] for i in order]


def freq_rank(senses):
    freq = smoothed(senses)
    return [senses[i][0] for i in sorted(range(len(senses)), key=lambda i: -freq[i])]


def simple_paths(weights, n, max_len):
    adj = {s: [] for s in range(n)}
    for (s, t) in weights:
        adj[s].append(t)
    stack = [[s] for s in range(n)]
    while stack:
        path = stack.pop()
        if len(path) > 1:
            yield path
        if len(path) - 1 < max_len:
            for t in adj[path[-1]]:
                if t not in path:
                    stack.append(path + [t])


def subgraph(ids, weights, groups):
    seed_words = {}
    for w, concepts in enumerate(groups):
        for c in concepts:
            if c in ids:
                seed_words.setdefault(ids.index(c), set()).add(w)
    keep = set(seed_words)
    for path in simple_paths(weights, len(ids), MAX_PATH):
        a, b = seed_words.get(path[0]), seed_words.get(path[-1])
        if a and b and any(x != y for x in a for y in b):
            keep.update(path)
    keep = sorted(keep)
    sub_ids = [ids[i] for i in keep]
    sub_w = {(keep.index(s), keep.index(t)): w for (s, t), w in weights.items() if s in keep and t in keep}
    return sub_ids, sub_w


def cell(sentences, ids, weights, d, algorithm, use_freq, min_words):
    preds = {}
    for si, sent in enumerate(sentences):
        win = window(sentences, si, min_words)
        targets = [(s, t, tok) for s, t, tok in win if s == si and tok[2]]
        targets = [(s, t, tok) for s, t, tok in targets if f"{tok[0].lower()}#{tok[1]}" in d]
        if not targets:
            continue

        def fallback(senses, iid):
            if use_freq or len(senses) == 1:
                preds[iid] = freq_rank(senses)

        if algorithm == "ppr_w2w":
            for s, t, tok in targets:
                senses = d[f"{tok[0].lower()}#{tok[1]}"]
                v = personalization(ids, win, d, use_freq, (s, t))
                if v is None:
                    fallback(senses, tok[2])
                    continue
                p = dense_ppr(ids, weights, v)
                walk = [p[ids.index(c)] if c in ids else 0.0 for c, _ in senses]
                preds[tok[2]] = rank(senses, walk, use_freq)
            continue

        g_ids, g_w = ids, weights
        if algorithm == "dfs":
            groups, seen = [], set()
            for _, _, (lemma, pos, _) in win:
                hw = f"{lemma.lower()}#{pos}"
                if hw in d and hw not in seen:
                    seen.add(hw)
                    groups.append([c for c, _ in d[hw]])
            g_ids, g_w = subgraph(ids, weights, groups)
        v = personalization(g_ids, win, d, use_freq, None)
        p = None if v is None else dense_ppr(g_ids, g_w, v)
        for _, _, tok in targets:
            senses = d[f"{tok[0].lower()}#{tok[1]}"]
            if p is None:
                fallback(senses, tok[2])
            else:
                walk = [p[g_ids.index(c)] if c in g_ids else 0.0 for c, _ in senses]
                preds[tok[2]] = rank(senses, walk, use_freq)
    return "".join(f"{iid} {' '.join(cs)}\n" for iid, cs in sorted(preds.items()))


def main():
    ids, weights = read_graph(os.path.join(HERE, "kb.txt"))
    d = read_dict(os.path.join(HERE, "dict.txt"))
    sentences = read_corpus(os.path.join(HERE, "corpus.txt"))
    os.makedirs(os.path.join(HERE, "golden"), exist_ok=True)
    for context, min_words in [("single", 0), ("extended", MIN_WORDS)]:
        for use_freq, algorithm in itertools.product([True, False], ["ppr_w2w", "ppr", "dfs"]):
            name = f"{context}_{algorithm}{'' if use_freq else '_nf'}.txt"
            text = cell(sentences, ids, weights, d, algorithm, use_freq, min_words)
            with open(os.path.join(HERE, "golden", name), "w") as fh:
                fh.write(text)
            print(name, text.replace("\n", " | "))


if __name__ == "__main__":
    main()
