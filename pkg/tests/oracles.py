"""Independent reference implementations used only by the tests."""

from collections import deque

import numpy as np


def quat_mul_matrix(a, b):
    """Quaternion product via the left-multiplication matrix of ``a``."""
    w, x, y, z = a
    L = np.array([[w, -x, -y, -z],
                  [x, w, -z, y],
                  [y, z, w, -x],
                  [z, -y, x, w]], dtype=float)
    return L @ np.asarray(b, dtype=float)


def bfs_labels(mask):
    """4-connected component labels by breadth-first flood fill (0 = outside)."""
    nx, ny = mask.shape
    labels = np.zeros(mask.shape, dtype=int)
    count = 0
    for p in range(nx):
        for q in range(ny):
            if mask[p, q] and not labels[p, q]:
                count += 1
                labels[p, q] = count
                queue = deque([(p, q)])
                while queue:
                    a, b = queue.popleft()
                    for c, d in ((a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)):
                        if 0 <= c < nx and 0 <= d < ny and mask[c, d] and not labels[c, d]:
                            labels[c, d] = count
                            queue.append((c, d))
    return labels, count


class UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def naive_closure(masks, simple_only=False):
    """Node equivalence ``(latitude index, cell)`` from the three merge rules,
    computed node by node with a union-find and BFS components."""
    n = len(masks)
    uf = UnionFind()
    for a in range(n):
        for p, q in zip(*np.nonzero(masks[a])):
            uf.find((a, p, q))
    for a in range(1, n):  # consecutive samples
        for p, q in zip(*np.nonzero(masks[a] & masks[a - 1])):
            uf.union((a, p, q), (a - 1, p, q))
    for p in range(masks.shape[1]):  # real row
        rows = [a for a in range(n) if masks[a][p, 0]]
        for a in rows[1:]:
            uf.union((rows[0], p, 0), (a, p, 0))
    changed = True
    while changed:
        changed = False
        for a in range(n):
            for b in range(a + 1, n):
                E = masks[a] & masks[b]
                labels, count = bfs_labels(E)
                for k in range(1, count + 1):
                    cells = list(zip(*np.nonzero(labels == k)))
                    if simple_only:
                        seed = any(q == 0 for _, q in cells)
                    else:
                        seed = any(uf.find((a, p, q)) == uf.find((b, p, q)) for p, q in cells)
                    if seed:
                        for p, q in cells:
                            changed |= uf.union((a, p, q), (b, p, q))
    return uf
