"""Dark-region MSER detection by linear-time flooding.

Regions are connected components (4-connectivity) of the lower level sets
``{I <= t}``, i.e. bright extremal sets of the inverted slice. Each
component's *seed* is its darkest pixel (ties broken by flat index). For a
region ``R`` at level ``t`` the relative area variation is::

    q(t) = (|R(t + delta)| - |R(t - delta)|) / |R(t)|

where ``R(t + delta)`` is the component containing ``R`` at the higher
level (clamped to 255) and ``R(t - delta)`` is the component containing
the seed at the lower level, empty if the seed is brighter than that.
A region is kept when ``q(t) <= max_variation``, ``q(t)`` is strictly
below ``q`` at ``t - 1`` (the seed's component; infinite if absent) and no
larger than ``q`` at ``t + 1`` (the enclosing component; infinite past 255),
and its area lies in ``[min_area, max_area]``. The whole image is never
a region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image_core import check_gray


@dataclass(frozen=True)
class MserParams:
    delta: int = 5
    min_area: int | None = None
    max_area: int | None = None
    max_variation: float = 0.5
    min_area_frac: float = 0.001
    max_area_frac: float = 0.25

    def area_bounds(self, n_pixels: int) -> tuple[int, int]:
        lo = self.min_area if self.min_area is not None else max(1, math.ceil(self.min_area_frac * n_pixels))
        hi = self.max_area if self.max_area is not None else int(self.max_area_frac * n_pixels)
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if not 0 < lo < hi <= n_pixels:
            raise ValueError(f"need 0 < min_area < max_area <= {n_pixels}, got {lo}, {hi}")
        return lo, hi


@dataclass
class ExtremalRegion:
    pixels: np.ndarray   # flat indices, sorted
    size: int
    stability: float     # q at the level where the region is stable
    seed_level: int      # gray level of the darkest pixel
    level: int           # threshold at which stability was attained
    seed: int            # flat index of the darkest pixel


class ComponentTree:
    """Component tree of the lower level sets, built by Nister-Stewenius flooding.

    Node ``n`` is the pixel set of one component; it is the component at
    every threshold in ``[level[n], level[parent[n]] - 1]`` (up to 255 for
    the root).
    """

    def __init__(self, img: np.ndarray):
        img = np.asarray(img)
        self.shape = img.shape
        h, w = img.shape
        n_pix = h * w
        vals = img.ravel().tolist()
        self.values = vals

        level: list[int] = []
        area: list[int] = []
        parent: list[int] = []
        seedkey: list[int] = []
        own: list[list[int]] = []
        children: list[list[int]] = []

        def new_node(lv: int) -> int:
            level.append(lv)
            area.append(0)
            parent.append(-1)
            seedkey.append(1 << 62)
            own.append([])
            children.append([])
            return len(level) - 1

        def adopt(dst: int, src: int) -> None:
            parent[src] = dst
            children[dst].append(src)
            area[dst] += area[src]
            if seedkey[src] < seedkey[dst]:
                seedkey[dst] = seedkey[src]

        buckets: list[list[int]] = [[] for _ in range(256)]
        accessible = bytearray(n_pix)
        stack: list[int] = []

        cur = 0
        accessible[0] = 1
        cur_level = vals[0]
        edge = 0
        hmin = 256
        stack.append(new_node(cur_level))

        while True:
            # explore the remaining edges of the current pixel
            descended = False
            r, c = divmod(cur, w)
            while edge < 4:
                if edge == 0:
                    nb = cur + 1 if c + 1 < w else -1
                elif edge == 1:
                    nb = cur + w if r + 1 < h else -1
                elif edge == 2:
                    nb = cur - 1 if c > 0 else -1
                else:
                    nb = cur - w if r > 0 else -1
                edge += 1
                if nb < 0 or accessible[nb]:
                    continue
                accessible[nb] = 1
                nv = vals[nb]
                if nv >= cur_level:
                    buckets[nv].append(nb << 3)
                    if nv < hmin:
                        hmin = nv
                else:
                    buckets[cur_level].append((cur << 3) | edge)
                    if cur_level < hmin:
                        hmin = cur_level
                    cur, cur_level, edge = nb, nv, 0
                    stack.append(new_node(cur_level))
                    descended = True
                    break
            if descended:
                continue

            top = stack[-1]
            own[top].append(cur)
            area[top] += 1
            key = cur_level * n_pix + cur
            if key < seedkey[top]:
                seedkey[top] = key

            while hmin < 256 and not buckets[hmin]:
                hmin += 1
            if hmin == 256:
                break
            entry = buckets[hmin].pop()
            cur, edge = entry >> 3, entry & 7
            if hmin != cur_level:
                new_level = hmin
                # raise or merge components up to the new level
                while True:
                    top = stack.pop()
                    if not stack or new_level < level[stack[-1]]:
                        node = new_node(new_level)
                        adopt(node, top)
                        stack.append(node)
                        break
                    adopt(stack[-1], top)
                    if new_level <= level[stack[-1]]:
                        break
                cur_level = new_level

        while len(stack) > 1:
            top = stack.pop()
            adopt(stack[-1], top)

        self.level = level
        self.area = area
        self.parent = parent
        self.seedkey = seedkey
        self.own = own
        self.children = children
        self.root = stack[0]
        self.n_pixels = n_pix
        seedchild = [-1] * len(level)
        for n, kids in enumerate(children):
            sk = seedkey[n]
            for k in kids:
                if seedkey[k] == sk:
                    seedchild[n] = k
                    break
        self.seedchild = seedchild

    def top_level(self, n: int) -> int:
        p = self.parent[n]
        return 255 if p < 0 else self.level[p] - 1

    def area_up(self, n: int, u: int) -> int:
        """Area of the component containing node ``n`` at level ``u >= level[n]``."""
        parent, level = self.parent, self.level
        p = parent[n]
        while p >= 0 and level[p] <= u:
            n = p
            p = parent[n]
        return self.area[n]

    def area_down(self, n: int, u: int) -> int:
        """Area of the component holding ``n``'s seed at level ``u``; 0 if none."""
        level, seedchild = self.level, self.seedchild
        while n >= 0 and level[n] > u:
            n = seedchild[n]
        return self.area[n] if n >= 0 else 0

    def variation(self, n: int, t: int, delta: int) -> float:
        hi = self.area_up(n, min(t + delta, 255))
        lo = self.area_down(n, t - delta)
        return (hi - lo) / self.area[n]

    def pixels(self, n: int) -> np.ndarray:
        out: list[int] = []
        todo = [n]
        while todo:
            m = todo.pop()
            out.extend(self.own[m])
            todo.extend(self.children[m])
        return np.sort(np.asarray(out, dtype=np.int64))


def _stable_level(tree: ComponentTree, n: int, delta: int, max_var: float) -> tuple[int, float] | None:
    lo, hi = tree.level[n], tree.top_level(n)
    q = [tree.variation(n, t, delta) for t in range(lo, hi + 1)]
    sc = tree.seedchild[n]
    before = tree.variation(sc, lo - 1, delta) if sc >= 0 else math.inf
    p = tree.parent[n]
    after = tree.variation(p, hi + 1, delta) if p >= 0 and hi < 255 else math.inf
    for i, qt in enumerate(q):
        if qt > max_var:
            continue
        pred = q[i - 1] if i > 0 else before
        succ = q[i + 1] if i + 1 < len(q) else after
        if qt < pred and qt <= succ:
            return lo + i, qt
    return None


def detect_dark_regions(img: np.ndarray, params: MserParams | None = None) -> list[ExtremalRegion]:
    """Maximally stable dark regions of ``img``, sorted by seed level then size."""
    params = params or MserParams()
    img = check_gray(img)
    n_pix = img.size
    min_area, max_area = params.area_bounds(n_pix)
    if img.min() == img.max():
        return []
    tree = ComponentTree(img)
    regions = []
    for n in range(len(tree.level)):
        a = tree.area[n]
        if n == tree.root or a < min_area or a > max_area:
            continue
        found = _stable_level(tree, n, params.delta, params.max_variation)
        if found is None:
            continue
        t, q = found
        seed = tree.seedkey[n] % n_pix
        regions.append(ExtremalRegion(
            pixels=tree.pixels(n), size=a, stability=q,
            seed_level=tree.values[seed], level=t, seed=seed,
        ))
    regions.sort(key=lambda r: (r.seed_level, r.size, r.seed))
    return regions
