"""Parent-pointer forest supporting link, cut and tree-path queries.

Used to keep the flow support acyclic without rescanning the whole support
graph each time an edge appears.  Every operation costs O(depth) of the
trees involved; no balancing is attempted.
"""

from __future__ import annotations

from typing import Hashable


class DynamicForest:
    def __init__(self) -> None:
        self.parent: dict[Hashable, Hashable | None] = {}

    def __contains__(self, x: Hashable) -> bool:
        return x in self.parent

    def n_edges(self) -> int:
        return sum(1 for p in self.parent.values() if p is not None)

    def root(self, x: Hashable) -> Hashable:
        parent = self.parent
        p = parent.get(x)
        while p is not None:
            x = p
            p = parent.get(x)
        return x

    def path(self, x: Hashable, y: Hashable) -> list[Hashable] | None:
        """Tree path ``[x, ..., y]`` or ``None`` if they lie in different trees."""
        parent = self.parent
        up_x = [x]
        pos = {x: 0}
        p = parent.get(x)
        while p is not None:
            pos[p] = len(up_x)
            up_x.append(p)
            p = parent.get(p)
        up_y = []
        z = y
        while z not in pos:
            up_y.append(z)
            z = parent.get(z)
            if z is None:
                return None
        path = up_x[: pos[z] + 1]
        path.extend(reversed(up_y))
        return path

    def evert(self, x: Hashable) -> None:
        """Make ``x`` the root of its tree."""
        parent = self.parent
        prev = None
        cur: Hashable | None = x
        while cur is not None:
            nxt = parent.get(cur)
            parent[cur] = prev
            prev, cur = cur, nxt

    def link(self, x: Hashable, y: Hashable) -> None:
        """Join the trees of ``x`` and ``y`` with edge ``x-y`` (caller ensures distinct trees)."""
        self.parent.setdefault(y, None)
        self.evert(x)
        self.parent[x] = y

    def cut(self, x: Hashable, y: Hashable) -> None:
        parent = self.parent
        if parent.get(x) == y:
            parent[x] = None
        elif parent.get(y) == x:
            parent[y] = None
        else:
            raise KeyError(f"{x!r}-{y!r} is not a forest edge")

    def has_edge(self, x: Hashable, y: Hashable) -> bool:
        parent = self.parent
        return parent.get(x) == y or parent.get(y) == x
