"""Mixture-size bookkeeping shared by the decoder and density evolution.

Tracks how many components the messages have at the points where pairwise
combines happen (each combine of two M-component inputs forms an M^2-size
intermediate, so input sizes are the complexity driver) and the sizes of the
pre-periodization check outputs.
"""

from __future__ import annotations

from collections import Counter


class MessageStats:
    """Accumulates component-count observations.

    Keys are (kind, label, iteration, m) where kind is "combine" (an input to
    a variable-node product step) or "rho_tilde" (a check-node output before
    shift-and-repeat), label is the 1-based coefficient label, and m the
    component count.  E[M^4] is maintained as a running sum over "combine"
    observations.
    """

    __slots__ = ("counts", "iteration", "_m4_sum", "_m4_n")

    def __init__(self):
        self.counts: Counter = Counter()
        self.iteration = 0
        self._m4_sum = 0.0
        self._m4_n = 0

    def combine(self, label: int, m: int) -> None:
        self.counts[("combine", label, self.iteration, m)] += 1
        self._m4_sum += float(m) ** 4
        self._m4_n += 1

    def rho_tilde(self, label: int, m: int) -> None:
        self.counts[("rho_tilde", label, self.iteration, m)] += 1

    def e_m4(self) -> float:
        """Mean of M^4 over all combine-step inputs recorded so far."""
        if self._m4_n == 0:
            return float("nan")
        return self._m4_sum / self._m4_n

    def histogram(self, kind: str = "combine", label: int | None = None,
                  iteration: int | None = None) -> dict[int, int]:
        """Histogram {m: count} filtered by kind and optionally label/iteration."""
        out: dict[int, int] = {}
        for (k, lab, it, m), cnt in self.counts.items():
            if k != kind:
                continue
            if label is not None and lab != label:
                continue
            if iteration is not None and it != iteration:
                continue
            out[m] = out.get(m, 0) + cnt
        return dict(sorted(out.items()))

    def labels(self, kind: str = "combine") -> list[int]:
        return sorted({lab for (k, lab, _, _) in self.counts if k == kind})

    def merge(self, other: "MessageStats") -> None:
        self.counts.update(other.counts)
        self._m4_sum += other._m4_sum
        self._m4_n += other._m4_n

    def to_json_dict(self) -> dict:
        """JSON-friendly dump: nested {kind: {label: {iteration: {m: count}}}}."""
        tree: dict = {}
        for (k, lab, it, m), cnt in sorted(self.counts.items()):
            tree.setdefault(k, {}).setdefault(str(lab), {}).setdefault(str(it), {})[str(m)] = cnt
        return {"e_m4": self.e_m4() if self._m4_n else None, "counts": tree}
