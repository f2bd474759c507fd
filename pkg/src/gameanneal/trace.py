"""Run traces: per-iteration records with CSV and metadata serialization."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_fingerprint(config_dict: dict) -> str:
    """Stable 12-hex-digit digest of a configuration dictionary."""
    return hashlib.sha256(canonical_json(config_dict).encode()).hexdigest()[:12]


def _cell(vec) -> str:
    # repr gives the shortest round-trip decimal, so identical runs emit
    # byte-identical files; d > 1 components are ';'-joined in one cell.
    vals = np.atleast_1d(vec)
    return ";".join(repr(float(t)) for t in vals)


@dataclass
class RunTrace:
    """Thinned per-iteration history of one run.

    Row k holds the state entering iteration k together with the mixing
    output s^k computed during that iteration, so (x^k, s^k, xbar^k) are
    index-aligned.  `final_x`/`final_v` carry the post-run state x^{T+1}.
    """

    ks: Array                 # (m,) recorded iteration indices, strictly increasing
    x: Array                  # (m, n, d)
    v: Array                  # (m, n, d)
    s: Array                  # (m, n, d)
    xbar: Array               # (m, d)
    consensus: Array          # (m, n)  ||s_i - xbar||
    social_cost: Array        # (m,)
    final_x: Array            # (n, d)
    final_v: Array            # (n, d)
    config: dict = field(default_factory=dict)
    fingerprint: str = ""
    seeds: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.ks) <= 0):
            raise ValueError("recorded iterations must be strictly increasing")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def d(self) -> int:
        return self.x.shape[2]

    def tail_slice(self, fraction: float = 0.1) -> slice:
        """Index slice of the last `fraction` of recorded rows (at least one)."""
        m = len(self.ks)
        start = min(m - 1, m - max(1, int(round(fraction * m))))
        return slice(start, m)

    def tail_average_x(self, fraction: float = 0.1) -> Array:
        """Mean of x over the tail window, flattened to length n*d."""
        sl = self.tail_slice(fraction)
        return self.x[sl].mean(axis=0).reshape(-1)

    def tail_mean_cost(self, fraction: float = 0.1) -> float:
        return float(self.social_cost[self.tail_slice(fraction)].mean())

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("k,agent,x,v,s,xbar,consensus_err,social_cost\n")
            for r, k in enumerate(self.ks):
                xb = _cell(self.xbar[r])
                cost = repr(float(self.social_cost[r]))
                for i in range(self.n):
                    fh.write(
                        f"{int(k)},{i},{_cell(self.x[r, i])},{_cell(self.v[r, i])},"
                        f"{_cell(self.s[r, i])},{xb},{repr(float(self.consensus[r, i]))},{cost}\n"
                    )

    def metadata(self) -> dict:
        return {
            "config": self.config,
            "fingerprint": self.fingerprint,
            "seeds": self.seeds,
            "recorded_rows": int(len(self.ks)),
            "final_x": [float(t) for t in self.final_x.reshape(-1)],
        }

    def write_metadata(self, path):
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")
