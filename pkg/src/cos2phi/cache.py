"""Content-addressed store of diagonalization results.

Keys hash the full problem description (circuit parameters, bias,
truncation, solver knobs), so identical physics never diagonalizes twice
regardless of which config asked for it.  Hit and miss counts feed the run
log for idempotence checks.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .eigensolver import EigenSolution
from .model import BasisTruncation, BiasPoint, CircuitParams

__all__ = ["SolutionCache"]


def _problem_key(
    params: CircuitParams,
    bias: BiasPoint,
    trunc: BasisTruncation,
    k: int,
    seed: int,
    dense_threshold,
) -> str:
    payload = json.dumps(
        {
            "p": [params.eps_J, params.eps_C, params.eps_L, params.x,
                  params.delta_J, params.delta_C, params.delta_A, params.delta_L],
            "b": [bias.phi_ext, bias.N_g],
            "t": trunc.as_tuple(),
            "k": k,
            "seed": seed,
            "dense_threshold": dense_threshold,
            "v": 1,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


class SolutionCache:
    """Directory of serialized eigen-solutions, addressed by problem hash."""

    def __init__(self, root: str | Path, enabled: bool = True):
        self.root = Path(root)
        self.enabled = enabled
        self.hits = 0
        self.misses = 0
        if enabled:
            self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.npz"

    def load(self, key: str) -> EigenSolution | None:
        path = self._path(key)
        if not self.enabled or not path.exists():
            return None
        data = np.load(path, allow_pickle=False)
        meta = json.loads(str(data["meta_json"]))
        return EigenSolution(
            energies=data["energies"],
            vectors=data["vectors"],
            residuals=data["residuals"],
            fingerprint=str(data["fingerprint"]),
            meta=meta,
        )

    def store(self, key: str, sol: EigenSolution) -> None:
        if not self.enabled:
            return
        np.savez_compressed(
            self._path(key),
            energies=sol.energies,
            vectors=sol.vectors,
            residuals=sol.residuals,
            fingerprint=np.str_(sol.fingerprint),
            meta_json=np.str_(json.dumps(sol.meta, sort_keys=True, default=str)),
        )

    def get_or_solve(
        self,
        params: CircuitParams,
        bias: BiasPoint,
        trunc: BasisTruncation,
        k: int,
        seed: int = 7,
        dense_threshold=None,
    ):
        """LabeledSolution via the cache; labels are recomputed on load."""
        from .analysis import LabeledSolution, label_states, solve_circuit
        from .model import build_primitives

        key = _problem_key(params, bias, trunc, k, seed, dense_threshold)
        sol = self.load(key)
        if sol is not None:
            prim = build_primitives(trunc, params)
            if prim.fingerprint == sol.fingerprint:
                self.hits += 1
                labels = label_states(sol, bias, prim)
                return LabeledSolution(
                    solution=sol, labels=labels, primitives=prim,
                    params=params, bias=bias,
                )
        self.misses += 1
        ls = solve_circuit(
            params, bias, trunc, k=k, dense_threshold=dense_threshold, seed=seed
        )
        self.store(key, ls.solution)
        return ls
