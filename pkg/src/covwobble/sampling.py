"""Exact synthesis of the assembled vector process and Monte Carlo checks.

Building blocks are scalar stationary Gaussian sequences drawn by circulant
embedding of their autocovariance tables, which reproduces the prescribed
finite-sample autocovariances exactly (up to reported eigenvalue clipping).
The vector process combines the blocks through the square roots of the
lattice matrices and the corrector directions; all streams are independent
by construction of their seed lineage.

Seed lineage: a Philox counter key is derived from (master seed, block
index, replicate), so replicates are reproducible bit for bit and parallel
evaluation order cannot change results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EmbeddingFailureError
from .matrices import matrix_power
from .recursion import ConstructionResult, function_keys
from .spectral import AutocovarianceTable, ExpFejerTable

#: tolerance for negative circulant eigenvalues before padding kicks in
TOL_EMBED = 1e-12

#: largest circulant size tried while padding
EMBED_CAP = 2 ** 24

#: relative clipped eigenvalue mass that still counts as success
CLIP_LIMIT = 1e-6

#: autocovariance tables are truncated where |r[k]| drops below this * r[0]
TABLE_TRUNC = 1e-12

_BERNOULLI_BLOCK = 1 << 23  # reserved block index for the non-Gaussian noise


def _philox(master_seed: int, block_index: int, replicate: int) -> np.random.Generator:
    if not 0 <= block_index <= _BERNOULLI_BLOCK:
        raise ConfigurationError(f"block index out of range: {block_index}")
    # the key must be a uint64 array: a plain int list would round-trip
    # through float64 and lose the replicate bits
    key = np.array(
        [master_seed & (2 ** 64 - 1), (block_index << 40) + replicate],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def truncate_table(table: AutocovarianceTable) -> AutocovarianceTable:
    """Drop the geometric tail below TABLE_TRUNC * r[0]."""
    r = table.r
    keep = np.nonzero(np.abs(r) >= TABLE_TRUNC * r[0])[0]
    k = int(keep[-1]) if keep.size else 0
    return AutocovarianceTable(r[: k + 1])


class CirculantEmbedding:
    """Reusable sampler for one autocovariance table and path length.

    The even circulant built from the padded table has the spectral density
    values as eigenvalues; slightly negative ones (roundoff) are clipped at
    zero and their relative mass recorded in ``clipped_mass``.
    """

    def __init__(self, table: AutocovarianceTable, length: int):
        if length < 1:
            raise ConfigurationError(f"path length must be >= 1, got {length}")
        self.length = length
        r = table.r
        kmax = table.kmax
        size = 1
        while size < 2 * (length + kmax):
            size *= 2
        while True:
            col = np.zeros(size)
            col[: kmax + 1] = r
            if kmax:
                col[size - kmax:] = r[1:][::-1]
            eig = np.fft.fft(col).real
            neg = eig < -TOL_EMBED * r[0]
            if not neg.any() or size >= EMBED_CAP:
                break
            size *= 2
        clipped = float(-np.sum(np.minimum(eig, 0.0)) / size)
        if clipped > CLIP_LIMIT * r[0]:
            raise EmbeddingFailureError(
                f"circulant embedding stayed indefinite at size {size}: "
                f"clipped mass {clipped:g} vs r0 {r[0]:g}"
            )
        self.size = size
        self.clipped_mass = clipped
        self._sqrt_eig = np.sqrt(np.maximum(eig, 0.0))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.size) + 1j * rng.standard_normal(self.size)
        path = np.fft.fft(self._sqrt_eig * z) / np.sqrt(self.size)
        return path.real[: self.length]


def sample_block(table: AutocovarianceTable, length: int, master_seed: int,
                 block_index: int = 0, replicate: int = 0) -> np.ndarray:
    """One centered stationary Gaussian path with the table's autocovariance."""
    emb = CirculantEmbedding(truncate_table(table), length)
    return emb.sample(_philox(master_seed, block_index, replicate))


@dataclass(frozen=True, eq=False)
class ProcessSpec:
    """Everything needed to draw the assembled vector process."""

    basis: object
    sqrt_q1: tuple
    block_keys: tuple      # ("q1", ell, p) | ("q2", u) | ("q3", u, v)
    tables: dict           # function key -> AutocovarianceTable
    m: int

    def table_for_block(self, block_key) -> AutocovarianceTable:
        if block_key[0] == "q1":
            return self.tables[("q1", block_key[1])]
        return self.tables[block_key]


def process_spec(result: ConstructionResult, kmax: int | None = None) -> ProcessSpec:
    """Build the sampler specification from a finished construction.

    Tables come from the depth-R densities; ``kmax`` defaults to the point
    where the geometric tail falls below the truncation threshold.
    """
    basis = result.basis
    grid = result.cfg.grid
    m = basis.m
    funcs = result.functions()
    tables = {}
    for key in function_keys(basis):
        full = ExpFejerTable(funcs[key], grid).autocov(grid.size // 4)
        tables[key] = truncate_table(full) if kmax is None else AutocovarianceTable(
            full.r[: kmax + 1]
        )
    block_keys = [("q1", ell, p) for ell in range(basis.L) for p in range(m)]
    block_keys += [("q2", u) for u in range(m)]
    block_keys += [("q3", u, v) for u, v in basis.pairs]
    sqrt_q1 = tuple(matrix_power(q, 0.5) for q in basis.q1)
    return ProcessSpec(
        basis=basis,
        sqrt_q1=sqrt_q1,
        block_keys=tuple(block_keys),
        tables=tables,
        m=m,
    )


def assemble_path(spec: ProcessSpec, blocks: dict) -> np.ndarray:
    """Combine per-block scalar paths into the m x N vector path."""
    missing = [key for key in spec.block_keys if key not in blocks]
    if missing:
        raise ConfigurationError(f"missing block streams: {missing[:3]} ...")
    n = len(next(iter(blocks.values())))
    x = np.zeros((spec.m, n))
    for ell in range(spec.basis.L):
        stacked = np.vstack([blocks[("q1", ell, p)] for p in range(spec.m)])
        x += spec.sqrt_q1[ell] @ stacked
    for u in range(spec.m):
        x[u] += blocks[("q2", u)]
    for u, v in spec.basis.pairs:
        w = blocks[("q3", u, v)]
        x[u] += w
        x[v] += w
    return x


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Replicated vector paths with their seed lineage."""

    master_seed: int
    paths: np.ndarray  # (replicates, m, N)

    @property
    def replicates(self) -> int:
        return self.paths.shape[0]


def embedding_diagnostics(spec: ProcessSpec, length: int) -> dict:
    """Embedding size and clipped eigenvalue mass per block stream."""
    out = {}
    for key in spec.block_keys:
        emb = CirculantEmbedding(spec.table_for_block(key), length)
        out[":".join(str(k) for k in key)] = {
            "size": emb.size,
            "clipped_mass": emb.clipped_mass,
        }
    return out


def sample_paths(spec: ProcessSpec, length: int, replicates: int,
                 master_seed: int) -> PathBatch:
    """Draw independent replicates of the assembled process."""
    embeddings = {
        key: CirculantEmbedding(spec.table_for_block(key), length)
        for key in spec.block_keys
    }
    out = np.empty((replicates, spec.m, length))
    for rep in range(replicates):
        blocks = {
            key: embeddings[key].sample(_philox(master_seed, idx, rep))
            for idx, key in enumerate(spec.block_keys)
        }
        out[rep] = assemble_path(spec, blocks)
    return PathBatch(master_seed=master_seed, paths=out)


def normalized_sums(batch: PathBatch) -> np.ndarray:
    """Per replicate, the block sum scaled by the square root of the length."""
    n = batch.paths.shape[2]
    return batch.paths.sum(axis=2) / np.sqrt(n)


def empirical_partial_sum_cov(spec: ProcessSpec, length: int, replicates: int,
                              master_seed: int):
    """Sample covariance of the normalized block sums and its standard errors.

    The process is centered by construction, so the covariance is the plain
    second moment; the standard error of each entry is the replicate spread
    of the products divided by sqrt(replicates).
    """
    if replicates < 100:
        raise ConfigurationError(f"need at least 100 replicates, got {replicates}")
    sums = normalized_sums(sample_paths(spec, length, replicates, master_seed))
    prods = np.einsum("ri,rj->rij", sums, sums)
    cov = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / np.sqrt(replicates)
    return cov, se


def add_bernoulli_perturbation(path: np.ndarray, eps: float,
                               master_seed: int, replicate: int = 0) -> np.ndarray:
    """Add iid +-sqrt(eps) noise to every coordinate and time point.

    The result is strictly stationary and non-Gaussian; normalized block-sum
    covariances shift by exactly eps times the identity.
    """
    if eps <= 0.0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    rng = _philox(master_seed, _BERNOULLI_BLOCK, replicate)
    signs = 2.0 * rng.integers(0, 2, size=path.shape) - 1.0
    return path + np.sqrt(eps) * signs


@dataclass(frozen=True)
class NormalityReport:
    stats: dict
    passed: bool


def normality_diagnostic(samples: np.ndarray, threshold: float = 4.0) -> NormalityReport:
    """Moment diagnostics of whitened sums against the standard normal.

    ``samples`` holds one whitened m-vector per row.  Means, variances,
    skewnesses, excess kurtoses, and pairwise correlations must each stay
    within ``threshold`` Monte Carlo standard errors of (0, 1, 0, 0, 0).
    """
    k, m = samples.shape
    se_mean = 1.0 / np.sqrt(k)
    se_var = np.sqrt(2.0 / k)
    se_skew = np.sqrt(6.0 / k)
    se_kurt = np.sqrt(24.0 / k)
    stats: dict = {"replicates": k}
    passed = True
    for i in range(m):
        x = samples[:, i]
        mean = float(x.mean())
        var = float(x.var(ddof=1))
        sd = np.sqrt(var)
        skew = float(np.mean(((x - mean) / sd) ** 3))
        kurt = float(np.mean(((x - mean) / sd) ** 4) - 3.0)
        entry = {
            "mean": (mean, threshold * se_mean),
            "variance": (var - 1.0, threshold * se_var),
            "skewness": (skew, threshold * se_skew),
            "excess_kurtosis": (kurt, threshold * se_kurt),
        }
        stats[f"coord_{i}"] = entry
        passed &= all(abs(v) <= b for v, b in entry.values())
    for i in range(m):
        for j in range(i + 1, m):
            corr = float(
                np.corrcoef(samples[:, i], samples[:, j])[0, 1]
            )
            stats[f"corr_{i}{j}"] = (corr, threshold * se_mean)
            passed &= abs(corr) <= threshold * se_mean
    return NormalityReport(stats=stats, passed=bool(passed))


def whitened_sums(batch: PathBatch, cov: np.ndarray) -> np.ndarray:
    """Apply the inverse square root of ``cov`` to every normalized sum."""
    w = matrix_power(cov, -0.5)
    return normalized_sums(batch) @ w.T
