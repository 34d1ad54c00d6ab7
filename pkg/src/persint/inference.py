"""Two-sample testing on intensity grids and empirical rate studies.

The test statistic is the L1 distance between the two groups' average
intensities. Its null distribution comes from seeded permutations of the
pooled grids; the p-value uses the add-one convention and so never reports
zero. The studies (power sweep, bandwidth/respondent-count rates, pointwise
normality) re-run the full pipeline under controlled seeds and summarize
the outcome.

Permutation protocol: the pooled grids are put into a canonical order
(sorted by their value bytes) and each permutation assigns the first
min(n1, n2) slots to one group. With the statistic symmetric in its
arguments, the reported p-value is therefore invariant to swapping the two
input groups under the same seed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateStatisticError,
    InvalidInputError,
    InvalidParameterError,
    StageError,
)
from .field import GridSpec, kde_grid
from .intensity import (
    DEFAULT_WEIGHTS,
    _smooth_points,
    average_intensity,
    default_intensity_spec,
    intensity_at,
    pair_weights,
    smooth_diagram,
)
from .analyze import l1_distance
from .persistence import PersistenceDiagram, PersistencePair, compute_persistence
from .seeding import child_seed, exponential, gauss_pair, make_rng, pick_index, poisson
from .synth import generate_population


@dataclass(frozen=True)
class TestResult:
    """Permutation two-sample test outcome."""

    statistic: float
    p_value: float
    permutations: int
    seed: int
    n1: int
    n2: int
    null_stats: tuple = ()  # permuted statistics, kept only on request

    def to_dict(self):
        return {
            "T1": self.statistic,
            "p": self.p_value,
            "B": self.permutations,
            "seed": self.seed,
            "n1": self.n1,
            "n2": self.n2,
        }


@dataclass(frozen=True)
class PowerCurve:
    """Rejection rates over a contamination sweep, per significance level."""

    q_values: tuple
    alphas: tuple
    rates: tuple  # rates[a][qi] for alphas[a]
    trials: int
    records: tuple = ()  # (q, trial, statistic, p) per trial


@dataclass(frozen=True)
class MiseCurve:
    """Empirical integrated squared error against a high-count reference."""

    n_values: tuple
    tau_values: tuple
    mise: tuple
    tau_rule: str
    slope: float | None


@dataclass(frozen=True)
class NormalityResult:
    """Kolmogorov-Smirnov distance of standardized replicates to N(0, 1)."""

    ks_distance: float
    reps: int
    n_diagrams: int
    node: tuple
    mean: float
    sd: float


@dataclass(frozen=True)
class BiasScaling:
    """L1 deviation of the smoothed intensity from a fine-bandwidth reference."""

    taus: tuple
    deviations: tuple
    tau_ref: float
    slope: float


def two_sample_statistic(group1, group2):
    """L1 distance between the two groups' average intensities."""
    group1, group2 = list(group1), list(group2)
    if not group1 or not group2:
        raise InvalidInputError("both groups must be nonempty")
    return l1_distance(average_intensity(group1), average_intensity(group2))


def _fisher_yates(rng, idx):
    for i in range(len(idx) - 1, 0, -1):
        j = pick_index(rng, i + 1)
        idx[i], idx[j] = idx[j], idx[i]


def permutation_test(group1, group2, B, seed, keep_null=False):
    """Two-sample permutation test of the L1 statistic.

    Pools the grids, relabels them B times under the seeded protocol
    described in the module docstring, and reports
    p = (1 + #{permuted >= observed}) / (B + 1). With ``keep_null`` the
    permuted statistics are returned on the result for diagnostics.
    """
    B = int(B)
    if B < 1:
        raise InvalidParameterError(f"need B >= 1 permutations, got {B}")
    group1, group2 = list(group1), list(group2)
    observed = two_sample_statistic(group1, group2)

    pooled = sorted(group1 + group2, key=lambda g: g.values.tobytes())
    stack = np.stack([g.values.ravel() for g in pooled])
    area = pooled[0].spec.cell_area
    n_small = min(len(group1), len(group2))

    rng = make_rng(seed)
    idx = list(range(len(pooled)))
    exceed = 0
    null_stats = []
    for _ in range(B):
        _fisher_yates(rng, idx)
        m1 = stack[idx[:n_small]].mean(axis=0)
        m2 = stack[idx[n_small:]].mean(axis=0)
        stat = float(np.abs(m1 - m2).sum() * area)
        if keep_null:
            null_stats.append(stat)
        if stat >= observed:
            exceed += 1
    return TestResult(
        statistic=observed,
        p_value=(1 + exceed) / (B + 1),
        permutations=B,
        seed=int(seed),
        n1=len(group1),
        n2=len(group2),
        null_stats=tuple(null_stats),
    )


def bootstrap_zscore(group1, group2, B, seed):
    """Observed statistic divided by its bootstrap standard deviation.

    Each group is resampled with replacement B times; zero bootstrap
    variance raises rather than returning NaN.
    """
    B = int(B)
    if B < 2:
        raise InvalidParameterError(f"need B >= 2 bootstrap draws, got {B}")
    group1, group2 = list(group1), list(group2)
    observed = two_sample_statistic(group1, group2)
    stack1 = np.stack([g.values.ravel() for g in group1])
    stack2 = np.stack([g.values.ravel() for g in group2])
    area = group1[0].spec.cell_area
    rng = make_rng(seed)
    stats = np.empty(B)
    for b in range(B):
        i1 = [pick_index(rng, len(group1)) for _ in range(len(group1))]
        i2 = [pick_index(rng, len(group2)) for _ in range(len(group2))]
        stats[b] = np.abs(stack1[i1].mean(axis=0) - stack2[i2].mean(axis=0)).sum() * area
    sd = float(stats.std(ddof=1))
    if sd == 0.0:
        raise DegenerateStatisticError("bootstrap variance of the statistic is zero")
    return float(observed / sd)


# ---------------------------------------------------------------------------
# Diagram sources: seeded callables seed -> PersistenceDiagram, used by the
# rate studies. Child-seed paths are documented at each call site.

_POPULATION_BOX = {
    "circle": (-1.3, 1.3, -1.3, 1.3),
    "three-circles": (-0.4, 1.9, -0.4, 0.9),
    "gauss3": (-0.6, 2.1, -0.6, 1.1),
    "uniform": (-1.0, 1.0, -1.0, 1.0),
    "contaminated": (-1.0, 1.0, -1.0, 1.0),
}


def population_field_spec(population, h, nx=64, ny=64):
    """Fixed KDE grid covering a named population's nominal support plus 4h."""
    box = _POPULATION_BOX.get(population)
    if box is None:
        raise InvalidParameterError(f"unknown population {population!r}")
    pad = 4.0 * h
    return GridSpec(box[0] - pad, box[1] + pad, box[2] - pad, box[3] + pad, nx, ny)


def field_diagram_source(
    population="uniform",
    n=60,
    h=0.25,
    q=0.0,
    spec=None,
    direction="superlevel",
    max_dim=0,
):
    """Diagram process: sample a cloud, estimate its density, take persistence."""
    if spec is None:
        spec = population_field_spec(population, h)

    def draw(seed):
        cloud = generate_population(population, n, seed, q=q)
        return compute_persistence(kde_grid(cloud, h, spec), direction, max_dim)

    return draw


def synthetic_diagram_source(mean_pairs=8.0, birth_center=0.4, birth_sd=0.1, life_mean=0.15, dim=0):
    """Direct diagram process: Poisson pair count, Gaussian births,
    exponential lifetimes. Cheap enough for many-replicate studies."""

    def draw(seed):
        rng = make_rng(seed)
        count = poisson(rng, mean_pairs)
        pairs = []
        for _ in range(count):
            g, _unused = gauss_pair(rng)
            birth = birth_center + birth_sd * g
            pairs.append(PersistencePair(dim, birth, birth + exponential(rng, life_mean)))
        pairs.sort(key=lambda p: (p.dim, p.birth, p.death))
        return PersistenceDiagram(pairs=pairs, direction="superlevel")

    return draw


# ---------------------------------------------------------------------------
# Studies


def _map_ordered(fn, args_list, threads):
    if threads <= 1:
        return [fn(*a) for a in args_list]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda a: fn(*a), args_list))


def power_trial(q, n, N, h, tau, B, trial_seed, field_spec, intensity_nx, intensity_ny):
    """One full two-sample pipeline: clouds -> KDE -> persistence -> intensity
    -> permutation test. Group 1 is the plain uniform square, group 2 the
    contaminated mixture."""
    diagrams1 = []
    diagrams2 = []
    for i in range(N):
        c1 = generate_population("uniform", n, child_seed(trial_seed, 0, i))
        diagrams1.append(compute_persistence(kde_grid(c1, h, field_spec), "superlevel", 0))
        c2 = generate_population("contaminated", n, child_seed(trial_seed, 1, i), q=q)
        diagrams2.append(compute_persistence(kde_grid(c2, h, field_spec), "superlevel", 0))
    ispec = default_intensity_spec(diagrams1 + diagrams2, tau, intensity_nx, intensity_ny)
    grids1 = [smooth_diagram(d, tau, spec=ispec) for d in diagrams1]
    grids2 = [smooth_diagram(d, tau, spec=ispec) for d in diagrams2]
    return permutation_test(grids1, grids2, B, child_seed(trial_seed, 2))


def power_study(
    q_values,
    n,
    N,
    h,
    tau,
    B,
    trials,
    seed,
    alphas=(0.05, 0.01),
    field_grid=(64, 64),
    intensity_grid=(64, 64),
    threads=1,
):
    """Rejection rate of the permutation test across a contamination sweep.

    Trial seeds are pre-split as child_seed(seed, 40, q_index, trial), so
    results do not depend on scheduling. Intensity grids are shared within
    a trial; permutations relabel the computed grids.
    """
    q_values = tuple(float(q) for q in q_values)
    for q in q_values:
        if not 0.0 <= q <= 1.0:
            raise InvalidParameterError(f"q must be in [0, 1], got {q}")
    if trials < 1:
        raise InvalidParameterError(f"need trials >= 1, got {trials}")
    field_spec = population_field_spec("uniform", h, *field_grid)

    def one(qi, q, t):
        trial_seed = child_seed(seed, 40, qi, t)
        try:
            return power_trial(q, n, N, h, tau, B, trial_seed, field_spec, *intensity_grid)
        except Exception as exc:  # noqa: BLE001 - annotate with sweep context
            raise StageError("power-trial", {"q": q, "trial": t}, exc) from exc

    records = []
    rates = [[0.0] * len(q_values) for _ in alphas]
    for qi, q in enumerate(q_values):
        results = _map_ordered(one, [(qi, q, t) for t in range(trials)], threads)
        for t, res in enumerate(results):
            records.append((q, t, res.statistic, res.p_value))
        for a, alpha in enumerate(alphas):
            rates[a][qi] = sum(1 for r in results if r.p_value <= alpha) / trials
    return PowerCurve(
        q_values=q_values,
        alphas=tuple(alphas),
        rates=tuple(tuple(r) for r in rates),
        trials=trials,
        records=tuple(records),
    )


def loglog_slope(xs, ys):
    """Least-squares slope of log(ys) against log(xs)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise InvalidInputError("log-log slope needs strictly positive values")
    lx = np.log(xs)
    ly = np.log(ys)
    lx = lx - lx.mean()
    return float((lx * (ly - ly.mean())).sum() / (lx * lx).sum())


def mise_study(
    source,
    n_values,
    tau_scale,
    reps,
    seed,
    n_ref=None,
    tau_ref=None,
    grid=(64, 64),
    pad_factor=4.0,
):
    """Integrated squared error of the N-averaged intensity vs a reference.

    For each N in the sweep, tau follows the rule tau = tau_scale * N^(-1/6).
    The reference intensity averages ``n_ref`` diagrams (default 20x the
    largest N) at ``tau_ref`` (default half the smallest sweep tau); it
    approximates the unknown population intensity. Repetition seeds are
    pre-split, so the result is independent of evaluation order.
    """
    n_values = tuple(int(v) for v in n_values)
    if not n_values or any(v < 1 for v in n_values):
        raise InvalidParameterError(f"n_values must be positive, got {n_values}")
    if reps < 1:
        raise InvalidParameterError(f"need reps >= 1, got {reps}")
    if not tau_scale > 0:
        raise InvalidParameterError(f"tau_scale must be > 0, got {tau_scale}")
    taus = tuple(tau_scale * v ** (-1.0 / 6.0) for v in n_values)
    if n_ref is None:
        n_ref = 20 * max(n_values)
    if n_ref <= max(n_values):
        raise InvalidParameterError(
            f"reference count n_ref={n_ref} must exceed the largest sweep N={max(n_values)}"
        )
    if tau_ref is None:
        tau_ref = 0.5 * min(taus)

    # Reference seeds: child_seed(seed, 0, i); sweep: child_seed(seed, 1, N_index, rep, i).
    ref_diagrams = [source(child_seed(seed, 0, i)) for i in range(n_ref)]
    spec = default_intensity_spec(ref_diagrams, max(taus), *grid, pad_factor=pad_factor)
    ref = np.zeros((spec.nx, spec.ny))
    for d in ref_diagrams:
        ref += smooth_diagram(d, tau_ref, spec=spec).values
    ref /= n_ref

    area = spec.cell_area
    mise = []
    for ni, n_diag in enumerate(n_values):
        tau = taus[ni]
        total = 0.0
        for rep in range(reps):
            acc = np.zeros_like(ref)
            for i in range(n_diag):
                d = source(child_seed(seed, 1, ni, rep, i))
                acc += smooth_diagram(d, tau, spec=spec).values
            acc /= n_diag
            total += float(((acc - ref) ** 2).sum() * area)
        mise.append(total / reps)

    slope = loglog_slope(n_values, mise) if len(n_values) >= 2 else None
    return MiseCurve(
        n_values=n_values,
        tau_values=taus,
        mise=tuple(mise),
        tau_rule=f"tau = {tau_scale} * N^(-1/6); tau_ref = {tau_ref}, n_ref = {n_ref}",
        slope=slope,
    )


def tau_mise_sweep(source, n_diagrams, taus, reps, seed, n_ref, tau_ref, grid=(64, 64)):
    """Integrated squared error vs reference across bandwidths at fixed N.

    Companion to :func:`mise_study` for scanning the bias-variance
    trade-off in tau directly.
    """
    taus = tuple(float(t) for t in taus)
    ref_diagrams = [source(child_seed(seed, 0, i)) for i in range(n_ref)]
    spec = default_intensity_spec(ref_diagrams, max(taus), *grid)
    ref = np.zeros((spec.nx, spec.ny))
    for d in ref_diagrams:
        ref += smooth_diagram(d, tau_ref, spec=spec).values
    ref /= n_ref
    area = spec.cell_area
    # The same diagrams are reused across taus (paired comparison), so the
    # curve shape reflects the bandwidth alone.
    rep_diagrams = [
        [source(child_seed(seed, 1, rep, i)) for i in range(n_diagrams)] for rep in range(reps)
    ]
    out = []
    for tau in taus:
        total = 0.0
        for rep in range(reps):
            acc = np.zeros_like(ref)
            for d in rep_diagrams[rep]:
                acc += smooth_diagram(d, tau, spec=spec).values
            acc /= n_diagrams
            total += float(((acc - ref) ** 2).sum() * area)
        out.append(total / reps)
    return out


def std_normal_cdf(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def ks_distance_to_normal(sample):
    """Kolmogorov-Smirnov distance of a sample to the standard normal CDF."""
    z = np.sort(np.asarray(sample, dtype=np.float64))
    n = z.size
    if n == 0:
        raise InvalidInputError("empty sample")
    cdf = np.array([std_normal_cdf(v) for v in z])
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))


def normality_check(source, N, tau, node, reps, seed):
    """Distribution check of the N-averaged intensity at one fixed node.

    Simulates ``reps`` independent copies of the average intensity value at
    ``node``, standardizes them by their empirical mean/sd, and reports the
    KS distance to the standard normal.
    """
    if reps < 100:
        raise InvalidParameterError(f"need reps >= 100, got {reps}")
    pt = np.asarray([node], dtype=np.float64)
    vals = np.empty(reps)
    for r in range(reps):
        acc = 0.0
        for i in range(N):
            # replicate seeds: child_seed(seed, r, i)
            acc += float(intensity_at(source(child_seed(seed, r, i)), tau, pt)[0])
        vals[r] = acc / N
    mean = float(vals.mean())
    sd = float(vals.std(ddof=1))
    if sd <= 1e-9 * abs(mean):
        raise DegenerateStatisticError("replicates have zero variance at the chosen node")
    ks = ks_distance_to_normal((vals - mean) / sd)
    return NormalityResult(
        ks_distance=ks, reps=reps, n_diagrams=N, node=tuple(node), mean=mean, sd=sd
    )


def bias_scaling_study(source, taus, tau_ref, num_diagrams, seed, grid=(256, 256), pad_factor=4.0):
    """L1 response of the averaged intensity to extra smoothing by tau.

    A fixed batch of diagrams is pooled into one weighted point set (the
    smoother is linear over diagrams) and its tau_ref smoothing serves as
    the reference intensity. Each sweep point smooths the same points at
    bandwidth sqrt(tau_ref^2 + tau^2); by the Gaussian semigroup this
    equals the reference convolved with a bandwidth-tau kernel, so sampling
    noise cancels identically and the L1 deviation isolates the smoothing
    bias, which scales as tau^2 for tau below the reference's feature
    scale. (Comparing against a much finer tau_ref directly would instead
    be dominated by sampling noise, which grows like 1/(tau_ref sqrt(M)).)
    """
    taus = tuple(sorted(float(t) for t in taus))
    if any(t <= 0 for t in taus) or len(set(taus)) != len(taus):
        raise InvalidParameterError(f"taus must be positive and distinct, got {taus}")
    if not tau_ref > 0:
        raise InvalidParameterError(f"tau_ref must be > 0, got {tau_ref}")
    diagrams = [source(child_seed(seed, i)) for i in range(num_diagrams)]
    births, deaths, weights = [], [], []
    for d in diagrams:
        _, b, dd = d.arrays()
        births.append(b)
        deaths.append(dd)
        weights.append(pair_weights(d, DEFAULT_WEIGHTS) / num_diagrams)
    births = np.concatenate(births)
    deaths = np.concatenate(deaths)
    weights = np.concatenate(weights)
    if births.size == 0:
        raise InvalidInputError("diagram process produced no pairs")
    pad = pad_factor * math.hypot(max(taus), tau_ref)
    spec = GridSpec(
        births.min() - pad, births.max() + pad, deaths.min() - pad, deaths.max() + pad, *grid
    )
    ref = _smooth_points(births, deaths, weights, tau_ref, spec)
    area = spec.cell_area
    deviations = []
    for tau in taus:
        vals = _smooth_points(births, deaths, weights, math.hypot(tau_ref, tau), spec)
        deviations.append(float(np.abs(vals - ref).sum() * area))
    return BiasScaling(
        taus=taus,
        deviations=tuple(deviations),
        tau_ref=float(tau_ref),
        slope=loglog_slope(taus, deviations),
    )


def rank_values(values):
    """Ranks with ties averaged, 1-based."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys):
    """Spearman rank correlation; 0.0 when either sequence is constant."""
    rx = rank_values(xs)
    ry = rank_values(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float((rx**2).sum() * (ry**2).sum()))
    if denom == 0.0:
        return 0.0
    return float((rx * ry).sum() / denom)
