"""Monte Carlo engine for the signal, price, filter, claims and wealth.

Paths are generated in fixed-size blocks. Every block draws from its own
Philox stream keyed by (seed, block index, purpose), so a given path sees
the same random numbers whatever the number of worker threads, and block
results are reduced in block order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from invreins.claims import sample_stream
from invreins.core import validate
from invreins.investment import _decay_integrals, theta_star_full
from invreins.valuation import Solution

BLOCK_PATHS = 1024
_NORMALS, _CLAIMS, _INITIAL, _FEYNMAN_KAC = 0, 1, 2, 3

SERIES = ("x", "pi", "err2", "y", "innovation", "theta", "theta_star", "theta_full", "gap", "wealth")


def block_rng(seed: int, block: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(block, purpose))
    return np.random.Generator(np.random.Philox(ss))


def _blocks(n_paths: int):
    return [(b, min(BLOCK_PATHS, n_paths - b * BLOCK_PATHS)) for b in range(math.ceil(n_paths / BLOCK_PATHS))]


def _run_blocks(fn, n_paths: int, workers: int):
    jobs = _blocks(n_paths)
    if workers <= 1 or len(jobs) == 1:
        return [fn(b, n) for b, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


@dataclass(frozen=True, eq=False)
class StrategySchedule:
    """Deterministic retention u(t) and affine holding theta_k = coef_k (s + offset_k).

    ``observes`` says which state s the holding uses: the filter mean 'pi'
    (admissible under partial information) or the true signal 'x'.
    """

    name: str
    grid: np.ndarray
    u: np.ndarray
    coef: np.ndarray
    offset: np.ndarray
    observes: str = "pi"
    u_of_t: object = None

    def retention_at(self, t):
        if self.u_of_t is not None:
            return self.u_of_t(t)
        return np.interp(t, self.grid, self.u)

    @classmethod
    def optimal(cls, sol: Solution) -> StrategySchedule:
        coef, hedge = sol.psi.theta_parts_grid()
        sched = sol.retention
        return cls("optimal", sol.curve.grid, sched.u_star, coef, hedge, "pi", sched.u_at)

    @classmethod
    def myopic(cls, sol: Solution) -> StrategySchedule:
        coef, _ = sol.psi.theta_parts_grid()
        sched = sol.retention
        return cls("myopic", sol.curve.grid, sched.u_star, coef, np.zeros_like(coef), "pi", sched.u_at)

    @classmethod
    def full_information(cls, sol: Solution) -> StrategySchedule:
        prm, grid = sol.params, sol.curve.grid
        coef = np.exp(-prm.r * (prm.T - grid)) / (prm.sigma1 * prm.eta)
        e1, _ = _decay_integrals(prm.kappa, prm.T - grid)
        sched = sol.retention
        return cls("full", grid, sched.u_star, coef, -0.5 * prm.rho * prm.sigma0 * e1, "x", sched.u_at)

    @classmethod
    def passive(cls, sol: Solution) -> StrategySchedule:
        """No reinsurance, no stock: u = 1, theta = 0."""
        grid = sol.curve.grid
        ones, zeros = np.ones_like(grid), np.zeros_like(grid)
        return cls("passive", grid, ones, zeros, zeros, "pi")

    @classmethod
    def named(cls, name: str, sol: Solution) -> StrategySchedule:
        makers = {"optimal": cls.optimal, "myopic": cls.myopic, "full": cls.full_information, "passive": cls.passive}
        if name not in makers:
            raise ValueError(f"unknown strategy {name!r}; expected one of {sorted(makers)}")
        return makers[name](sol)


@dataclass
class SimulationResult:
    grid: np.ndarray
    n_paths: int
    seed: int
    strategy: str
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]
    snapshot_times: np.ndarray
    snapshots: dict[str, np.ndarray]
    terminal_wealth: np.ndarray
    first_path: dict[str, np.ndarray]
    warnings: list[str] = field(default_factory=list)

    def std_error(self, name: str) -> np.ndarray:
        return self.std[name] / math.sqrt(self.n_paths)

    def quantiles(self, name: str, qs=(0.05, 0.25, 0.5, 0.75, 0.95)) -> np.ndarray:
        """Quantiles of a series at ``snapshot_times``; shape (len(times), len(qs))."""
        return np.quantile(self.snapshots[name], qs, axis=0).T

    def empirical_utility(self, eta: float) -> tuple[float, float]:
        u = -np.expm1(-eta * self.terminal_wealth)
        return float(u.mean()), float(u.std(ddof=1) / math.sqrt(len(u)))


def _regrid(sol: Solution, n_steps: int | None) -> Solution:
    if n_steps is None or n_steps == sol.curve.n_steps:
        return sol
    if n_steps < 200:
        raise ValueError("n_steps must be at least 200")
    return Solution.build(sol.params, sol.claims, sol.premium, n_steps=n_steps)


def simulate(
    sol: Solution,
    strategy: StrategySchedule | str = "optimal",
    n_paths: int = 10_000,
    n_steps: int | None = None,
    seed: int = 0,
    workers: int = 1,
    n_snapshots: int = 11,
) -> SimulationResult:
    """Joint simulation of (X, Y, Pi, claims, wealth) under a strategy.

    X uses the exact OU transition; Y, Pi and wealth use Euler steps on the
    shared grid. Claims hit the wealth at their exact arrival times: the
    retention is read at the arrival time and the jump accrues interest for
    the rest of the step.
    """
    sol = _regrid(sol, n_steps)
    if isinstance(strategy, str):
        strategy = StrategySchedule.named(strategy, sol)
    prm, curve = sol.params, sol.curve
    grid, dt, n = curve.grid, curve.dt, curve.n_steps
    if len(strategy.grid) != len(grid):
        raise ValueError("strategy grid does not match the simulation grid")
    report = validate(prm, curve.p_bar)

    c = sol.premium.insurance_rate(sol.claims, prm.lam)
    q = np.array([sol.premium.reinsurance_rate(sol.claims, prm.lam, float(u)) for u in strategy.u])
    gain = curve.gain
    coef_star, hedge_star = sol.psi.theta_parts_grid()
    theta_f = lambda k, x: theta_star_full(grid[k], x, prm)  # noqa: E731
    decay = math.exp(-prm.b0 * dt)
    ou_sd = prm.sigma0 * math.sqrt(-math.expm1(-2.0 * prm.b0 * dt) / (2.0 * prm.b0))
    rho_perp = math.sqrt(max(0.0, 1.0 - prm.rho**2))
    sqdt = math.sqrt(dt)
    snap_idx = np.unique(np.round(np.linspace(0, n, n_snapshots)).astype(int))

    def run_block(block: int, m: int):
        rng = block_rng(seed, block, _NORMALS)
        xi0 = rng.standard_normal((m, n))
        xi1 = rng.standard_normal((m, n))
        x = prm.pi0 + math.sqrt(prm.p0) * block_rng(seed, block, _INITIAL).standard_normal(m)

        jumps = np.zeros((m, n))
        crng = block_rng(seed, block, _CLAIMS)
        for i in range(m):
            stream = sample_stream(sol.claims, prm.lam, prm.T, crng)
            if len(stream):
                k = np.minimum(np.ceil(stream.times / dt).astype(int) - 1, n - 1)
                k = np.maximum(k, 0)
                grow = 1.0 + prm.r * (grid[k + 1] - stream.times)
                np.add.at(jumps[i], k, strategy.retention_at(stream.times) * stream.sizes * grow)

        pi = np.full(m, prm.pi0)
        y = np.zeros(m)
        innov = np.zeros(m)
        z = np.full(m, prm.r0_capital)
        n_series = len(SERIES)
        sums = np.zeros((n + 1, n_series))
        sq = np.zeros((n + 1, n_series))
        snaps = np.empty((len(snap_idx), n_series, m))
        first = np.empty((n + 1, n_series))
        snap_pos = {int(k): j for j, k in enumerate(snap_idx)}
        vals = np.empty((n_series, m))

        for k in range(n + 1):
            state = x if strategy.observes == "x" else pi
            theta = strategy.coef[k] * (state + strategy.offset[k])
            # rows follow SERIES
            vals[0], vals[1], vals[3], vals[4], vals[5], vals[9] = x, pi, y, innov, theta, z
            np.subtract(x, pi, out=vals[2])
            vals[2] **= 2
            vals[6] = coef_star[k] * (pi + hedge_star[k])
            vals[7] = theta_f(k, x)
            np.subtract(vals[6], vals[7], out=vals[8])
            sums[k] = vals.sum(axis=1)
            sq[k] = np.einsum("ij,ij->i", vals, vals)
            first[k] = vals[:, 0]
            if k in snap_pos:
                snaps[snap_pos[k]] = vals
            if k == n:
                break
            dw0 = xi0[:, k] * sqdt
            dw1 = prm.rho * dw0 + rho_perp * xi1[:, k] * sqdt
            d_innov = dw1 + (x - pi) * dt
            z = z + (c - q[k] + prm.r * z) * dt + theta * prm.sigma1 * (x * dt + dw1) - jumps[:, k]
            y = y + (prm.r + prm.sigma1 * x - 0.5 * prm.sigma1**2) * dt + prm.sigma1 * dw1
            pi = pi + prm.b0 * (prm.mu0 - pi) * dt + gain[k] * d_innov
            innov = innov + d_innov
            x = x * decay + prm.mu0 * (1.0 - decay) + ou_sd * xi0[:, k]
        return sums, sq, snaps, z, first

    parts = _run_blocks(run_block, n_paths, workers)
    tot = np.zeros((n + 1, len(SERIES)))
    tot2 = np.zeros_like(tot)
    for p in parts:
        tot += p[0]
        tot2 += p[1]
    mu = tot / n_paths
    var = np.maximum(tot2 / n_paths - mu**2, 0.0) * n_paths / max(n_paths - 1, 1)
    mean = {s: mu[:, j] for j, s in enumerate(SERIES)}
    std = {s: np.sqrt(var[:, j]) for j, s in enumerate(SERIES)}
    snapshots = {s: np.concatenate([p[2][:, j, :].T for p in parts]) for j, s in enumerate(SERIES)}
    terminal = np.concatenate([p[3] for p in parts])
    first_path = {s: parts[0][4][:, j] for j, s in enumerate(SERIES)}
    warnings = list(report.messages)
    return SimulationResult(
        grid, n_paths, seed, strategy.name, mean, std, grid[snap_idx], snapshots, terminal, first_path, warnings
    )


def closed_form_gap(sol: Solution) -> np.ndarray:
    """E[theta*_t - theta^{*,F}_t] on the grid, using E[Pi_t] = E[X_t].

    At rho = 0 this is -1/2 P_t/(sigma1 eta) e^{-r(T-t)} int_t^T e^{-int_t^s (b0 + P)} ds.
    """
    prm, grid = sol.params, sol.curve.grid
    coef, hedge = sol.psi.theta_parts_grid()
    e1, _ = _decay_integrals(prm.kappa, prm.T - grid)
    return coef * (hedge + 0.5 * prm.rho * prm.sigma0 * e1)


@dataclass
class GapEstimate:
    grid: np.ndarray
    mean: np.ndarray
    std_error: np.ndarray
    closed_form: np.ndarray


def mean_strategy_gap(
    sol: Solution, n_paths: int = 10_000, seed: int = 0, n_steps: int | None = None, workers: int = 1
) -> GapEstimate:
    sol = _regrid(sol, n_steps)
    res = simulate(sol, StrategySchedule.passive(sol), n_paths, seed=seed, workers=workers)
    return GapEstimate(res.grid, res.mean["gap"], res.std_error("gap"), closed_form_gap(sol))


def feynman_kac_psi(
    t: float, p: float, sol: Solution, n_paths: int = 100_000, seed: int = 0, workers: int = 1
) -> tuple[float, float]:
    """-1/2 E[int_t^T Pi~_s ds] with dPi~ = (b0 mu0 - a(s) Pi~) ds + (P_s + rho sigma0) dB.

    Euler steps on the variance-curve grid, trapezoid rule in time, and a
    Brownian driver independent of everything else. ``t`` must be a grid time.
    """
    prm, curve = sol.params, sol.curve
    k0 = curve.index(t)
    n = curve.n_steps
    dt = curve.dt
    gain = curve.gain
    a = prm.b0 + gain
    sqdt = math.sqrt(dt)

    def run_block(block: int, m: int):
        rng = block_rng(seed, block, _FEYNMAN_KAC)
        v = np.full(m, float(p))
        acc = 0.5 * v * dt
        for k in range(k0, n):
            v = v + (prm.b0 * prm.mu0 - a[k] * v) * dt + gain[k] * sqdt * rng.standard_normal(m)
            acc += v * (dt if k + 1 < n else 0.5 * dt)
        return acc.sum(), np.dot(acc, acc)

    if k0 == n:
        return 0.0, 0.0
    parts = _run_blocks(run_block, n_paths, workers)
    s1 = sum(x[0] for x in parts)
    s2 = sum(x[1] for x in parts)
    mu = s1 / n_paths
    var = max(s2 / n_paths - mu * mu, 0.0) * n_paths / (n_paths - 1)
    return -0.5 * mu, 0.5 * math.sqrt(var / n_paths)


def empirical_utility(
    sol: Solution,
    strategy: StrategySchedule | str = "optimal",
    n_paths: int = 10_000,
    seed: int = 0,
    n_steps: int | None = None,
    workers: int = 1,
) -> tuple[float, float]:
    """Sample mean of 1 - exp(-eta Z_T) and its standard error."""
    res = simulate(sol, strategy, n_paths, n_steps, seed, workers)
    return res.empirical_utility(sol.params.eta)


def figure_data(
    sol_by_rho: dict[float, Solution], n_paths: int = 2000, seed: int = 0, workers: int = 1
) -> dict[str, dict[str, np.ndarray]]:
    """Column tables for the three figures.

    fig1_rho_<r>: one trajectory of X and Pi; fig2_rho_<r>: the matching
    partial- and full-information holdings; fig3: mean holding gap per rho
    with its closed form.
    """
    out: dict[str, dict[str, np.ndarray]] = {}
    fig3: dict[str, np.ndarray] = {}
    for rho, sol in sol_by_rho.items():
        tag = f"{rho:g}"
        res = simulate(sol, StrategySchedule.passive(sol), n_paths, seed=seed, workers=workers)
        fp = res.first_path
        coef, hedge = sol.psi.theta_parts_grid()
        out[f"fig1_rho_{tag}"] = {"t": res.grid, "X": fp["x"], "Pi": fp["pi"]}
        out[f"fig2_rho_{tag}"] = {
            "t": res.grid,
            "theta_myopic": coef * fp["pi"],
            "theta_hedge": coef * hedge,
            "theta_star": fp["theta_star"],
            "theta_full": fp["theta_full"],
        }
        fig3.setdefault("t", res.grid)
        fig3[f"gap_rho_{tag}"] = res.mean["gap"]
        fig3[f"gap_se_rho_{tag}"] = res.std_error("gap")
        fig3[f"gap_closed_form_rho_{tag}"] = closed_form_gap(sol)
    out["fig3"] = fig3
    return out
