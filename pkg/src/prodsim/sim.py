"""Population construction, the monthly scheduler, scenario presets and output files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from . import adapt, firms as fe, planner as pl
from .accounting import AccountsLedger, MonthRecord, StockFlowError, tick_income_statement
from .core import (
    TICKS_PER_YEAR,
    WAGE,
    FirmClass,
    PlannerState,
    Policy,
    ProductionType,
    YearRecord,
    load_catalog,
    default_catalog,
    validate_catalog,
)
from .firms import FirmArrays
from .kernels import EVENT_NAMES, get_backend
from .kernels._common import FAILED, REJECTED

# RNG streams; each (stream, tick) pair gets its own generator
STREAM_BUILD = 0
STREAM_ORDERS = 1
STREAM_FAILURES = 2
STREAM_PURCHASES = 3
STREAM_ALLOCATION = 4

# distortion magnitudes of the pro-consumption and pro-industry presets
PRO_CONSUMPTION = -0.97
PRO_INDUSTRY = 0.3


class InvariantError(RuntimeError):
    """A firm or planner invariant broke during the run."""


@dataclass
class ScenarioConfig:
    scenario: str = "custom"
    seed: int = 1
    months: int = 144
    warmup_months: int = 24
    n_firms: int = 10_000
    # planner policy
    distribution_policy: Policy = Policy.PROPORTIONAL
    order_distortion: float = 0.0
    duration_multiplier: int = 1
    failure_probability: float = 0.05
    order_floor_share: float = pl.DEFAULT_ORDER_FLOOR_SHARE
    purchase_noise: float = 0.1
    # factor adaptation
    tolerance: float = 0.1
    useful_life: int = 12
    ticks_per_year: int = TICKS_PER_YEAR
    # economy
    capital_rate: float = 0.10
    wage: float = WAGE
    undersizing: float = 0.9
    flow_calibration: float = 4.0  # order load as a multiple of full-size capacity
    apply_markup: bool = True
    # feed rejected orders into the demand signal used to size labor
    history_includes_rejected: bool = False
    # engine
    max_processes: int = 64
    queue_capacity: int = 16
    catalog_path: str | None = None
    out_dir: str | None = None
    trace_firms: tuple[int, ...] = ()
    workers: int = 1
    backend: str | None = None

    def __post_init__(self) -> None:
        self.distribution_policy = Policy.parse(self.distribution_policy)
        self.trace_firms = tuple(int(i) for i in self.trace_firms)
        self.validate()

    def validate(self) -> None:
        if not self.months > self.warmup_months >= 0:
            raise ValueError(f"need months > warmup_months >= 0, got {self.months}, {self.warmup_months}")
        if self.n_firms != 0 and self.n_firms < 8:
            raise ValueError(f"n_firms must be 0 or at least 8, got {self.n_firms}")
        if not 0.0 < self.undersizing <= 1.0:
            raise ValueError("undersizing must lie in (0, 1]")
        if self.flow_calibration < 0:
            raise ValueError("flow_calibration must be >= 0")
        if self.max_processes < 1 or self.queue_capacity < 1:
            raise ValueError("max_processes and queue_capacity must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.policy()
        adapt.AdaptationParams(self.tolerance, self.useful_life, self.ticks_per_year)

    def policy(self) -> pl.ScenarioPolicy:
        return pl.ScenarioPolicy(
            distribution_policy=self.distribution_policy,
            order_distortion=self.order_distortion,
            duration_multiplier=self.duration_multiplier,
            failure_probability=self.failure_probability,
            order_floor_share=self.order_floor_share,
            purchase_noise=self.purchase_noise,
        )

    def adaptation(self) -> adapt.AdaptationParams:
        return adapt.AdaptationParams(self.tolerance, self.useful_life, self.ticks_per_year)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["distribution_policy"] = self.distribution_policy.name.lower()
        d["trace_firms"] = list(self.trace_firms)
        return d


PRESETS: dict[str, dict] = {
    "planner-zero": dict(distribution_policy=Policy.ZERO),
    "planner-total": dict(distribution_policy=Policy.TOTAL),
    "planner-random": dict(distribution_policy=Policy.RANDOM),
    "prop-regular": dict(),
    "prop-regular-2x": dict(duration_multiplier=2),
    "prop-min-inv": dict(order_distortion=PRO_CONSUMPTION),
    "prop-min-inv-2x": dict(order_distortion=PRO_CONSUMPTION, duration_multiplier=2),
    "prop-max-inv": dict(order_distortion=PRO_INDUSTRY),
    "prop-max-inv-2x": dict(order_distortion=PRO_INDUSTRY, duration_multiplier=2),
    "prop-max-inv-fail10": dict(order_distortion=PRO_INDUSTRY, failure_probability=0.10),
    "prop-max-inv-2x-fail10": dict(order_distortion=PRO_INDUSTRY, duration_multiplier=2, failure_probability=0.10),
}


def preset(name: str, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(PRESETS)}")
    return ScenarioConfig(scenario=name, **{**PRESETS[name], **overrides})


def load_config(path: str | Path, **overrides) -> ScenarioConfig:
    """Read a flat YAML/JSON config; a ``scenario`` naming a preset is used as the base."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a key-value mapping")
    names = {f.name for f in fields(ScenarioConfig)}
    unknown = set(raw) - names
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    if raw.get("catalog_path") and not Path(raw["catalog_path"]).is_absolute():
        raw["catalog_path"] = str(path.parent / raw["catalog_path"])
    values = {**PRESETS.get(raw.get("scenario", ""), {}), **raw, **overrides}
    return ScenarioConfig(**values)


def rng_for(seed: int, stream: int, tick: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, tick)))


# ---------------------------------------------------------------------------
# population
# ---------------------------------------------------------------------------


def class_counts(shares, n_firms: int) -> np.ndarray:
    """Per-class counts summing to ``n_firms``: every class gets one, then largest remainders."""
    shares = np.asarray(shares, dtype=np.float64)
    if n_firms == 0:
        return np.zeros(len(shares), dtype=np.int64)
    if n_firms < len(shares):
        raise ValueError("fewer firms than classes")
    exact = shares * n_firms
    counts = np.maximum(1, np.floor(exact + 1e-9)).astype(np.int64)
    diff = n_firms - int(counts.sum())
    rem = exact - np.floor(exact + 1e-9)
    if diff > 0:
        order = np.argsort(-rem, kind="stable")
        for k in range(diff):
            counts[order[k % len(order)]] += 1
    elif diff < 0:
        # take back from the classes that were rounded furthest up, never below one firm
        order = np.argsort(rem - (counts - exact), kind="stable")
        k = 0
        while diff < 0:
            c = order[k % len(order)]
            if counts[c] > 1:
                counts[c] -= 1
                diff += 1
            k += 1
    return counts


def initial_capital_price(catalog: list[FirmClass], capacity: np.ndarray, class_index: np.ndarray,
                          capital_rate: float, wage: float = WAGE) -> float:
    """Capacity-weighted unit value (cost plus markup) of the investment-goods producers."""
    inv = np.array([c.production_type == ProductionType.INVESTMENT for c in catalog])[class_index]
    value = np.array([c.unit_value(capital_rate, wage) for c in catalog])[class_index]
    weight = capacity[inv]
    if weight.size == 0 or weight.sum() <= 0:
        return 1.0
    return float(np.sum(weight * value[inv]) / np.sum(weight))


@dataclass
class Population:
    firms: FirmArrays
    capital_price0: float
    capacity0: np.ndarray  # full-size capacity before undersizing, used to size order flows


def build_population(config: ScenarioConfig, catalog: list[FirmClass], rng: np.random.Generator) -> Population:
    validate_catalog(catalog)
    counts = class_counts([c.share_of_firms for c in catalog], config.n_firms)
    n = int(counts.sum())
    ci = np.repeat(np.arange(len(catalog)), counts)
    col = lambda name, dtype=np.float64: np.array([getattr(c, name) for c in catalog], dtype=dtype)[ci]  # noqa: E731
    f = FirmArrays.empty(n, config.max_processes, config.queue_capacity, history=_history_len(catalog))
    f.class_index[:] = ci
    f.production_type[:] = col("production_type", np.int64)
    f.labor_productivity[:] = col("labor_productivity")
    f.recipe[:] = col("recipe")
    f.markup[:] = col("planned_markup")
    f.l_min[:] = col("l_min")
    f.l_max[:] = col("l_max")
    f.life_ticks[:] = col("useful_life") * config.ticks_per_year

    L0 = rng.integers(col("l_min", np.int64), col("l_max", np.int64) + 1).astype(np.float64)
    K0 = rng.uniform(col("k_min"), col("k_max"))
    f.obs_freq[:] = rng.integers(col("obs_freq_min", np.int64), col("obs_freq_max", np.int64) + 1)

    capacity0 = f.labor_productivity * np.minimum(L0, K0 / f.recipe)
    p0 = initial_capital_price(catalog, capacity0, ci, config.capital_rate, config.wage)
    f.recipe_q[:] = f.recipe / p0
    f.L[:] = np.maximum(1.0, np.floor(config.undersizing * L0 + 0.5))
    f.L_target[:] = f.L
    f.K[:] = config.undersizing * K0
    f.K_q[:] = f.K / p0
    return Population(f, p0, capacity0)


def _history_len(catalog: list[FirmClass]) -> int:
    return max(c.obs_freq_max for c in catalog)


# ---------------------------------------------------------------------------
# world and scheduler
# ---------------------------------------------------------------------------


PLANNER_COLUMNS = ("tick", "grossInvExpected", "inv_goods_bought", "inv_goods_inventories",
                   "grossInvQ", "grossInvQ_value")
YEARLY_COLUMNS = ("year", "consumption", "gross_investment", "inventory_change", "gdp")
TRACE_COLUMNS = ("tick", "firm", "class", "L", "K", "K_q", "finished_goods", "wip", "running", "queued",
                 *(f"n_{e}" for e in EVENT_NAMES))


@dataclass
class World:
    config: ScenarioConfig
    catalog: list[FirmClass]
    firms: FirmArrays
    planner: PlannerState
    policy: pl.ScenarioPolicy
    params: adapt.AdaptationParams
    targets: pl.OrderTargets
    capital_price0: float
    backend: object
    ledger: AccountsLedger = field(default_factory=AccountsLedger)
    planner_rows: list[tuple] = field(default_factory=list)
    trace_rows: list[tuple] = field(default_factory=list)
    tick: int = 0
    mean_capital_price: float = 1.0
    # tick-stamped stock ledger: what step 5 must find
    expected_stock_q: float = 0.0
    cumulative_substitutions: float = 0.0
    cumulative_increments: float = 0.0
    cumulative_delivered_q: float = 0.0
    profit: np.ndarray | None = None

    @property
    def n_firms(self) -> int:
        return len(self.firms)


def make_world(config: ScenarioConfig) -> World:
    catalog = load_catalog(config.catalog_path) if config.catalog_path else default_catalog()
    pop = build_population(config, catalog, rng_for(config.seed, STREAM_BUILD))
    policy = config.policy()
    targets = pl.OrderTargets.build(pop.firms.class_index, catalog, pop.capacity0, policy.order_floor_share,
                                    config.flow_calibration, config.capital_rate)
    policy.total_order_flow_target = targets.total_flow
    state = PlannerState(policy=policy.distribution_policy, order_distortion=policy.order_distortion,
                         reference_price=pop.capital_price0)
    backend = get_backend(config.backend)
    backend.set_threads(config.workers)
    return World(
        config=config, catalog=catalog, firms=pop.firms, planner=state, policy=policy,
        params=config.adaptation(), targets=targets, capital_price0=pop.capital_price0, backend=backend,
        mean_capital_price=pop.capital_price0, profit=np.zeros(len(pop.firms)),
    )


def _economy_capital_price(f: FirmArrays, fallback: float) -> float:
    kq = float(f.K_q.sum())
    return float(f.K.sum()) / kq if kq > 0 else fallback


def run_tick(world: World, tick: int) -> MonthRecord:
    """Advance the world by one month, in the fixed nine-step order."""
    cfg = world.config
    f = world.firms
    state = world.planner
    kb = world.backend
    n = len(f)
    f.counts[:] = 0
    fg_start = f.fg_value.copy()
    wip_start = f.wip_value.copy()
    stock_start = state.inv_goods_stock_value

    # 1. planner decides: the policy is fixed per scenario, only the price estimate moves
    fallback_price = world.mean_capital_price

    # 2. orders
    batch = pl.generate_cycle_orders(world.targets, world.policy, rng_for(cfg.seed, STREAM_ORDERS, tick), tick)

    # 3. acceptance
    rate = batch.rate
    if cfg.history_includes_rejected:
        seen = np.ones(len(batch), dtype=bool)
    else:
        cap = fe.capacity(f.L, f.K_q, f.labor_productivity, f.recipe_q)
        seen = ~fe.would_reject(rate, cap[batch.firm])
    fe.record_orders(f, tick, batch.firm[seen], rate[seen], batch.duration[seen].astype(np.float64))
    offsets, o_qty, o_dur = batch.by_firm(n)
    fe.accept_orders(f, offsets, o_qty, o_dur, backend=kb)

    # 4. running processes accrue cost and may fail
    p_fail = world.policy.failure_probability
    unif = rng_for(cfg.seed, STREAM_FAILURES, tick).random(f.p_rem.shape) if p_fail > 0 else None
    fe.step_processes(f, p_fail, unif, cfg.capital_rate, cfg.ticks_per_year, cfg.wage, backend=kb)

    # 5. factor adaptation and investment-goods distribution
    if abs(state.inv_goods_stock_q - world.expected_stock_q) > 1e-9 * max(1.0, world.expected_stock_q):
        raise InvariantError(f"tick {tick}: planner stock {state.inv_goods_stock_q!r} differs from the "
                             f"ledger {world.expected_stock_q!r}")
    sched = adapt.on_schedule(tick, f.obs_freq)
    q_bar, n_bar, cnt = adapt.window_demand(f.h_rate, f.h_dur, f.h_cnt, tick, f.obs_freq)
    L_d = adapt.desired_labor(q_bar, n_bar, f.labor_productivity, f.l_min, f.l_max)
    signal = sched & (cnt > 0)
    f.L_target[:] = np.where(signal, L_d, f.L_target)
    f.L[:], _, _ = adapt.adjust_labor(f.L, f.L_target, signal, f.locked_labor)
    price = adapt.capital_price(f.K, f.K_q, fallback_price)
    K_qd = adapt.desired_capital(f.recipe, f.L_target, price)
    K_after, Kq_after, request = adapt.adapt_capital(f.K, f.K_q, K_qd, world.params, fallback_price)
    f.K[:] = K_after
    f.K_q[:] = Kq_after
    fe.decay_locked_capital(f)
    alloc_rng = rng_for(cfg.seed, STREAM_ALLOCATION, tick) if state.policy is Policy.RANDOM else None
    alloc = pl.distribute_investment_goods(request.total_q, state, alloc_rng, request_prices=request.price)
    K_new, Kq_new, substituted, increment = adapt.apply_investment_delivery(
        f.K, f.K_q, alloc.quantity, alloc.unit_value, request.substitutions_q)
    f.K[:] = K_new
    f.K_q[:] = Kq_new
    substitution_cost = substituted * alloc.unit_value
    world.cumulative_substitutions += float(substituted.sum())
    world.cumulative_increments += float(increment.sum())
    world.cumulative_delivered_q += float(alloc.quantity.sum())
    investment = alloc.domestic_q * alloc.unit_value
    imports = alloc.imported_q * alloc.unit_value

    # 6. conclusion
    fe.conclude_production(f, apply_markup=cfg.apply_markup, backend=kb)

    # 7. purchases
    purchase = pl.purchase_goods(f.fg_qty, f.fg_value, f.production_type, world.policy.purchase_noise,
                                 rng_for(cfg.seed, STREAM_PURCHASES, tick))
    pl.receive_investment_goods(state, purchase.inv_goods_q, purchase.inv_goods_value)
    world.expected_stock_q = state.inv_goods_stock_q

    # 8. statements
    d_fg = f.fg_value - fg_start
    d_wip = f.wip_value - wip_start
    value_added = purchase.revenue + d_fg + d_wip
    stmt = tick_income_statement(f.L, f.K, substitution_cost, f.writeoff, purchase.revenue, value_added,
                                 cfg.capital_rate, cfg.wage, cfg.ticks_per_year)
    world.profit += stmt.profit
    f.totals += f.counts.sum(axis=0)
    world.mean_capital_price = _economy_capital_price(f, fallback_price)

    # 9. national accounts (the ledger checks the identity every month)
    rec = MonthRecord(
        tick=tick,
        consumption=purchase.consumption_value,
        investment=investment,
        imports=imports,
        inventory_change=float(d_fg.sum()) + float(d_wip.sum()) + (state.inv_goods_stock_value - stock_start),
        inventories=float(f.fg_value.sum()) + float(f.wip_value.sum()) + state.inv_goods_stock_value,
        value_added=float(value_added.sum()),
    )
    world.ledger.record(rec)

    problems = f.check_invariants()
    gap = state.cumulative_requested_value - state.cumulative_delivered_value - state.gross_inv_expected_value
    if abs(gap) > 1e-9 * max(1.0, state.cumulative_requested_value):
        problems.append(f"unsatisfied-request ledger off by {gap!r}")
    if problems:
        raise InvariantError(f"tick {tick}: " + "; ".join(problems))

    world.planner_rows.append((tick, state.gross_inv_expected_value, purchase.inv_goods_value,
                               state.inv_goods_stock_value, alloc.domestic_q, investment))
    for i in cfg.trace_firms:
        if 0 <= i < n:
            world.trace_rows.append((
                tick, i, int(f.class_index[i]), float(f.L[i]), float(f.K[i]), float(f.K_q[i]),
                float(f.fg_value[i]), float(f.wip_value[i]), int((f.p_rem[i] > 0).sum()), int(f.q_len[i]),
                *(int(c) for c in f.counts[i]),
            ))
    world.tick = tick + 1
    return rec


# ---------------------------------------------------------------------------
# scenario runs
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    config: ScenarioConfig
    years: list[YearRecord]
    planner_rows: list[tuple]
    summary: dict
    ok: bool
    error: str | None = None
    world: World | None = None

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(y, name) for y in self.years])

    def planner_series(self, name: str) -> np.ndarray:
        k = PLANNER_COLUMNS.index(name)
        return np.array([row[k] for row in self.planner_rows])


def summarize(world: World, years: list[YearRecord], ok: bool, error: str | None) -> dict:
    gdp = [y.gdp for y in years]
    final = years[-1] if years else None
    totals = world.firms.totals
    return {
        "scenario": world.config.scenario,
        "invariants_ok": ok,
        "error": error,
        "months_run": world.tick,
        "final_year_gdp": final.gdp if final else None,
        "peak_gdp": max(gdp) if gdp else None,
        "final_year_c_i_ratio": (final.consumption / final.gross_investment
                                 if final and final.gross_investment > 0 else None),
        "total_rejections": int(totals[REJECTED]),
        "total_failures": int(totals[FAILED]),
        "events": {name: int(v) for name, v in zip(EVENT_NAMES, totals)},
        "gross_inv_expected": world.planner.gross_inv_expected_value,
        "imports_value": world.planner.imported_value,
        "initial_capital_price": world.capital_price0,
        "config": world.config.to_dict(),
    }


def run_scenario(config: ScenarioConfig, write: bool = True, keep_world: bool = False) -> RunResult:
    """Run warm-up plus horizon; write outputs when ``config.out_dir`` is set."""
    world = make_world(config)
    error = None
    try:
        for tick in range(config.months):
            run_tick(world, tick)
    except (StockFlowError, InvariantError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    years = []
    if error is None:
        try:
            years = world.ledger.years(config.warmup_months, config.ticks_per_year)
        except StockFlowError as exc:
            error = f"{type(exc).__name__}: {exc}"
    ok = error is None
    summary = summarize(world, years, ok, error)
    result = RunResult(config, years, world.planner_rows, summary, ok, error, world if keep_world else None)
    if write and config.out_dir:
        write_outputs(result, world, Path(config.out_dir))
    return result


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else str(x)
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_outputs(result: RunResult, world: World, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "planner_monthly.csv", PLANNER_COLUMNS, result.planner_rows)
    _write_csv(out / "national_accounts_yearly.csv", YEARLY_COLUMNS,
               [(y.year, y.consumption, y.gross_investment, y.inventory_change, y.gdp) for y in result.years])
    if world.config.trace_firms:
        _write_csv(out / "firm_trace.csv", TRACE_COLUMNS, world.trace_rows)
    with (out / "summary.json").open("w", encoding="utf-8") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def with_overrides(config: ScenarioConfig, **overrides) -> ScenarioConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
