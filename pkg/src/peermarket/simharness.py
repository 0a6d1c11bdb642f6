"""Agent-based semester simulator driving the production engine in-process.

Students are heterogeneous along one latent engagement factor z (standard
normal): it scales contribution effort (log-normal rates per the config),
daily participation, trading frequency, estimate precision, and the rate
(and quality) of founded projects. Engaged students therefore contribute
early and cheaply to projects that turn out valuable, and redeploy gains
into further undervalued projects, the compounding channel that produces
the superlinear score-vs-contribution scaling, without any hard-coded
score formula. All defaults are tuned to reproduce the qualitative facts
(heavy-tailed contributions, log-log slope above 1, prices tracking
ex-post value) and are not calibrated to any real cohort.

Agents only touch the public engine API; any conservation violation the
simulator provokes is an engine bug by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import scoring
from .engine import EngineConfig, MarketEngine
from .errors import InvalidConfig, MarketError

LOT_MICRO = 10_000  # order quantities quantized to 0.01 share


@dataclass(frozen=True)
class SimConfig:
    n_agents: int = 50
    n_days: int = 120
    endowment_centi: int = 1_000_000
    # contribution effort: log-normal bytes/day across agents
    effort_mu_ln: float = 3.5
    effort_sigma_ln: float = 1.5
    # behavioral couplings to the latent engagement factor
    contributor_z_min: float = 0.6      # below this z a student never edits
    participation_steepness: float = 1.2
    participation_midpoint: float = -0.6
    signal_noise: float = 0.45          # multiplicative sd of estimates at the midpoint
    noise_coupling: float = 1.0
    noise_midpoint: float = 0.8         # engagement level with baseline sharpness
    trade_propensity: float = 0.7       # daily order probability at the midpoint
    propensity_coupling: float = 1.0
    propensity_midpoint: float = 1.2    # engagement level with baseline activity
    project_creation_rate: float = 0.004  # new projects per agent-day at z=0
    creation_coupling: float = 1.5
    # true per-share quality, drawn at creation, revealed at grading time
    quality_mu_ln: float = -0.2
    quality_sigma_ln: float = 0.8
    quality_founder_coupling: float = 1.3
    start_date: str = "2025-09-01"

    def validate(self) -> None:
        if self.n_agents < 1 or self.n_days < 1:
            raise InvalidConfig("n_agents and n_days must be >= 1")
        if self.endowment_centi < 0:
            raise InvalidConfig("endowment must be >= 0")
        for name in ("effort_sigma_ln", "signal_noise", "trade_propensity",
                     "project_creation_rate", "quality_sigma_ln"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be >= 0")
        try:
            datetime.fromisoformat(self.start_date)
        except ValueError:
            raise InvalidConfig(f"bad start_date: {self.start_date}") from None


@dataclass
class AgentProfile:
    participant_id: str
    engagement: float
    effort_rate: float            # expected bytes per active day
    participation: float          # daily probability of editing at all
    is_contributor: bool
    signal_noise: float
    trade_propensity: float
    project_creation_rate: float


@dataclass
class SimReport:
    config: dict
    seed: int
    n_projects: int
    n_trades: int
    matrix_rows: list[str]
    matrix_cols: list[str]
    matrix: list[list[int]]
    agents: list[dict]            # participant_id, bytes, ex_ante_centi, ex_post_centi
    price_series: dict[str, list[int]]
    true_values: dict[str, int]
    final_prices: dict[str, int]
    slope: float | None
    intercept: float | None
    r_squared: float | None
    liquidity_trades_per_project_day: float
    price_value_spearman: float | None
    max_mean_contribution_ratio: float | None
    journal_digest: str
    journal_records: list[dict] = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("journal_records")
        return d


@dataclass
class ProbeResult:
    """Per-project creative-destruction classification."""
    projects: dict[str, dict]
    price_value_spearman: float | None
    bottom_quartile_below_founding_share: float | None


def load_config(path: str | Path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {f for f in SimConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    return SimConfig(**raw)


def _profiles(config: SimConfig, rng: np.random.Generator) -> list[AgentProfile]:
    width = max(3, len(str(config.n_agents)))
    profiles = []
    for i in range(config.n_agents):
        z = float(rng.standard_normal())
        participation = 1.0 / (1.0 + math.exp(
            -config.participation_steepness * (z - config.participation_midpoint)))
        profiles.append(AgentProfile(
            participant_id=f"s{i + 1:0{width}d}",
            engagement=z,
            effort_rate=math.exp(config.effort_mu_ln + config.effort_sigma_ln * z),
            participation=participation,
            is_contributor=z > config.contributor_z_min,
            signal_noise=min(0.9, config.signal_noise * math.exp(
                -config.noise_coupling * (z - config.noise_midpoint))),
            trade_propensity=min(0.9, max(0.12, config.trade_propensity * math.exp(
                config.propensity_coupling * (z - config.propensity_midpoint)))),
            project_creation_rate=(0.0 if config.project_creation_rate == 0 else
                min(0.15, max(0.0015, config.project_creation_rate * math.exp(
                    config.creation_coupling * z)))),
        ))
    return profiles


def _gen_text(rng: np.random.Generator, n_bytes: int) -> str:
    """Deterministic filler text of exactly n_bytes ASCII bytes, newline-terminated lines."""
    chunks = []
    remaining = n_bytes
    while remaining > 0:
        width = min(64, remaining)
        if width > 1:
            letters = rng.integers(97, 123, size=width - 1)
            chunks.append("".join(chr(c) for c in letters))
        chunks.append("\n")
        remaining -= width
    return "".join(chunks)


class _Semester:
    def __init__(self, config: SimConfig, seed: int):
        config.validate()
        self.config = config
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.engine = MarketEngine(EngineConfig(endowment_centi=config.endowment_centi))
        self.journal: list[dict] = []
        self.true_value: dict[str, int] = {}
        self.open_orders: dict[str, list[int]] = {}
        self.day = 0
        self._tick = 0
        self._t0 = datetime.fromisoformat(config.start_date).replace(
            hour=8, tzinfo=timezone.utc)
        self._project_counter = 0

    # -- engine plumbing ------------------------------------------------

    def _ts(self) -> str:
        self._tick += 1
        return (self._t0 + timedelta(days=self.day, seconds=self._tick)).isoformat()

    def _run(self, method, *args, **kwargs):
        result, events = method(*args, ts=self._ts(), **kwargs)
        self.journal.extend(events)
        return result

    # -- agent actions ---------------------------------------------------

    def _estimates(self, profile: AgentProfile, project_ids: list[str]) -> dict[str, float]:
        """Fresh noisy private estimates of every project's current value.

        Estimate precision improves over the semester (students converge on
        the instructor's standards) and with engagement.
        """
        sharpen = 1.0 - 0.5 * self.day / self.config.n_days
        sd = profile.signal_noise * sharpen
        eps = self.rng.standard_normal(len(project_ids))
        return {pid: self.true_value[pid] * math.exp(sd * e)
                for pid, e in zip(project_ids, eps)}

    def _maybe_create_project(self, profile: AgentProfile) -> str | None:
        if self.rng.random() >= profile.project_creation_rate:
            return None
        self._project_counter += 1
        title = f"project-{self._project_counter:04d}"
        project = self._run(self.engine.create_project, profile.participant_id, title, "")
        # winsorized so one extreme draw cannot dominate a whole semester
        log_quality = (self.config.quality_mu_ln
                       + self.config.quality_sigma_ln * self.rng.standard_normal()
                       + self.config.quality_founder_coupling * profile.engagement)
        quality = math.exp(max(-2.2, min(2.2, log_quality)))
        value = max(100, int(round(self.engine.config.founding_price_centi * quality)))
        self.true_value[project.project_id] = value
        return project.project_id

    def _activity_ramp(self, profile: AgentProfile) -> float:
        """Procrastination: engaged students work from day one, casual ones
        mostly show up in the last stretch before grading."""
        early = 1.0 / (1.0 + math.exp(-4.0 * (profile.engagement - 1.2)))
        progress = min(1.0, self.day / (0.85 * self.config.n_days))
        return early + (1.0 - early) * progress ** 2

    def _contribute(self, profile: AgentProfile, created: str | None,
                    estimates: dict[str, float]) -> None:
        if not profile.is_contributor:
            return
        if self.rng.random() >= profile.participation * self._activity_ramp(profile):
            return
        n_bytes = int(self.rng.poisson(profile.effort_rate))
        if n_bytes <= 0:
            return
        if created is not None:
            target = created
        else:
            ids = self.engine.project_ids()
            if not ids:
                return
            ratios = np.array([
                max(estimates[pid] / self.engine.last_price(pid) - 1.0, 0.0)
                for pid in ids])
            if ratios.sum() <= 0:
                # nothing looks cheap: stick with the least bad ratio
                target = ids[int(np.argmax(np.array(
                    [estimates[pid] / self.engine.last_price(pid) for pid in ids])))]
            else:
                weights = ratios ** 2
                target = ids[int(self.rng.choice(len(ids), p=weights / weights.sum()))]
        body = self.engine.project(target).body
        self._run(self.engine.ingest_revision, target, profile.participant_id,
                  body + _gen_text(self.rng, n_bytes))

    def _trade(self, profile: AgentProfile, estimates: dict[str, float]) -> None:
        # the market is thin in the opening weeks and builds from there
        progress = self.day / self.config.n_days
        ramp = 0.08 + 0.92 * min(1.0, max(0.0, (progress - 0.25) / 0.45))
        if self.rng.random() >= profile.trade_propensity * ramp:
            return
        ids = self.engine.project_ids()
        if not ids:
            return
        acct = self.engine.ledger.account(profile.participant_id)
        # candidate actions weighted by perceived edge against the executable
        # quote (falling back to last price on an empty book side)
        candidates: list[tuple[str, bool, float]] = []
        weights: list[float] = []
        for pid in ids:
            snap = self.engine.book_snapshot(pid, 1)
            last = self.engine.last_price(pid)
            ask_ref = snap["asks"][0]["price_centi"] if snap["asks"] else last
            bid_ref = snap["bids"][0]["price_centi"] if snap["bids"] else last
            est = estimates[pid]
            buy_edge = est / ask_ref - 1.0
            if buy_edge > 0.02:
                candidates.append((pid, True, buy_edge))
                weights.append(min(buy_edge, 1.5))
            holding = acct.holdings.get(pid)
            sell_edge = bid_ref / est - 1.0
            if holding and holding.free >= LOT_MICRO and sell_edge > 0.02:
                candidates.append((pid, False, sell_edge))
                weights.append(min(sell_edge, 1.5))
        if not candidates:
            return
        w = np.array(weights)
        pid, is_buy, edge = candidates[int(self.rng.choice(len(candidates), p=w / w.sum()))]
        est = estimates[pid]
        price = self.engine.last_price(pid)
        tick = max(1, price // 100)
        snap = self.engine.book_snapshot(pid, 1)
        best_bid = snap["bids"][0]["price_centi"] if snap["bids"] else None
        best_ask = snap["asks"][0]["price_centi"] if snap["asks"] else None
        margin = float(self.rng.uniform(0.0, 0.15))
        conviction = min(2.5, max(0.3, edge / 0.15))
        jump = float(self.rng.uniform(0.2, 0.7))
        if is_buy:
            reserve = int(est * (1.0 - margin))
            if best_ask is not None and best_ask <= reserve:
                limit = best_ask  # lift the offer
            else:
                anchor = best_bid if best_bid is not None else price
                improve = anchor + max(tick, int(jump * (reserve - anchor)))
                limit = min(reserve, improve)
            if limit < 1:
                return
            spend = int(acct.cash * float(self.rng.uniform(0.08, 0.35)) * conviction)
            qty = (spend * 1_000_000 // limit) // LOT_MICRO * LOT_MICRO
            side = "BID"
        else:
            reserve = max(1, int(est * (1.0 + margin)))
            if best_bid is not None and best_bid >= reserve:
                limit = best_bid  # hit the bid
            else:
                # undercut the standing offer; with no market, ask near own
                # valuation (a junk holder reveals rather than anchor on a
                # stale print)
                anchor = best_ask if best_ask is not None else min(price, int(est * 1.35))
                undercut = anchor - max(tick, int(jump * (anchor - reserve)))
                limit = max(reserve, undercut)
            free = acct.holdings[pid].free
            qty = (int(free * float(self.rng.uniform(0.25, 0.7)) * conviction)
                   // LOT_MICRO * LOT_MICRO)
            qty = min(qty, free)
            side = "ASK"
        if qty < LOT_MICRO:
            return
        try:
            order_id, _fills = self._run(self.engine.submit_limit_order,
                                         profile.participant_id, pid, side, limit, qty)
        except MarketError:
            return
        self.open_orders.setdefault(profile.participant_id, []).append(order_id)

    def _maybe_cancel_stale(self, profile: AgentProfile) -> None:
        if self.rng.random() >= 0.12:
            return
        mine = self.open_orders.get(profile.participant_id)
        if not mine:
            return
        mine[:] = [oid for oid in mine if self.engine.order_status.get(oid) == "resting"]
        worst, worst_gap = None, 0.25  # only pull orders > 25% away from market
        for oid in mine:
            order = self.engine.orders_by_id[oid]
            price = self.engine.last_price(order.project_id)
            gap = abs(order.limit_price_centi - price) / price
            if gap > worst_gap:
                worst, worst_gap = oid, gap
        if worst is not None:
            self._run(self.engine.cancel_order, profile.participant_id, worst)
            mine.remove(worst)

    # -- main loop --------------------------------------------------------

    def run(self) -> SimReport:
        config, engine = self.config, self.engine
        profiles = _profiles(config, self.rng)
        for p in profiles:
            self._run(engine.open_account, p.participant_id, config.endowment_centi)
        price_series: dict[str, list[int]] = {}
        for day in range(config.n_days):
            self.day = day
            for profile in profiles:
                created = self._maybe_create_project(profile)
                ids = engine.project_ids()
                if not ids:
                    continue
                estimates = self._estimates(profile, ids)
                self._contribute(profile, created, estimates)
                self._trade(profile, estimates)
                self._maybe_cancel_stale(profile)
            for pid in engine.project_ids():
                price_series.setdefault(pid, [])
                # pad projects created mid-semester with their founding price
                while len(price_series[pid]) < day:
                    price_series[pid].append(engine.config.founding_price_centi)
                price_series[pid].append(engine.last_price(pid))
        for pid in engine.project_ids():
            self._run(engine.set_ex_post_value, pid, self.true_value[pid])
        return self._report(profiles, price_series)

    def _report(self, profiles: list[AgentProfile],
                price_series: dict[str, list[int]]) -> SimReport:
        config, engine = self.config, self.engine
        rows, cols, matrix = scoring.contribution_matrix(engine)
        board = scoring.leaderboard(engine, "ex_post")
        agents = []
        for row in sorted(board, key=lambda r: r.participant_id):
            acct = engine.ledger.account(row.participant_id)
            free_cash = acct.cash + acct.reserved_cash
            agents.append({"participant_id": row.participant_id,
                           "bytes": row.total_contributed_bytes,
                           "ex_ante_centi": row.ex_ante_centi,
                           "ex_post_centi": row.ex_post_centi,
                           # the graded object: stock holdings at market
                           # prices (ex-ante); unspent cash is not part of the grade
                           "portfolio_ex_ante_centi": row.ex_ante_centi - free_cash,
                           "portfolio_ex_post_centi": row.ex_post_centi - free_cash})
        points = [(a["bytes"], a["portfolio_ex_ante_centi"]) for a in agents
                  if a["bytes"] > 0 and a["portfolio_ex_ante_centi"] > 0]
        slope = intercept = r2 = None
        if len(points) >= 3:
            try:
                slope, intercept, r2 = scoring.fit_scaling_exponent(points)
            except MarketError:
                pass
        final_prices = {pid: engine.last_price(pid) for pid in engine.project_ids()}
        true_values = {pid: p.ex_post_value_centi for pid, p in engine.projects.items()}
        spearman = _spearman(final_prices, true_values)
        byte_totals = [a["bytes"] for a in agents]
        mean_bytes = sum(byte_totals) / len(byte_totals) if byte_totals else 0.0
        ratio = max(byte_totals) / mean_bytes if mean_bytes > 0 else None
        n_projects = len(engine.project_ids())
        liquidity = (len(engine.trades) / (n_projects * config.n_days)
                     if n_projects else 0.0)
        return SimReport(
            config=asdict(config), seed=self.seed, n_projects=n_projects,
            n_trades=len(engine.trades), matrix_rows=rows, matrix_cols=cols,
            matrix=matrix, agents=agents, price_series=price_series,
            true_values=dict(sorted(true_values.items())),
            final_prices=final_prices, slope=slope, intercept=intercept,
            r_squared=r2, liquidity_trades_per_project_day=liquidity,
            price_value_spearman=spearman,
            max_mean_contribution_ratio=ratio,
            journal_digest=engine.snapshot_digest(),
            journal_records=self.journal,
        )


def _spearman(final_prices: dict[str, int], true_values: dict[str, int]) -> float | None:
    ids = sorted(final_prices)
    if len(ids) < 2:
        return None
    x = [final_prices[p] for p in ids]
    y = [true_values[p] for p in ids]
    if len(set(x)) < 2 or len(set(y)) < 2:
        return None
    rho = sps.spearmanr(x, y).statistic
    return None if math.isnan(rho) else float(rho)


def run_semester(config: SimConfig, seed: int) -> SimReport:
    """Simulate one semester; deterministic in (config, seed)."""
    return _Semester(config, seed).run()


def creative_destruction_probe(report: SimReport) -> ProbeResult:
    """Classify every project's final price against the founding price and
    its true quality; includes the price/value rank correlation."""
    founding = EngineConfig().founding_price_centi
    values = sorted(report.true_values.values())
    q1 = values[max(0, (len(values) - 1) // 4)] if values else 0
    projects = {}
    bottom_below = bottom_total = 0
    for pid, true_value in report.true_values.items():
        final = report.final_prices[pid]
        bottom = true_value <= q1
        if bottom:
            bottom_total += 1
            bottom_below += final < founding
        projects[pid] = {
            "final_price_centi": final,
            "true_value_centi": true_value,
            "ended_below_founding": final < founding,
            "undervalued_vs_truth": final < true_value,
            "bottom_quality_quartile": bottom,
        }
    share = bottom_below / bottom_total if bottom_total else None
    return ProbeResult(projects=projects,
                       price_value_spearman=report.price_value_spearman,
                       bottom_quartile_below_founding_share=share)


def emit_report(report: SimReport, out_dir: str | Path) -> list[Path]:
    """Write matrix, scaling-points and price-series CSVs plus a text summary.

    Overwrites existing files; re-emitting the same report is byte-identical.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix_path = out / "contribution_matrix.csv"
    matrix_path.write_text(
        scoring.matrix_csv(report.matrix_rows, report.matrix_cols, report.matrix),
        encoding="utf-8")

    points_path = out / "scaling_points.csv"
    lines = ["participant_id,contributed_bytes,ex_ante_centi,ex_post_centi"]
    for a in report.agents:
        lines.append(f"{a['participant_id']},{a['bytes']},{a['ex_ante_centi']},{a['ex_post_centi']}")
    points_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    series_path = out / "price_series.csv"
    lines = ["day,project_id,last_price_centi"]
    for pid in sorted(report.price_series):
        for day, price in enumerate(report.price_series[pid]):
            lines.append(f"{day},{pid},{price}")
    series_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    summary_path = out / "summary.txt"
    probe = creative_destruction_probe(report)
    summary = [
        f"seed: {report.seed}",
        f"projects: {report.n_projects}",
        f"trades: {report.n_trades}",
        f"scaling slope (portfolio value vs bytes): {_fmt(report.slope)}",
        f"r_squared: {_fmt(report.r_squared)}",
        f"liquidity (trades/project/day): {report.liquidity_trades_per_project_day:.4f}",
        f"rank correlation(final price, true value): {_fmt(report.price_value_spearman)}",
        f"max/mean contribution ratio: {_fmt(report.max_mean_contribution_ratio)}",
        f"bottom-quartile projects below founding price: {_fmt(probe.bottom_quartile_below_founding_share)}",
        f"journal digest: {report.journal_digest}",
    ]
    summary_path.write_text("\n".join(summary) + "\n", encoding="utf-8")
    return [matrix_path, points_path, series_path, summary_path]


def _fmt(x: float | None) -> str:
    return "undefined" if x is None else f"{x:.6f}"
