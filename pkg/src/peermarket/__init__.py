"""peermarket: a knowledge-production market engine.

Contributions to wiki-style projects earn project shares at a rate
inversely proportional to the project's market price; shares trade on a
per-project continuous double auction; portfolios are graded against
instructor-assigned ex-post values. Everything is event-sourced and
deterministically replayable.
"""

from .contributions import count_contributed_bytes
from .engine import EngineConfig, MarketEngine
from .errors import MarketError
from .journal import replay_journal, replay_records
from .money import fmt_er, fmt_shares, notional_centi, round_half_up
from .simharness import SimConfig, run_semester

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "MarketEngine",
    "MarketError",
    "SimConfig",
    "count_contributed_bytes",
    "fmt_er",
    "fmt_shares",
    "notional_centi",
    "replay_journal",
    "replay_records",
    "round_half_up",
    "run_semester",
    "__version__",
]
