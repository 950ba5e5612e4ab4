"""Privacy budget accountant with an append-only spend ledger."""
import json
import math
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Union
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError
from core.config import settings
from core.errors import BudgetExhausted, InvalidParams, MalformedDocument, json_path
from core.logging import get_logger
from .params import PrivacyParams

UTC = timezone.utc  # datetime.UTC alias (3.11+)

logger = get_logger(__name__)


class Spend(NamedTuple):
    """Cumulative spend; zero before the first consume."""
    epsilon: float
    delta: float


@dataclass(frozen=True)
class LedgerEntry:
    """One recorded privacy spend."""
    query_id: str
    cost: PrivacyParams
    timestamp: datetime

    def to_dict(self) -> Dict[str, Any]:
        """Convert entry to the exported ledger shape."""
        return {
            "query_id": self.query_id,
            "epsilon": self.cost.epsilon,
            "delta": self.cost.delta,
            "timestamp": self.timestamp.isoformat(),
        }


class PrivacyAccountant:
    """
    Tracks (epsilon, delta) spend against a total budget.

    Spend composes sequentially: spent is the sum of ledger costs in each
    coordinate. consume() is the only mutation and holds a lock, so concurrent
    callers observe some serial order and exhaustion is decided against it.
    """

    def __init__(self, budget: PrivacyParams, tolerance: Optional[float] = None):
        """
        Initialize accountant.

        Args:
            budget: Total allowance
            tolerance: Relative slack for float summation (defaults to settings.budget_tolerance)
        """
        self.budget = budget
        self.tolerance = settings.budget_tolerance if tolerance is None else tolerance
        self._ledger: List[LedgerEntry] = []
        self._lock = threading.Lock()

    @property
    def ledger(self) -> List[LedgerEntry]:
        """Snapshot of the ledger (copy; the ledger itself is append-only)."""
        with self._lock:
            return list(self._ledger)

    @property
    def spent(self) -> Spend:
        """Total spend so far."""
        with self._lock:
            return self._sum(self._ledger)

    @staticmethod
    def _sum(entries: List[LedgerEntry]) -> Spend:
        return Spend(
            epsilon=math.fsum(e.cost.epsilon for e in entries),
            delta=math.fsum(e.cost.delta for e in entries),
        )

    def _exceeds(self, total: float, limit: float) -> bool:
        return total > limit * (1.0 + self.tolerance)

    def consume(self, query_id: str, cost: PrivacyParams) -> "PrivacyAccountant":
        """
        Record a privacy spend.

        Args:
            query_id: Identifier of the data-touching query
            cost: Privacy cost of the query

        Returns:
            This accountant (for chaining)

        Raises:
            BudgetExhausted: If the spend would exceed the budget; the ledger is left unchanged
        """
        if not cost.epsilon > 0:
            raise InvalidParams(f"cost epsilon must be positive, got {cost.epsilon}")

        with self._lock:
            eps_total = math.fsum([e.cost.epsilon for e in self._ledger] + [cost.epsilon])
            delta_total = math.fsum([e.cost.delta for e in self._ledger] + [cost.delta])
            if self._exceeds(eps_total, self.budget.epsilon) or self._exceeds(delta_total, self.budget.delta):
                logger.warning(
                    "Privacy budget exhausted",
                    query_id=query_id,
                    requested_epsilon=cost.epsilon,
                    requested_delta=cost.delta,
                    spent_epsilon=eps_total - cost.epsilon,
                    budget_epsilon=self.budget.epsilon,
                )
                raise BudgetExhausted(
                    f"query '{query_id}' needs epsilon={cost.epsilon:g}, delta={cost.delta:g} "
                    f"but only epsilon={max(0.0, self.budget.epsilon - (eps_total - cost.epsilon)):g}, "
                    f"delta={max(0.0, self.budget.delta - (delta_total - cost.delta)):g} remain",
                    query_id=query_id,
                )
            self._ledger.append(LedgerEntry(query_id=query_id, cost=cost, timestamp=datetime.now(UTC)))

        logger.debug(
            "Privacy spend recorded",
            query_id=query_id,
            epsilon=cost.epsilon,
            delta=cost.delta,
            spent_epsilon=eps_total,
        )
        return self

    def replay_spent(self) -> Spend:
        """Recompute spend from the ledger entries alone."""
        return self._sum(self.ledger)

    def remaining(self) -> Dict[str, float]:
        """Budget left in each coordinate."""
        return {
            "epsilon": max(0.0, self.budget.epsilon - self.spent.epsilon),
            "delta": max(0.0, self.budget.delta - self.spent.delta),
        }

    def summary(self) -> Dict[str, Any]:
        """
        Timestamp-free spend report.

        Returns:
            Budget, spend, remaining and per-query costs
        """
        entries = self.ledger
        return {
            "budget": {"epsilon": self.budget.epsilon, "delta": self.budget.delta},
            "spent": {
                "epsilon": math.fsum(e.cost.epsilon for e in entries),
                "delta": math.fsum(e.cost.delta for e in entries),
            },
            "remaining": self.remaining(),
            "queries": [
                {"query_id": e.query_id, "epsilon": e.cost.epsilon, "delta": e.cost.delta}
                for e in entries
            ],
        }

    def ledger_json(self) -> str:
        """Export the ledger as a JSON array of {query_id, epsilon, delta, timestamp}."""
        return json.dumps([e.to_dict() for e in self.ledger], indent=2)


class LedgerRecord(BaseModel):
    """One entry read back from an exported ledger file."""
    model_config = ConfigDict(frozen=True)

    query_id: str
    epsilon: float = Field(gt=0, allow_inf_nan=False)
    delta: float = Field(ge=0, lt=1)
    timestamp: Optional[datetime] = None


_LEDGER_FILE = TypeAdapter(List[LedgerRecord])


def load_ledger(path: Union[str, Path]) -> List[LedgerRecord]:
    """
    Read a ledger written by PrivacyAccountant.ledger_json.

    Raises:
        MalformedDocument: unreadable JSON, or an entry without a valid
            query_id, epsilon or delta (the path names the field)
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"{path}: invalid JSON: {e.msg} at line {e.lineno}") from e
    except UnicodeDecodeError as e:
        raise MalformedDocument(f"{path}: not UTF-8 text (byte {e.start})") from e
    try:
        return _LEDGER_FILE.validate_python(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise MalformedDocument(f"{path}: {first['msg']}", path=json_path(first["loc"])) from e


@dataclass(frozen=True)
class BudgetPlan:
    """Named stage weights that divide a run budget."""
    weights: Mapping[str, float] = field(default_factory=lambda: dict(settings.budget_plan_map))

    def __post_init__(self):
        if any(w <= 0 for w in self.weights.values()):
            raise InvalidParams(f"budget plan weights must be positive: {dict(self.weights)}")
        if math.fsum(self.weights.values()) > 1.0 + 1e-9:
            raise InvalidParams(f"budget plan weights sum above 1: {dict(self.weights)}")

    def share(self, total: PrivacyParams, stage: str) -> PrivacyParams:
        """
        Get the budget share of a stage.

        Args:
            total: Run budget
            stage: Stage name (e.g. 'preprocess', 'pd')

        Returns:
            The stage's share of the run budget
        """
        if stage not in self.weights:
            raise InvalidParams(f"stage '{stage}' not in budget plan {sorted(self.weights)}")
        return total.scaled(self.weights[stage])
