"""Feature matrix produced by a fitted pipeline."""
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple
import numpy as np
from privacy.params import ClippingBounds


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """
    Dense n x d feature rows with separately kept targets.

    Targets are NaN where undefined (ccf and recovery_rate exist only for
    defaulted loans) and all-NaN when the matrix came from unlabeled input.
    feature_bounds come from schema metadata, never from the rows.
    """
    column_names: Tuple[str, ...]
    rows: np.ndarray
    feature_bounds: Tuple[ClippingBounds, ...]
    member_ids: Tuple[str, ...] = ()
    default_label: Optional[np.ndarray] = None
    ccf: Optional[np.ndarray] = None
    recovery_rate: Optional[np.ndarray] = None

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim == 1 and rows.size == 0:
            rows = rows.reshape(0, len(self.column_names))
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "feature_bounds", tuple(self.feature_bounds))
        object.__setattr__(self, "member_ids", tuple(self.member_ids))
        if rows.shape[1] != len(self.column_names):
            raise ValueError(f"{rows.shape[1]} columns but {len(self.column_names)} names")
        if len(self.feature_bounds) != len(self.column_names):
            raise ValueError("one clipping bound per column is required")

    @classmethod
    def from_columns(
        cls,
        columns: Sequence[Tuple[str, np.ndarray, ClippingBounds]],
        n_rows: int = 0,
        **targets
    ) -> "FeatureMatrix":
        """Build from (name, values, bounds) triples."""
        if columns:
            rows = np.column_stack([np.asarray(values, dtype=float) for _, values, _ in columns])
        else:
            rows = np.zeros((n_rows, 0))
        return cls(
            column_names=tuple(name for name, _, _ in columns),
            rows=rows,
            feature_bounds=tuple(bounds for _, _, bounds in columns),
            **targets,
        )

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def width(self) -> int:
        return self.rows.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.column_names.index(name)]

    def bounds_of(self, name: str) -> ClippingBounds:
        return self.feature_bounds[self.column_names.index(name)]

    def select_rows(self, mask: np.ndarray) -> "FeatureMatrix":
        """Rows where mask is True, targets included."""
        mask = np.asarray(mask, dtype=bool)
        pick = lambda a: None if a is None else np.asarray(a)[mask]
        return replace(
            self,
            rows=self.rows[mask],
            member_ids=tuple(np.asarray(self.member_ids, dtype=object)[mask]) if self.member_ids else (),
            default_label=pick(self.default_label),
            ccf=pick(self.ccf),
            recovery_rate=pick(self.recovery_rate),
        )

    def select_columns(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = [self.column_names.index(n) for n in names]
        return replace(
            self,
            column_names=tuple(names),
            rows=self.rows[:, idx],
            feature_bounds=tuple(self.feature_bounds[i] for i in idx),
        )

    def has_missing(self) -> bool:
        return bool(np.isnan(self.rows).any())
