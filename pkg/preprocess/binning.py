"""Fixed, data-independent binning tables for categorical loan attributes."""
from typing import Dict, Tuple

REGION_VOCAB: Tuple[str, ...] = ("Northeast", "Midwest", "South", "West", "OTHER")
HOME_OWNERSHIP_VOCAB: Tuple[str, ...] = ("RENT", "OWN", "MORTGAGE", "OTHER")
PURPOSE_VOCAB: Tuple[str, ...] = ("debt", "credit_card", "home", "major_purchase", "other")

# US census regions.
_REGION_STATES = {
    "Northeast": ("CT", "ME", "MA", "NH", "RI", "VT", "NJ", "NY", "PA"),
    "Midwest": ("IL", "IN", "MI", "OH", "WI", "IA", "KS", "MN", "MO", "NE", "ND", "SD"),
    "South": (
        "DE", "FL", "GA", "MD", "NC", "SC", "VA", "DC", "WV",
        "AL", "KY", "MS", "TN", "AR", "LA", "OK", "TX",
    ),
    "West": ("AZ", "CO", "ID", "MT", "NV", "NM", "UT", "WY", "AK", "CA", "HI", "OR", "WA"),
}
STATE_REGIONS: Dict[str, str] = {
    state: region for region, states in _REGION_STATES.items() for state in states
}

HOME_OWNERSHIP_BINS: Dict[str, str] = {
    "RENT": "RENT",
    "OWN": "OWN",
    "MORTGAGE": "MORTGAGE",
}

PURPOSE_BINS: Dict[str, str] = {
    "debt_consolidation": "debt",
    "credit_card": "credit_card",
    "home_improvement": "home",
    "house": "home",
    "major_purchase": "major_purchase",
    "car": "major_purchase",
}

# column -> (mapping, catch-all bin, vocabulary)
BINNING_TABLES: Dict[str, Tuple[Dict[str, str], str, Tuple[str, ...]]] = {
    "state": (STATE_REGIONS, "OTHER", REGION_VOCAB),
    "home_ownership": (HOME_OWNERSHIP_BINS, "OTHER", HOME_OWNERSHIP_VOCAB),
    "purpose": (PURPOSE_BINS, "other", PURPOSE_VOCAB),
}


def normalize_key(column: str, raw: str) -> str:
    """Normalize a raw category before table lookup."""
    text = str(raw).strip()
    return text.lower() if column == "purpose" else text.upper()
