"""Multi-label prediction of ICU Care Escalation Triggers from first-day data."""

from .featurize import FEATURE_NAMES
from .labeler import LABELS, CetLabels, CetRuleConfig

__version__ = "0.1.0"

__all__ = ["FEATURE_NAMES", "LABELS", "CetLabels", "CetRuleConfig", "__version__"]
