"""Token-curated registry engine specialised to a scholarly journal, plus an agent-based simulator."""

from .errors import ProtocolError
from .events import EventLog
from .journal import Journal, JournalConfig, ManuscriptState, ReviewMode
from .ledger import AccountKind, Distribution, EscrowPurpose, EscrowStatus, Ledger
from .replay import replay
from .tcr import Direction, Registry, RegistryConfig, TieRule

__version__ = "0.1.0"

__all__ = [
    "ProtocolError", "EventLog", "Journal", "JournalConfig", "ManuscriptState", "ReviewMode",
    "AccountKind", "Distribution", "EscrowPurpose", "EscrowStatus", "Ledger", "replay",
    "Direction", "Registry", "RegistryConfig", "TieRule", "__version__",
]
