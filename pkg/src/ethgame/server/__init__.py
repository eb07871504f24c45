from .events import Event, EventLog, Kind
from .replay import ExperimentRecord, Replayer, replay
from .service import ExperimentService
from .export import export_csv

__all__ = [
    "Event",
    "EventLog",
    "Kind",
    "ExperimentRecord",
    "Replayer",
    "replay",
    "ExperimentService",
    "export_csv",
]
