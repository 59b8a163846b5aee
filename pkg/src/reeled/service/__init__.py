from .app import ServiceConfig, create_app
from .jobs import JobRunner, STAGE_ORDER
from .storage import Storage

__all__ = ["ServiceConfig", "create_app", "JobRunner", "STAGE_ORDER", "Storage"]
