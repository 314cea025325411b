from .app import app, create_app
from .handlers import dispatch, handle
from .models import Envelope, REQUEST_TYPES

__all__ = ["app", "create_app", "dispatch", "handle", "Envelope", "REQUEST_TYPES"]
