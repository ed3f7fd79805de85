"""chatbench: a self-hostable platform for live human evaluation of
conversational AI systems.

Evaluators chat with externally hosted bots inside managed threads, then
complete a config-driven survey; administrators launch, monitor, and
adjudicate tasks and manage crowd workers.
"""

from .bots import BotEndpointSpec, BotGateway, BotTurnRequest, BotTurnResponse, EchoBot, ScriptedBot
from .config import TaskConfig, parse_task_config, survey_render_model, validate_answers
from .rooms import RoomEngine
from .service import create_app
from .storage import SqliteStore
from .topics import Topic, TopicSet, load_topics

__version__ = "0.1.0"

__all__ = [
    "BotEndpointSpec",
    "BotGateway",
    "BotTurnRequest",
    "BotTurnResponse",
    "EchoBot",
    "RoomEngine",
    "ScriptedBot",
    "SqliteStore",
    "TaskConfig",
    "Topic",
    "TopicSet",
    "create_app",
    "load_topics",
    "parse_task_config",
    "survey_render_model",
    "validate_answers",
]
