"""Task configuration: parsing, validation, survey render model, answer checks.

The whole evaluation task is described by one YAML document. Parsing is
strict: unknown keys are rejected at every level so typos in crowdsourced
deployments fail at load time instead of silently changing behavior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Mapping

import yaml

from .bots import BotEndpointSpec
from .errors import ConfigSyntaxError, InvariantError, SchemaError
from .policies import policy_names

QUESTION_KINDS = ("radio", "checkbox", "likert", "freeform")

CROWD_PLATFORMS = ("none", "mock_mturk", "external_url")


@dataclass(frozen=True)
class Question:
    id: str
    prompt: str
    kind: str
    choices: tuple[str, ...] = ()
    scale: tuple[str, ...] = ()
    required: bool = True


@dataclass(frozen=True)
class SurveySpec:
    questions: tuple[Question, ...]

    def question(self, question_id: str) -> Question | None:
        for q in self.questions:
            if q.id == question_id:
                return q
        return None


@dataclass(frozen=True)
class ChatSettings:
    human_turns_required: int
    humans_per_thread: int = 1
    bots_per_thread: int = 1
    policy_name: str = "alternating"
    allow_chat_after_done: bool = False


@dataclass(frozen=True)
class OnboardingSettings:
    agreement_file: Path
    checkbox_texts: tuple[str, ...] = ()


@dataclass(frozen=True)
class LimitSettings:
    # None means unlimited.
    max_threads_per_worker: int | None = None
    max_threads_per_topic: int | None = None


@dataclass(frozen=True)
class CrowdSettings:
    platform: str = "none"
    reward: Decimal | None = None
    title: str = ""
    description: str = ""


@dataclass(frozen=True)
class InstanceSettings:
    tcp_port: int = 8080
    path_prefix: str = ""


@dataclass(frozen=True)
class TaskConfig:
    task_name: str
    chat: ChatSettings
    survey: SurveySpec
    onboarding: OnboardingSettings | None = None
    limits: LimitSettings = field(default_factory=LimitSettings)
    crowd: CrowdSettings = field(default_factory=CrowdSettings)
    bots: tuple[BotEndpointSpec, ...] = ()
    instance: InstanceSettings = field(default_factory=InstanceSettings)

    @property
    def identity(self) -> str:
        return self.task_name


@dataclass(frozen=True)
class Problem:
    question_id: str
    message: str
    value: Any = None

    def to_dict(self) -> dict:
        out = {"question_id": self.question_id, "message": self.message}
        if self.value is not None:
            out["value"] = self.value
        return out


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[Problem, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def to_dict(self) -> dict:
        return {"ok": self.ok, "problems": [p.to_dict() for p in self.problems]}


# --------------------------------------------------------------------------
# parsing helpers

def _expect_mapping(value: Any, path: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise SchemaError(f"{path or 'document'} must be a mapping, got {type(value).__name__}", path=path)
    return value


def _reject_unknown(mapping: Mapping, allowed: set[str], path: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        where = path or "top level"
        raise SchemaError(f"unknown key(s) {unknown} at {where}", path=path or unknown[0])


def _get_str(mapping: Mapping, key: str, path: str, *, default: str | None = None) -> str:
    if key not in mapping:
        if default is not None:
            return default
        raise SchemaError(f"missing required field {path}", path=path)
    value = mapping[key]
    if not isinstance(value, str):
        raise SchemaError(f"{path} must be a string, got {type(value).__name__}", path=path)
    return value


def _get_int(mapping: Mapping, key: str, path: str, *, default: int | None = None,
             minimum: int | None = None, maximum: int | None = None) -> int:
    if key not in mapping:
        if default is not None:
            return default
        raise SchemaError(f"missing required field {path}", path=path)
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{path} must be an integer, got {type(value).__name__}", path=path)
    if minimum is not None and value < minimum:
        raise InvariantError(f"{path} must be >= {minimum}, got {value}", path=path)
    if maximum is not None and value > maximum:
        raise InvariantError(f"{path} must be <= {maximum}, got {value}", path=path)
    return value


def _get_bool(mapping: Mapping, key: str, path: str, *, default: bool) -> bool:
    if key not in mapping:
        return default
    value = mapping[key]
    if not isinstance(value, bool):
        raise SchemaError(f"{path} must be a boolean, got {type(value).__name__}", path=path)
    return value


def _get_str_list(mapping: Mapping, key: str, path: str, *, default: tuple[str, ...] | None = None) -> tuple[str, ...]:
    if key not in mapping:
        if default is not None:
            return default
        raise SchemaError(f"missing required field {path}", path=path)
    value = mapping[key]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{path} must be a list of strings", path=path)
    return tuple(value)


def _get_limit(mapping: Mapping, key: str, path: str) -> int | None:
    # A limit is a positive int, the string "unlimited", or null/omitted.
    if key not in mapping:
        return None
    value = mapping[key]
    if value is None or value == "unlimited":
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{path} must be a positive integer or 'unlimited'", path=path)
    if value < 1:
        raise InvariantError(f"{path} must be positive, got {value}", path=path)
    return value


# --------------------------------------------------------------------------
# section parsers

def _parse_chat(raw: Any) -> ChatSettings:
    m = _expect_mapping(raw, "chat")
    _reject_unknown(m, {"human_turns_required", "humans_per_thread", "bots_per_thread",
                        "policy_name", "allow_chat_after_done"}, "chat")
    policy = _get_str(m, "policy_name", "chat.policy_name", default="alternating")
    if policy not in policy_names():
        raise InvariantError(
            f"chat.policy_name must be one of {sorted(policy_names())}, got {policy!r}",
            path="chat.policy_name")
    return ChatSettings(
        human_turns_required=_get_int(m, "human_turns_required", "chat.human_turns_required", minimum=0),
        humans_per_thread=_get_int(m, "humans_per_thread", "chat.humans_per_thread", default=1, minimum=1),
        bots_per_thread=_get_int(m, "bots_per_thread", "chat.bots_per_thread", default=1, minimum=0),
        policy_name=policy,
        allow_chat_after_done=_get_bool(m, "allow_chat_after_done", "chat.allow_chat_after_done", default=False),
    )


def _parse_question(raw: Any, index: int) -> Question:
    path = f"survey.questions[{index}]"
    m = _expect_mapping(raw, path)
    _reject_unknown(m, {"id", "prompt", "kind", "choices", "scale", "required"}, path)
    qid = _get_str(m, "id", f"{path}.id")
    if not qid:
        raise InvariantError(f"{path}.id must be nonempty", path=f"{path}.id")
    kind = _get_str(m, "kind", f"{path}.kind")
    if kind not in QUESTION_KINDS:
        raise SchemaError(f"{path}.kind must be one of {list(QUESTION_KINDS)}, got {kind!r}",
                          path=f"{path}.kind")
    choices = _get_str_list(m, "choices", f"{path}.choices", default=())
    scale = _get_str_list(m, "scale", f"{path}.scale", default=())

    if kind in ("radio", "checkbox"):
        if len(choices) < 2:
            raise InvariantError(f"{path}.choices must list at least 2 options for kind={kind}",
                                 path=f"{path}.choices")
        if scale:
            raise InvariantError(f"{path}.scale is not allowed for kind={kind}", path=f"{path}.scale")
    elif kind == "likert":
        if len(scale) < 2:
            raise InvariantError(f"{path}.scale must list at least 2 labeled points for kind=likert",
                                 path=f"{path}.scale")
        if choices:
            raise InvariantError(f"{path}.choices is not allowed for kind=likert", path=f"{path}.choices")
    else:  # freeform
        if choices or scale:
            raise InvariantError(f"{path} must not carry choices/scale for kind=freeform", path=path)

    return Question(
        id=qid,
        prompt=_get_str(m, "prompt", f"{path}.prompt"),
        kind=kind,
        choices=choices,
        scale=scale,
        required=_get_bool(m, "required", f"{path}.required", default=True),
    )


def _parse_survey(raw: Any) -> SurveySpec:
    m = _expect_mapping(raw, "survey")
    _reject_unknown(m, {"questions"}, "survey")
    raw_questions = m.get("questions")
    if not isinstance(raw_questions, list) or not raw_questions:
        raise SchemaError("survey.questions must be a nonempty list", path="survey.questions")
    questions = tuple(_parse_question(q, i) for i, q in enumerate(raw_questions))
    seen: dict[str, int] = {}
    for i, q in enumerate(questions):
        if q.id in seen:
            raise InvariantError(
                f"duplicate question id {q.id!r} at survey.questions[{seen[q.id]}] and survey.questions[{i}]",
                path=f"survey.questions[{i}].id")
        seen[q.id] = i
    return SurveySpec(questions=questions)


def _parse_onboarding(raw: Any, base_dir: Path) -> OnboardingSettings:
    m = _expect_mapping(raw, "onboarding")
    _reject_unknown(m, {"agreement_file", "checkbox_texts"}, "onboarding")
    agreement = Path(_get_str(m, "agreement_file", "onboarding.agreement_file"))
    if not agreement.is_absolute():
        agreement = base_dir / agreement
    if not agreement.is_file():
        raise InvariantError(f"onboarding.agreement_file does not exist or is not a file: {agreement}",
                             path="onboarding.agreement_file")
    try:
        agreement.read_bytes()
    except OSError as err:
        raise InvariantError(f"onboarding.agreement_file is not readable: {err}",
                             path="onboarding.agreement_file") from err
    return OnboardingSettings(
        agreement_file=agreement,
        checkbox_texts=_get_str_list(m, "checkbox_texts", "onboarding.checkbox_texts", default=()),
    )


def _parse_limits(raw: Any) -> LimitSettings:
    m = _expect_mapping(raw, "limits")
    _reject_unknown(m, {"max_threads_per_worker", "max_threads_per_topic"}, "limits")
    return LimitSettings(
        max_threads_per_worker=_get_limit(m, "max_threads_per_worker", "limits.max_threads_per_worker"),
        max_threads_per_topic=_get_limit(m, "max_threads_per_topic", "limits.max_threads_per_topic"),
    )


def _parse_crowd(raw: Any) -> CrowdSettings:
    m = _expect_mapping(raw, "crowd")
    _reject_unknown(m, {"platform", "reward", "title", "description"}, "crowd")
    platform = _get_str(m, "platform", "crowd.platform", default="none")
    if platform not in CROWD_PLATFORMS:
        raise SchemaError(f"crowd.platform must be one of {list(CROWD_PLATFORMS)}, got {platform!r}",
                          path="crowd.platform")
    reward: Decimal | None = None
    if "reward" in m and m["reward"] is not None:
        raw_reward = m["reward"]
        if not isinstance(raw_reward, (str, int, float)) or isinstance(raw_reward, bool):
            raise SchemaError("crowd.reward must be a decimal amount", path="crowd.reward")
        try:
            reward = Decimal(str(raw_reward))
        except InvalidOperation as err:
            raise SchemaError(f"crowd.reward is not a valid decimal: {raw_reward!r}",
                              path="crowd.reward") from err
        if reward < 0:
            raise InvariantError(f"crowd.reward must be nonnegative, got {reward}", path="crowd.reward")
    if platform != "none" and reward is None:
        raise InvariantError("crowd.reward is required when crowd.platform is not 'none'",
                             path="crowd.reward")
    return CrowdSettings(
        platform=platform,
        reward=reward,
        title=_get_str(m, "title", "crowd.title", default=""),
        description=_get_str(m, "description", "crowd.description", default=""),
    )


def _parse_bot(raw: Any, index: int) -> BotEndpointSpec:
    path = f"bots[{index}]"
    m = _expect_mapping(raw, path)
    _reject_unknown(m, {"name", "base_url", "timeout", "max_retries", "default_params"}, path)
    name = _get_str(m, "name", f"{path}.name")
    if not name:
        raise InvariantError(f"{path}.name must be nonempty", path=f"{path}.name")
    timeout_raw = m.get("timeout", 30)
    if isinstance(timeout_raw, bool) or not isinstance(timeout_raw, (int, float)):
        raise SchemaError(f"{path}.timeout must be a number of seconds", path=f"{path}.timeout")
    if timeout_raw <= 0:
        raise InvariantError(f"{path}.timeout must be > 0, got {timeout_raw}", path=f"{path}.timeout")
    params = m.get("default_params", {})
    if not isinstance(params, Mapping):
        raise SchemaError(f"{path}.default_params must be a mapping", path=f"{path}.default_params")
    return BotEndpointSpec(
        name=name,
        base_url=_get_str(m, "base_url", f"{path}.base_url"),
        timeout=float(timeout_raw),
        max_retries=_get_int(m, "max_retries", f"{path}.max_retries", default=2, minimum=0),
        default_params=dict(params),
    )


def _parse_instance(raw: Any) -> InstanceSettings:
    m = _expect_mapping(raw, "instance")
    _reject_unknown(m, {"tcp_port", "path_prefix"}, "instance")
    prefix = _get_str(m, "path_prefix", "instance.path_prefix", default="")
    if prefix:
        if not prefix.startswith("/") or prefix.endswith("/"):
            raise InvariantError(
                "instance.path_prefix must start with '/' and not end with '/'",
                path="instance.path_prefix")
    return InstanceSettings(
        tcp_port=_get_int(m, "tcp_port", "instance.tcp_port", default=8080, minimum=1, maximum=65535),
        path_prefix=prefix,
    )


_TOP_LEVEL_KEYS = {"task_name", "chat", "survey", "onboarding", "limits", "crowd", "bots", "instance"}


def parse_task_config(yaml_text: str, base_dir: Path | str | None = None) -> TaskConfig:
    """Parse and fully validate a task configuration document.

    ``base_dir`` anchors relative paths (the onboarding agreement file);
    defaults to the current working directory.
    """
    try:
        raw = yaml.safe_load(yaml_text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        line = mark.line + 1 if mark else None
        column = mark.column + 1 if mark else None
        raise ConfigSyntaxError(f"malformed YAML: {err}", line=line, column=column) from err
    if raw is None:
        raise ConfigSyntaxError("empty configuration document", line=1, column=1)
    root = _expect_mapping(raw, "")
    _reject_unknown(root, _TOP_LEVEL_KEYS, "")

    task_name = _get_str(root, "task_name", "task_name")
    if not task_name:
        raise InvariantError("task_name must be nonempty", path="task_name")
    if "chat" not in root:
        raise SchemaError("missing required field chat", path="chat")
    if "survey" not in root:
        raise SchemaError("missing required field survey", path="survey")

    chat = _parse_chat(root["chat"])
    survey = _parse_survey(root["survey"])
    onboarding = None
    if root.get("onboarding") is not None:
        onboarding = _parse_onboarding(root["onboarding"], Path(base_dir) if base_dir else Path.cwd())
    limits = _parse_limits(root["limits"]) if root.get("limits") is not None else LimitSettings()
    crowd = _parse_crowd(root["crowd"]) if root.get("crowd") is not None else CrowdSettings()

    raw_bots = root.get("bots", [])
    if not isinstance(raw_bots, list):
        raise SchemaError("bots must be a list", path="bots")
    bots = tuple(_parse_bot(b, i) for i, b in enumerate(raw_bots))
    names = [b.name for b in bots]
    for i, name in enumerate(names):
        if name in names[:i]:
            raise InvariantError(f"duplicate bot name {name!r} at bots[{i}]", path=f"bots[{i}].name")
    if len(bots) < chat.bots_per_thread:
        raise InvariantError(
            f"bots lists {len(bots)} endpoint(s) but chat.bots_per_thread is {chat.bots_per_thread}",
            path="bots")

    instance = _parse_instance(root["instance"]) if root.get("instance") is not None else InstanceSettings()

    return TaskConfig(
        task_name=task_name,
        chat=chat,
        survey=survey,
        onboarding=onboarding,
        limits=limits,
        crowd=crowd,
        bots=bots,
        instance=instance,
    )


def serialize_task_config(config: TaskConfig) -> str:
    """Dump a config back to normalized YAML (parse . serialize = identity)."""
    doc: dict[str, Any] = {
        "task_name": config.task_name,
        "chat": {
            "human_turns_required": config.chat.human_turns_required,
            "humans_per_thread": config.chat.humans_per_thread,
            "bots_per_thread": config.chat.bots_per_thread,
            "policy_name": config.chat.policy_name,
            "allow_chat_after_done": config.chat.allow_chat_after_done,
        },
        "survey": {"questions": []},
    }
    for q in config.survey.questions:
        entry: dict[str, Any] = {"id": q.id, "prompt": q.prompt, "kind": q.kind}
        if q.choices:
            entry["choices"] = list(q.choices)
        if q.scale:
            entry["scale"] = list(q.scale)
        entry["required"] = q.required
        doc["survey"]["questions"].append(entry)
    if config.onboarding is not None:
        doc["onboarding"] = {
            "agreement_file": str(config.onboarding.agreement_file),
            "checkbox_texts": list(config.onboarding.checkbox_texts),
        }
    doc["limits"] = {
        "max_threads_per_worker": config.limits.max_threads_per_worker or "unlimited",
        "max_threads_per_topic": config.limits.max_threads_per_topic or "unlimited",
    }
    doc["crowd"] = {
        "platform": config.crowd.platform,
        "title": config.crowd.title,
        "description": config.crowd.description,
    }
    if config.crowd.reward is not None:
        doc["crowd"]["reward"] = str(config.crowd.reward)
    if config.bots:
        doc["bots"] = [
            {
                "name": b.name,
                "base_url": b.base_url,
                "timeout": b.timeout,
                "max_retries": b.max_retries,
                "default_params": dict(b.default_params),
            }
            for b in config.bots
        ]
    doc["instance"] = {
        "tcp_port": config.instance.tcp_port,
        "path_prefix": config.instance.path_prefix,
    }
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)


# --------------------------------------------------------------------------
# survey render model

def survey_render_model(spec: SurveySpec) -> list[dict]:
    """Self-describing render model: everything the UI needs, in order."""
    model = []
    for q in spec.questions:
        entry: dict[str, Any] = {"id": q.id, "kind": q.kind, "prompt": q.prompt, "required": q.required}
        if q.kind in ("radio", "checkbox"):
            entry["choices"] = list(q.choices)
        elif q.kind == "likert":
            entry["scale"] = list(q.scale)
        model.append(entry)
    return model


def render_model_json(spec: SurveySpec) -> str:
    """Canonical wire form of the render model; byte-stable for a given spec."""
    return json.dumps({"survey": survey_render_model(spec)}, ensure_ascii=False, separators=(",", ":"))


# --------------------------------------------------------------------------
# answer validation

def _is_answered(question: Question, value: Any) -> bool:
    if value is None:
        return False
    if question.kind == "freeform":
        return isinstance(value, str) and bool(value.strip())
    if question.kind == "checkbox":
        return isinstance(value, list) and bool(value)
    return value != ""


def validate_answers(spec: SurveySpec, answers: Mapping[str, Any]) -> ValidationReport:
    """Check a submitted answer map against the survey contract.

    Violations are data in the report, never exceptions. The report is empty
    iff every required question is answered and every present answer matches
    its question's kind.
    """
    problems: list[Problem] = []
    for qid in answers:
        if spec.question(qid) is None:
            problems.append(Problem(qid, "no such question in the survey", answers[qid]))

    for q in spec.questions:
        value = answers.get(q.id)
        if not _is_answered(q, value):
            if q.required:
                problems.append(Problem(q.id, "required question not answered"))
            continue
        if q.kind == "radio":
            if not isinstance(value, str) or value not in q.choices:
                problems.append(Problem(q.id, "answer is not one of the allowed choices", value))
        elif q.kind == "checkbox":
            if (not isinstance(value, list)
                    or not all(isinstance(v, str) for v in value)
                    or len(set(value)) != len(value)
                    or not set(value) <= set(q.choices)):
                problems.append(Problem(q.id, "answer must be a list of distinct allowed choices", value))
        elif q.kind == "likert":
            if not isinstance(value, str) or value not in q.scale:
                problems.append(Problem(q.id, "answer is not one of the scale points", value))
        else:  # freeform
            if not isinstance(value, str):
                problems.append(Problem(q.id, "answer must be a string", value))
    return ValidationReport(problems=tuple(problems))


def effective_answers(spec: SurveySpec, answers: Mapping[str, Any]) -> dict[str, Any]:
    """Answers that actually count: drops unanswered optional entries.

    Must only be called after :func:`validate_answers` reported no problems.
    """
    out: dict[str, Any] = {}
    for q in spec.questions:
        value = answers.get(q.id)
        if _is_answered(q, value):
            out[q.id] = value
    return out
