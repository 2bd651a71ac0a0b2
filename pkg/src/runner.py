"""Chat-completion client that collects sampled answers of a model endpoint.

Every answer is appended to a JSON-Lines file as soon as it arrives, so an
interrupted batch can be resumed without asking twice for the same run.
"""
import json
import logging
import os
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import backoff
import requests
from tqdm import tqdm

from .dataset import RecordError, TaskInstance
from .prompt import build_prompt

log = logging.getLogger(__name__)

RESPONSE_KEYS = (
    "instance_id",
    "run_index",
    "raw_text",
    "prompt_tokens",
    "output_tokens",
    "latency_ms",
    "attempts",
    "error",
)


class ConfigError(ValueError):
    pass


class EndpointError(Exception):
    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class AuthenticationError(EndpointError):
    pass


class RetryableStatus(EndpointError):
    def __init__(self, status: int):
        super().__init__(f"HTTP {status}")
        self.status = status


@dataclass(frozen=True)
class RetryConfig:
    max_attempts: int = 5
    backoff_base_ms: int = 500

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ConfigError(f"Invalid max_attempts: {self.max_attempts}")
        if self.backoff_base_ms < 0:
            raise ConfigError(f"Invalid backoff_base_ms: {self.backoff_base_ms}")


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    max_output_tokens: int
    temperature: float = 1.0
    top_p: float = 0.95
    api_key_env_var_name: str | None = None
    max_concurrent_requests: int = 4
    timeout_s: float = 300.0
    retry: RetryConfig = field(default_factory=RetryConfig)
    extra_body: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"Invalid temperature: {self.temperature}")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigError(f"Invalid top_p: {self.top_p}")
        if self.max_output_tokens < 1:
            raise ConfigError(f"Invalid max_output_tokens: {self.max_output_tokens}")
        if self.max_concurrent_requests < 1:
            raise ConfigError(
                f"Invalid max_concurrent_requests: {self.max_concurrent_requests}"
            )
        if self.timeout_s <= 0:
            raise ConfigError(f"Invalid timeout_s: {self.timeout_s}")

    @classmethod
    def from_dict(cls, section: dict[str, Any]) -> "EndpointConfig":
        section = dict(section)
        try:
            section["retry"] = RetryConfig(**(section.get("retry") or {}))
            section["extra_body"] = dict(section.get("extra_body") or {})
            return cls(**section)
        except TypeError as error:
            # Unknown or missing keys.
            raise ConfigError(f"Invalid endpoint section: {error}") from error


@dataclass(frozen=True)
class ModelResponse:
    instance_id: str
    run_index: int
    raw_text: str | None
    prompt_tokens: int
    output_tokens: int
    latency_ms: float
    attempts: int
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_record(self) -> dict:
        return asdict(self)

    @classmethod
    def from_record(cls, record: dict, line: int = 0) -> "ModelResponse":
        if set(record) != set(RESPONSE_KEYS):
            raise RecordError(line, "keys", f"Expected the keys {RESPONSE_KEYS}")
        return cls(**record)


@dataclass
class BatchSummary:
    requested: int = 0
    skipped: int = 0
    failures: Counter = field(default_factory=Counter)

    @property
    def n_failures(self) -> int:
        return sum(self.failures.values())


def read_responses(path: Path) -> list[ModelResponse]:
    responses = []
    with open(path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as error:
                raise RecordError(line_number, "json", error.msg) from error
            responses.append(ModelResponse.from_record(record, line_number))

    return responses


def drop_truncated_tail(path: Path) -> bool:
    """Remove a last line cut short by a killed writer.
    Returns whether something was removed.
    """
    if not path.exists():
        return False

    with open(path, "rb+") as file:
        content = file.read()
        if not content or content.endswith(b"\n"):
            return False
        file.truncate(content.rfind(b"\n") + 1)

    log.warning(f"Dropped a truncated last line from {path}")
    return True


def persisted_runs(path: Path) -> set[tuple[str, int]]:
    """The `(instance_id, run_index)` pairs in the file, failed runs included."""
    if not path.exists():
        return set()
    return {(r.instance_id, r.run_index) for r in read_responses(path)}


class Runner:
    """Sample `k` answers per instance from an OpenAI-compatible endpoint.

    The requests run in a pool of `max_concurrent_requests` threads. Only the
    calling thread writes to the response file.
    """

    def __init__(
        self,
        config: EndpointConfig,
        include_guidance: bool = True,
        n_few_shot: int = 3,
    ):
        self.config = config
        self.include_guidance = include_guidance
        self.n_few_shot = n_few_shot
        self.url = config.base_url.rstrip("/") + "/chat/completions"

        self.headers = {"Content-Type": "application/json"}
        if config.api_key_env_var_name:
            api_key = os.environ.get(config.api_key_env_var_name)
            if not api_key:
                raise AuthenticationError(
                    f"Environment variable {config.api_key_env_var_name} is not set"
                )
            self.headers["Authorization"] = f"Bearer {api_key}"

        self._local = threading.local()

    @property
    def session(self) -> requests.Session:
        # One session per worker thread.
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def request_body(self, instance: TaskInstance) -> dict[str, Any]:
        prompt = build_prompt(instance, self.include_guidance, self.n_few_shot)
        return {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt.assembled}],
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
            "max_tokens": self.config.max_output_tokens,
            **self.config.extra_body,
        }

    def complete(self, body: dict[str, Any]) -> tuple[dict, int]:
        """Post the body until it succeeds or the retry budget is spent.

        ---
        Returns:
            The decoded answer of the endpoint and the number of attempts.

        ---
        Raises:
            AuthenticationError: The endpoint refused the credentials.
            EndpointError: Any other client error, or the retries ran out.
        """
        attempts = 0

        @backoff.on_exception(
            backoff.expo,
            (RetryableStatus, requests.ConnectionError, requests.Timeout),
            max_tries=self.config.retry.max_attempts,
            jitter=backoff.full_jitter,
            factor=self.config.retry.backoff_base_ms / 1000,
        )
        def post() -> dict:
            nonlocal attempts
            attempts += 1
            response = self.session.post(
                self.url, json=body, headers=self.headers, timeout=self.config.timeout_s
            )
            match response.status_code:
                case 200:
                    return response.json()
                case 401 | 403:
                    raise AuthenticationError(f"HTTP {response.status_code}")
                case 429:
                    raise RetryableStatus(429)
                case status if status >= 500:
                    raise RetryableStatus(status)
                case status:
                    raise EndpointError(f"HTTP {status}: {response.text[:200]}")

        try:
            return post(), attempts
        except AuthenticationError:
            raise
        except (EndpointError, requests.RequestException, ValueError) as error:
            message = f"{error} after {attempts} attempts"
            raise EndpointError(message, attempts) from error

    def fetch(self, instance: TaskInstance, run_index: int) -> ModelResponse:
        """One run of one instance. Transport failures give a failed record."""
        body = self.request_body(instance)
        start = time.perf_counter()
        try:
            data, attempts = self.complete(body)
            error = None
        except AuthenticationError:
            raise
        except EndpointError as exception:
            data, attempts = {}, exception.attempts
            error = str(exception)
            log.warning(f"{instance.id} run {run_index}: {error}")
        latency_ms = round((time.perf_counter() - start) * 1000, 1)

        usage = data.get("usage") or {}
        choices = data.get("choices") or [{}]
        raw_text = (choices[0].get("message") or {}).get("content")
        if error is None and raw_text is None:
            error = "No message content in the answer"

        return ModelResponse(
            instance_id=instance.id,
            run_index=run_index,
            raw_text=raw_text,
            prompt_tokens=usage.get("prompt_tokens", -1),
            output_tokens=usage.get("completion_tokens", -1),
            latency_ms=latency_ms,
            attempts=attempts,
            error=error,
        )

    def run_instance(
        self, instance: TaskInstance, k_runs: int = 5
    ) -> list[ModelResponse]:
        """Sample the answers of a single instance, sorted by run index.
        Nothing is written to disk: use `run_batch` for resumable runs.
        """
        responses = []
        pending = [(instance, run_index) for run_index in range(k_runs)]
        self._run(pending, responses.append)
        return sorted(responses, key=lambda response: response.run_index)

    def run_batch(
        self, instances: list[TaskInstance], k_runs: int, path: Path
    ) -> BatchSummary:
        """Collect `k_runs` answers for every instance, appending them to `path`.

        The pairs already present in the file are not asked again. A last
        line left incomplete by a killed run is dropped, and asked again.

        ---
        Args:
            instances: The tasks to submit.
            k_runs: Number of independent samples per task.
            path: The response file, created if missing.

        ---
        Returns:
            The number of requests made, skipped, and the failures per instance.

        ---
        Raises:
            AuthenticationError: Aborts the batch. Persisted records are kept.
        """
        assert k_runs >= 0
        drop_truncated_tail(path)
        done = persisted_runs(path)
        pending = [
            (instance, run_index)
            for instance in instances
            for run_index in range(k_runs)
            if (instance.id, run_index) not in done
        ]
        summary = BatchSummary(
            requested=len(pending), skipped=len(instances) * k_runs - len(pending)
        )
        log.info(f"{len(pending)} requests to make, {summary.skipped} already done")

        with open(path, "a", encoding="utf-8") as file:

            def persist(response: ModelResponse):
                file.write(json.dumps(response.to_record()) + "\n")
                file.flush()
                if response.failed:
                    summary.failures[response.instance_id] += 1

            self._run(pending, persist)

        if summary.failures:
            log.warning(f"Failed runs per instance: {dict(summary.failures)}")
        return summary

    def _run(self, pending: list[tuple[TaskInstance, int]], sink):
        if not pending:
            return

        executor = ThreadPoolExecutor(max_workers=self.config.max_concurrent_requests)
        try:
            futures = [
                executor.submit(self.fetch, instance, run_index)
                for instance, run_index in pending
            ]
            for future in tqdm(as_completed(futures), total=len(futures)):
                sink(future.result())
        finally:
            executor.shutdown(wait=True, cancel_futures=True)
