# -*- coding: utf-8 -*-
"""
Rate-limited, retrying, caching JSON client shared by all metadata sources.
This module and the source clients built on it are the only network users.
"""
import json
import threading
import time
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional
from urllib.parse import urlencode

import requests
from loguru import logger
from tenacity import (
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_random_exponential,
)

from dsinfluence.cache import ResponseCache
from dsinfluence.errors import (
    AuthenticationError,
    MalformedResponseError,
    NotFoundError,
    OfflineCacheMiss,
    RateLimitedError,
    SourceError,
    TransientSourceError,
)

RETRYABLE = (RateLimitedError, TransientSourceError, requests.ConnectionError, requests.Timeout)


class TokenBucket:
    """
    Allows `capacity` requests at once and `rate` requests per second
    on average. Shared by every worker of one source.
    """

    def __init__(
        self,
        rate: float,
        capacity: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be > 0 requests per second")
        if capacity < 1:
            raise ValueError("capacity must allow at least one request")
        self.rate = float(rate)
        self.capacity = float(capacity)
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.last = clock()
        self.lock = threading.Lock()

    def acquire(self):
        """Block until a token is available."""
        while True:
            with self.lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.last) * self.rate)
                self.last = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait_s = (1.0 - self.tokens) / self.rate
            self.sleep(wait_s)


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base_delay: float = 0.5
    max_delay: float = 30.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def retrying(self, sleep: Callable[[float], None], before_sleep=None) -> Retrying:
        return Retrying(
            stop=stop_after_attempt(self.max_attempts),
            wait=wait_random_exponential(multiplier=self.base_delay, max=self.max_delay),
            retry=retry_if_exception_type(RETRYABLE),
            sleep=sleep,
            before_sleep=before_sleep,
            reraise=True,
        )


def request_key(path: str, params: Optional[Mapping[str, object]] = None) -> str:
    """Canonical request line used as cache key"""
    query = urlencode(sorted((params or {}).items()))
    return f"GET {path}?{query}" if query else f"GET {path}"


class SourceClient:
    """
    JSON over HTTP for one source. Credentials are sent with every request
    but are never part of the cache key.
    """

    def __init__(
        self,
        source: str,
        base_url: str,
        limiter: TokenBucket,
        retry: RetryPolicy = RetryPolicy(),
        session: Optional[requests.Session] = None,
        cache: Optional[ResponseCache] = None,
        offline: bool = False,
        headers: Optional[Dict[str, str]] = None,
        auth_params: Optional[Dict[str, str]] = None,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 30.0,
    ):
        self.source = source
        self.base_url = base_url.rstrip("/")
        self.limiter = limiter
        self.retry = retry
        self.session = session or requests.Session()
        self.cache = cache
        self.offline = offline
        self.headers = headers or {}
        self.auth_params = auth_params or {}
        self.sleep = sleep
        self.timeout = timeout
        self.requests = 0
        self.retries = 0
        self._counter_lock = threading.Lock()

    def _log_retry(self, retry_state):
        with self._counter_lock:
            self.retries += 1
        logger.warning(
            f"{self.source}: attempt {retry_state.attempt_number} failed with "
            f"{retry_state.outcome.exception()!r}, retrying"
        )

    def get(self, path: str, params: Optional[Dict[str, object]] = None) -> dict:
        """
        Raises:
            NotFoundError: the source does not know the requested entity
            AuthenticationError: the credentials were rejected
            RateLimitedError: throttled on every allowed attempt
            OfflineCacheMiss: offline and the response was never cached
            MalformedResponseError: the body is not a JSON object
        """
        key = request_key(path, params)
        if self.cache is not None:
            hit = self.cache.get(self.source, key)
            if hit is not None:
                status, body = hit
                logger.debug(f"{self.source}: cache hit {key}")
                if status == 404:
                    raise NotFoundError(f"{self.source}: {key} not found")
                return self._decode(key, body)
        if self.offline:
            raise OfflineCacheMiss(f"{self.source}: {key} not cached")

        for attempt in self.retry.retrying(self.sleep, self._log_retry):
            with attempt:
                status, body = self._send(path, params)
        if status == 404:
            if self.cache is not None:
                self.cache.put(self.source, key, status, body)
            raise NotFoundError(f"{self.source}: {key} not found")
        data = self._decode(key, body)
        if self.cache is not None:
            self.cache.put(self.source, key, status, body)
        return data

    def _decode(self, key: str, body: str) -> dict:
        try:
            data = json.loads(body)
        except ValueError as err:
            raise MalformedResponseError(f"{self.source}: {key} answered with invalid JSON ({err})")
        if not isinstance(data, dict):
            raise MalformedResponseError(f"{self.source}: {key} answered with {type(data).__name__}")
        return data

    def _send(self, path: str, params: Optional[Dict[str, object]]):
        self.limiter.acquire()
        with self._counter_lock:
            self.requests += 1
        url = f"{self.base_url}/{path.lstrip('/')}"
        logger.debug(f"{self.source}: GET {url} {params or ''}")
        response = self.session.get(
            url,
            params={**(params or {}), **self.auth_params},
            headers=self.headers,
            timeout=self.timeout,
        )
        status = response.status_code
        if status == 429:
            raise RateLimitedError(f"{self.source}: throttled on {path}")
        if status in (401, 403):
            raise AuthenticationError(f"{self.source}: credentials rejected ({status})")
        if status >= 500:
            raise TransientSourceError(f"{self.source}: server error {status} on {path}")
        if status == 404:
            return status, "{}"
        if status >= 400:
            raise SourceError(f"{self.source}: unexpected status {status} on {path}")
        return status, response.text
