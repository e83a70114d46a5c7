import tempfile
import unittest
from pathlib import Path

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
from dsinfluence.transport import RetryPolicy, SourceClient, TokenBucket, request_key
from dsinfluence.unittests.mocks import (
    SCHOLAR_HOST,
    FakeClock,
    UniverseAdapter,
    mock_session,
)


def make_client(adapter, clock, cache=None, offline=False, retry=RetryPolicy(), **auth):
    return SourceClient(
        "semantic_scholar",
        f"http://{SCHOLAR_HOST}",
        TokenBucket(5.0, clock=clock, sleep=clock.sleep),
        retry=retry,
        session=mock_session(adapter),
        cache=cache,
        offline=offline,
        sleep=clock.sleep,
        **auth,
    )


class TestTokenBucket(unittest.TestCase):
    def test_rate_is_respected(self):
        clock = FakeClock()
        bucket = TokenBucket(2.0, capacity=3, clock=clock, sleep=clock.sleep)
        stamps = []
        for _ in range(20):
            bucket.acquire()
            stamps.append(clock())
        self.assertEqual(stamps[:3], [1000.0] * 3)
        for i, start in enumerate(stamps):
            in_window = [s for s in stamps[i:] if s < start + 1.0]
            self.assertLessEqual(len(in_window), 3 + 2)
        self.assertAlmostEqual(stamps[-1] - stamps[0], (20 - 3) / 2.0)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            TokenBucket(0)
        with self.assertRaises(ValueError):
            TokenBucket(1.0, capacity=0.5)


class TestSourceClient(unittest.TestCase):
    def setUp(self):
        self.clock = FakeClock()

    def test_retries_throttling(self):
        adapter = UniverseAdapter(throttle_first=2, clock=self.clock)
        client = make_client(adapter, self.clock)
        paper = client.get("paper/DOI:10.1000/alpha")
        self.assertEqual(paper["paperId"], "PA")
        self.assertEqual(client.requests, 3)
        self.assertEqual(client.retries, 2)

    def test_gives_up(self):
        adapter = UniverseAdapter(throttle_first=10, clock=self.clock)
        client = make_client(adapter, self.clock, retry=RetryPolicy(max_attempts=3))
        with self.assertRaises(RateLimitedError):
            client.get("paper/PA")
        self.assertEqual(client.requests, 3)

    def test_server_errors_are_transient(self):
        adapter = UniverseAdapter(down=(SCHOLAR_HOST,), clock=self.clock)
        client = make_client(adapter, self.clock, retry=RetryPolicy(max_attempts=2))
        with self.assertRaises(TransientSourceError):
            client.get("paper/PA")
        self.assertEqual(client.requests, 2)

    def test_auth_is_not_retried(self):
        adapter = UniverseAdapter(auth_fail=(SCHOLAR_HOST,), clock=self.clock)
        client = make_client(adapter, self.clock)
        with self.assertRaises(AuthenticationError):
            client.get("paper/PA")
        self.assertEqual(client.requests, 1)

    def test_credentials_stay_out_of_cache(self):
        adapter = UniverseAdapter(clock=self.clock)
        cache = ResponseCache()
        client = make_client(
            adapter, self.clock, cache, headers={"x-api-key": "s3cret"}, auth_params={"key": "k"}
        )
        client.get("paper/PA", {"fields": "title"})
        host, path, params, _ = adapter.log[0]
        self.assertEqual(params["header:x-api-key"], "s3cret")
        self.assertEqual(params["key"], "k")
        key = request_key("paper/PA", {"fields": "title"})
        self.assertEqual(key, "GET paper/PA?fields=title")
        self.assertIsNotNone(cache.get("semantic_scholar", key))
        self.assertEqual(len(cache), 1)

    def test_not_found_is_cached(self):
        adapter = UniverseAdapter(clock=self.clock)
        cache = ResponseCache()
        client = make_client(adapter, self.clock, cache)
        for _ in range(2):
            with self.assertRaises(NotFoundError):
                client.get("paper/DOI:10.9999/unknown")
        self.assertEqual(len(adapter.log), 1)

    def test_offline(self):
        adapter = UniverseAdapter(clock=self.clock)
        with tempfile.TemporaryDirectory() as tmp:
            cache = ResponseCache(str(Path(tmp) / "cache.sqlite"))
            make_client(adapter, self.clock, cache).get("paper/PB")
            offline = make_client(adapter, self.clock, cache, offline=True)
            self.assertEqual(offline.get("paper/PB")["title"], "BetaScenes: Urban Scenes")
            with self.assertRaises(OfflineCacheMiss):
                offline.get("paper/PA")
            cache.close()
        self.assertEqual(len(adapter.log), 1)
        self.assertEqual(offline.requests, 0)

    def test_invalid_json_is_not_cached(self):
        adapter = UniverseAdapter(garble_first=1, clock=self.clock)
        with tempfile.TemporaryDirectory() as tmp:
            cache = ResponseCache(str(Path(tmp) / "cache.sqlite"))
            client = make_client(adapter, self.clock, cache)
            with self.assertRaises(MalformedResponseError) as ctx:
                client.get("paper/PB")
            self.assertIsInstance(ctx.exception, SourceError)
            self.assertEqual(len(cache), 0)
            self.assertEqual(client.get("paper/PB")["paperId"], "PB")
            offline = make_client(adapter, self.clock, cache, offline=True)
            self.assertEqual(offline.get("paper/PB")["paperId"], "PB")
            cache.close()
        self.assertEqual(len(adapter.log), 2)


class TestRequestKey(unittest.TestCase):
    def test_sorted_params(self):
        self.assertEqual(
            request_key("p", {"limit": 2, "fields": "a,b"}),
            request_key("p", {"fields": "a,b", "limit": 2}),
        )
        self.assertEqual(request_key("p"), "GET p")
