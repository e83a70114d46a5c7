"""
Scripted academic-graph, Altmetric and catalogue servers mounted as a
requests transport adapter, plus a fake clock.
"""
import json
import threading
from pathlib import Path
from typing import Dict, List, Optional, Tuple
from urllib.parse import parse_qs, unquote, urlsplit

import requests
from requests.adapters import BaseAdapter

FIXTURES = Path(__file__).parent / "fixtures"
SCHOLAR_HOST = "s2.mock"
ALTMETRIC_HOST = "altmetric.mock"
CATALOGUE_HOST = "catalogue.mock"


def fixture(name: str) -> Path:
    return FIXTURES / name


def read_fixture(name: str) -> str:
    return fixture(name).read_text(encoding="utf-8")


class FakeClock:
    """Monotonic clock advanced only by sleep"""

    def __init__(self, start: float = 1000.0):
        self.now = start
        self.sleeps: List[float] = []
        self._lock = threading.Lock()

    def __call__(self) -> float:
        with self._lock:
            return self.now

    def sleep(self, seconds: float):
        with self._lock:
            self.sleeps.append(seconds)
            self.now += max(0.0, seconds)


class UniverseAdapter(BaseAdapter):
    """
    Serves the fixture universes. List endpoints are paginated with
    page_size items per page and an offset cursor.

    Args:
        throttle_first: answer this many requests per host with 429 first
        down: hosts answering every request with 503
        auth_fail: hosts answering every request with 401
        clock: timestamps recorded per request
        garble_first: answer this many requests with a body that is not JSON
        anonymous: paper ids whose lookup answers without a paperId
    """

    def __init__(
        self,
        page_size: int = 2,
        throttle_first: int = 0,
        down: Tuple[str, ...] = (),
        auth_fail: Tuple[str, ...] = (),
        clock: Optional[FakeClock] = None,
        garble_first: int = 0,
        anonymous: Tuple[str, ...] = (),
    ):
        super().__init__()
        self.scholar = json.loads(read_fixture("scholar_universe.json"))
        self.altmetric = json.loads(read_fixture("altmetric_universe.json"))
        self.catalogue = read_fixture("ad_datasets.json")
        self.page_size = page_size
        self.throttle: Dict[str, int] = {
            SCHOLAR_HOST: throttle_first,
            ALTMETRIC_HOST: throttle_first,
        }
        self.down = down
        self.auth_fail = auth_fail
        self.clock = clock
        self.garble = garble_first
        self.anonymous = anonymous
        self.log: List[Tuple[str, str, dict, Optional[float]]] = []
        self._lock = threading.Lock()

    def requests_to(self, host: str) -> List[Tuple[str, str, dict, Optional[float]]]:
        return [entry for entry in self.log if entry[0] == host]

    def send(self, request, **kwargs):
        parts = urlsplit(request.url)
        host = parts.netloc
        path = unquote(parts.path).lstrip("/")
        params = {key: values[0] for key, values in parse_qs(parts.query).items()}
        params.update({f"header:{k}": v for k, v in request.headers.items() if k == "x-api-key"})
        with self._lock:
            self.log.append((host, path, params, self.clock() if self.clock else None))
            if host in self.down:
                return self._response(request, 503, {"error": "unavailable"})
            if host in self.auth_fail:
                return self._response(request, 401, {"error": "unauthorized"})
            if self.throttle.get(host, 0) > 0:
                self.throttle[host] -= 1
                return self._response(request, 429, {"error": "slow down"})
            if self.garble > 0:
                self.garble -= 1
                return self._response(request, 200, "<html>maintenance</html>")
        if host == SCHOLAR_HOST:
            status, payload = self._scholar(path, params)
        elif host == ALTMETRIC_HOST:
            status, payload = self._altmetric(path)
        elif host == CATALOGUE_HOST:
            return self._response(request, 200, self.catalogue)
        else:
            status, payload = 404, {}
        return self._response(request, status, payload)

    def close(self):
        pass

    def _response(self, request, status: int, payload) -> requests.Response:
        response = requests.Response()
        response.status_code = status
        body = payload if isinstance(payload, str) else json.dumps(payload)
        response._content = body.encode("utf-8")
        response.headers["Content-Type"] = "application/json"
        response.encoding = "utf-8"
        response.url = request.url
        response.request = request
        return response

    def _stub(self, paper_id: str) -> dict:
        paper = self.scholar["papers"][paper_id]
        return {"paperId": paper_id, "title": paper["title"], "year": paper["year"]}

    def _page(self, items: List[dict], params: dict) -> dict:
        offset = int(params.get("cursor", 0))
        page = {"offset": offset, "data": items[offset : offset + self.page_size]}
        if offset + self.page_size < len(items):
            page["next"] = offset + self.page_size
        return page

    def _scholar(self, path: str, params: dict):
        papers = self.scholar["papers"]
        if path.startswith("author/") and path.endswith("/papers"):
            author = self.scholar["authors"].get(path[len("author/") : -len("/papers")])
            if author is None:
                return 404, {"error": "author not found"}
            return 200, self._page([self._stub(p) for p in author["papers"]], params)
        if not path.startswith("paper/"):
            return 404, {}
        rest = path[len("paper/") :]
        for suffix, key, field in (
            ("/references", "citedPaper", "references"),
            ("/citations", "citingPaper", "citations"),
        ):
            if rest.endswith(suffix):
                paper = papers.get(rest[: -len(suffix)])
                if paper is None:
                    return 404, {"error": "paper not found"}
                items = [{key: self._stub(p)} for p in paper.get(field, [])]
                return 200, self._page(items, params)
        paper_id = self.scholar["aliases"].get(rest, rest)
        paper = papers.get(paper_id)
        if paper is None:
            return 404, {"error": "paper not found"}
        payload = {
            **self._stub(paper_id),
            "externalIds": paper.get("externalIds", {}),
            "authors": paper.get("authors", []),
        }
        if paper_id in self.anonymous:
            del payload["paperId"]
        return 200, payload

    def _altmetric(self, path: str):
        record = self.altmetric.get(path[len("doi/") :]) if path.startswith("doi/") else None
        if record is None:
            return 404, "Not Found"
        return 200, record


def mock_session(adapter: UniverseAdapter) -> requests.Session:
    session = requests.Session()
    session.mount("http://", adapter)
    return session
