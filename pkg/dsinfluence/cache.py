# -*- coding: utf-8 -*-
"""
On-disk cache of source responses, keyed by (source, request).

Every response an online ingest receives is stored, so an offline ingest can
replay it without touching the network.
"""
import threading
from pathlib import Path
from typing import Optional, Tuple

from loguru import logger
from pony.orm import Database, LongStr, PrimaryKey, Required, db_session


def define_entities(db: Database):
    class Response(db.Entity):
        """A cached response body.

        Attributes:
             source (str): name of the metadata source
             request (str): canonical request line, without credentials
             status (int): http status code
             body (str): response body as received
        """

        source = Required(str)
        request = Required(str)
        status = Required(int)
        body = Required(LongStr)
        PrimaryKey(source, request)

    return Response


def upsert(cls, identify: dict, defaults: dict = None):
    """
    Retrieves and updates or creates object.
    Args:
        cls: The Entity type to produce.
        identify: the fields used to identify the object
        defaults: the fields to update
    Returns:
        Instance, created
    """
    defaults = defaults or {}
    obj = cls.get(**identify)
    if obj:
        if defaults:
            obj.set(**defaults)
        return obj, False
    return cls(**identify, **defaults), True


class ResponseCache:
    """
    Responses stored in an sqlite file. An in-memory cache is only visible
    to the thread that created it.
    """

    def __init__(self, location: str = ":memory:"):
        if location != ":memory:":
            location = str(Path(location).resolve())
        self.location = location
        self.db = Database()
        self.Response = define_entities(self.db)
        self.db.bind("sqlite", location, create_db=True)
        self.db.generate_mapping(create_tables=True)
        self._lock = threading.Lock()
        logger.debug(f"response cache bound to {location}")

    def get(self, source: str, request: str) -> Optional[Tuple[int, str]]:
        with self._lock, db_session:
            hit = self.Response.get(source=source, request=request)
            if hit is None:
                return None
            return hit.status, hit.body

    def put(self, source: str, request: str, status: int, body: str):
        with self._lock, db_session:
            upsert(
                self.Response,
                {"source": source, "request": request},
                {"status": status, "body": body},
            )

    def __len__(self):
        with self._lock, db_session:
            return self.Response.select().count()

    def close(self):
        self.db.disconnect()
