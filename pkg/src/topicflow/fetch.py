"""Remote literature harvesting client.

Talks to a paged JSON search endpoint and verifies the collection criterion
client-side (query term present in title or abstract, year in range, language
declared). Every page response is cached on disk, so a rerun replays from
cache without touching the network; downstream stages only ever read the
archive file written by `save_archive`.

Wire format per page (GET, params query/year_from/year_to/retstart/retmax):

    {"records": [{"id", "title", "abstract", "year", "language"}, ...],
     "total": <int>}
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import requests

from .corpus import YEAR_RANGE, RawRecord
from .errors import FetchParseError, RetriableFetchError

DEFAULT_PAGE_SIZE = 200
DEFAULT_MAX_RETRIES = 3
RETRY_BACKOFF_SECONDS = 1.0


def _cache_key(endpoint, query, year_range, start, size) -> str:
    blob = json.dumps([endpoint, query, list(year_range), start, size],
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _parse_record(obj, position: int) -> RawRecord:
    try:
        return RawRecord(id=str(obj["id"]), title=str(obj["title"]),
                         abstract=str(obj.get("abstract") or ""),
                         year=int(obj["year"]),
                         language=str(obj.get("language") or ""))
    except (KeyError, TypeError, ValueError) as exc:
        ident = obj.get("id", f"<record #{position}>") if isinstance(obj, dict) \
            else f"<record #{position}>"
        raise FetchParseError(f"malformed record {ident}: {exc}") from exc


def _matches(rec: RawRecord, query: str, year_range) -> bool:
    q = query.lower()
    if q not in rec.title.lower() and q not in rec.abstract.lower():
        return False
    if not year_range[0] <= rec.year <= year_range[1]:
        return False
    if not YEAR_RANGE[0] <= rec.year <= YEAR_RANGE[1]:
        return False
    return bool(rec.language.strip())


def _get_page(session, endpoint, params, retries, start):
    last_exc = None
    for attempt in range(retries):
        try:
            resp = session.get(endpoint, params=params, timeout=30)
            if resp.status_code >= 500:
                last_exc = RuntimeError(f"server returned {resp.status_code}")
            else:
                resp.raise_for_status()
                return resp.json()
        except (requests.RequestException, ValueError) as exc:
            last_exc = exc
        if attempt + 1 < retries:
            time.sleep(RETRY_BACKOFF_SECONDS * (attempt + 1))
    raise RetriableFetchError(
        f"page at offset {start} failed after {retries} attempts: {last_exc}",
        cursor=start)


def fetch_records(query: str, year_range: tuple[int, int], endpoint: str,
                  cache_dir=None, page_size: int = DEFAULT_PAGE_SIZE,
                  max_retries: int = DEFAULT_MAX_RETRIES,
                  session=None) -> list[RawRecord]:
    """Harvest every record matching `query` within `year_range`.

    Paginates transparently; each page is cached under `cache_dir` keyed by
    (endpoint, query, range, offset), making reruns offline-reproducible.
    Transient failures raise RetriableFetchError carrying the page cursor.
    """
    if not query:
        raise ValueError("query must be nonempty")
    own_session = session is None
    if own_session:
        session = requests.Session()
    cache = Path(cache_dir) if cache_dir else None
    if cache:
        cache.mkdir(parents=True, exist_ok=True)

    records: list[RawRecord] = []
    seen: set[str] = set()
    start, total = 0, None
    try:
        while total is None or start < total:
            params = {"query": query, "year_from": year_range[0],
                      "year_to": year_range[1], "retstart": start,
                      "retmax": page_size}
            page = None
            cache_file = (cache / (_cache_key(endpoint, query, year_range,
                                              start, page_size) + ".json")
                          if cache else None)
            if cache_file is not None and cache_file.exists():
                page = json.loads(cache_file.read_text(encoding="utf-8"))
            if page is None:
                page = _get_page(session, endpoint, params, max_retries, start)
                if cache_file is not None:
                    cache_file.write_text(json.dumps(page, sort_keys=True),
                                          encoding="utf-8")
            if not isinstance(page, dict) or "records" not in page:
                raise FetchParseError(
                    f"page at offset {start} lacks a 'records' field")
            batch = page["records"]
            total = int(page.get("total", start + len(batch)))
            for pos, obj in enumerate(batch):
                rec = _parse_record(obj, start + pos)
                if rec.id in seen or not _matches(rec, query, year_range):
                    continue
                seen.add(rec.id)
                records.append(rec)
            if not batch and start < total:
                break  # defensive: server advertised more than it serves
            start += len(batch)
    finally:
        if own_session:
            session.close()
    return records
