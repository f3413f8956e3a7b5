"""Classifier backed by a JSON-over-HTTP endpoint.

Request:  ``POST {"text": "<sentence>"}``
Response: ``{"labels": [...]}`` in rank order, or
          ``{"score": s, "magnitude": m}`` which is bucketed into a sentiment
          label.
"""
from __future__ import annotations

import logging
import time
from typing import Callable, Optional

import requests

from .derivation import Sentence
from .oracle import Classifier, MalformedResponse, ScoredOutput, TransportError

log = logging.getLogger(__name__)


class HttpClassifier(Classifier):
    kind = "http"

    def __init__(
        self,
        id: str,
        url: str,
        timeout: float = 10.0,
        retries: int = 3,
        backoff: float = 0.5,
        headers: Optional[dict] = None,
        session: Optional[requests.Session] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        super().__init__(id)
        self.url = url
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.headers = headers or {}
        self.session = session or requests.Session()
        self._sleep = sleep

    def _post(self, text: str) -> requests.Response:
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.post(
                    self.url, json={"text": text}, timeout=self.timeout, headers=self.headers
                )
            except requests.RequestException as exc:
                last = exc
                log.warning("%s: attempt %d failed: %s", self.id, attempt + 1, exc)
                continue
            # 4xx will not get better by retrying
            if resp.status_code >= 500 or resp.status_code == 429:
                last = requests.HTTPError(f"HTTP {resp.status_code}")
                log.warning("%s: attempt %d got HTTP %d", self.id, attempt + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"{self.id}: HTTP {resp.status_code} from {self.url}")
            return resp
        raise TransportError(f"{self.id}: giving up after {self.retries + 1} attempts: {last}")

    def classify(self, sentence: Sentence):
        resp = self._post(sentence.text)
        raw = resp.text
        try:
            payload = resp.json()
        except ValueError:
            raise MalformedResponse(f"{self.id}: response is not JSON", raw) from None
        if not isinstance(payload, dict):
            raise MalformedResponse(f"{self.id}: expected a JSON object", raw)
        if "labels" in payload:
            labels = payload["labels"]
            if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
                raise MalformedResponse(f"{self.id}: 'labels' must be a list of strings", raw)
            return labels
        if "score" in payload:
            try:
                return ScoredOutput(float(payload["score"]), float(payload.get("magnitude", 0.0)))
            except (TypeError, ValueError) as exc:
                raise MalformedResponse(f"{self.id}: bad scored output: {exc}", raw) from None
        raise MalformedResponse(f"{self.id}: neither 'labels' nor 'score' in response", raw)
