"""Ingress/egress adapters and the pipeline runner.

Records travel as UTF-8 newline-delimited JSON objects over files, standard
streams, or a single TCP connection per direction. Three activities run
concurrently: an ingress reader, the sequential engine loop, and an egress
writer, connected by two bounded queues. The reader blocks when its queue
fills, so no record is ever dropped due to queue pressure.
"""

from __future__ import annotations

import json
import queue
import socket
import sys
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, replace
from typing import IO, Any, Iterator

from .categorizer import CategoryDictionary, encode
from .engine import Engine, ReleasedTuple
from .errors import ConfigError, ParseError, StreamAnonError
from .model import AnonConfig, ReductionConfig, parse_message
from .reduction import Drop, DropKind, apply_pipeline

DEFAULT_QUEUE_CAPACITY = 10_000

_SENTINEL = object()


@dataclass(frozen=True)
class Endpoint:
    """One side of the pipeline: stdio, a file, or a TCP peer."""

    kind: str  # "std" | "file" | "tcp-listen" | "tcp-connect" | "stream"
    path: str | None = None
    host: str | None = None
    port: int | None = None
    stream: IO[str] | None = None  # pre-opened text stream, used by tests

    @staticmethod
    def parse(spec: str, direction: str) -> "Endpoint":
        """Parse an endpoint spec: stdin, stdout, file:<path>,
        tcp-listen:<host>:<port>, tcp:<host>:<port>."""
        if spec in ("stdin", "stdout"):
            expected = "stdin" if direction == "ingress" else "stdout"
            if spec != expected:
                raise ConfigError(f"{spec} is not usable for {direction}")
            return Endpoint("std")
        if spec.startswith("file:"):
            return Endpoint("file", path=spec[len("file:"):])
        for prefix, kind in (("tcp-listen:", "tcp-listen"), ("tcp:", "tcp-connect")):
            if spec.startswith(prefix):
                rest = spec[len(prefix):]
                host, sep, port = rest.rpartition(":")
                if not sep or not host:
                    raise ConfigError(f"bad endpoint spec {spec!r}")
                try:
                    return Endpoint(kind, host=host, port=int(port))
                except ValueError:
                    raise ConfigError(f"bad port in endpoint spec {spec!r}") from None
        raise ConfigError(f"unrecognized endpoint spec {spec!r}")

    @contextmanager
    def open(self, direction: str) -> Iterator[IO[str]]:
        if self.kind == "stream":
            assert self.stream is not None
            yield self.stream
            return
        if self.kind == "std":
            yield sys.stdin if direction == "ingress" else sys.stdout
            return
        if self.kind == "file":
            assert self.path is not None
            mode = "r" if direction == "ingress" else "w"
            with open(self.path, mode, encoding="utf-8") as fh:
                yield fh
            return
        if self.kind == "tcp-listen":
            with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
                server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
                server.bind((self.host, self.port))
                server.listen(1)
                conn, _addr = server.accept()
                with conn, conn.makefile("rw", encoding="utf-8", newline="\n") as fh:
                    yield fh
            return
        if self.kind == "tcp-connect":
            with socket.create_connection((self.host, self.port)) as conn:
                with conn.makefile("rw", encoding="utf-8", newline="\n") as fh:
                    yield fh
            return
        raise ConfigError(f"unknown endpoint kind {self.kind!r}")


@dataclass
class RunReport:
    """Message accounting and timing aggregates for one pipeline run."""

    ingested: int = 0
    parse_dropped: int = 0
    filter_dropped: int = 0
    type_dropped: int = 0
    released: int = 0
    suppressed: int = 0
    wall_seconds: float = 0.0
    mean_delay_seconds: float | None = None
    median_delay_seconds: float | None = None
    error: str | None = None

    def conserved(self) -> bool:
        return self.ingested == (
            self.parse_dropped + self.filter_dropped + self.type_dropped + self.released
        )

    def to_document(self) -> dict[str, Any]:
        return {
            "ingested": self.ingested,
            "parse_dropped": self.parse_dropped,
            "filter_dropped": self.filter_dropped,
            "type_dropped": self.type_dropped,
            "released": self.released,
            "suppressed": self.suppressed,
            "wall_seconds": self.wall_seconds,
            "mean_delay_seconds": self.mean_delay_seconds,
            "median_delay_seconds": self.median_delay_seconds,
            "error": self.error,
        }


def format_released(
    rt: ReleasedTuple,
    anon: AnonConfig,
    dictionary: CategoryDictionary | None = None,
    decode_categories: bool = False,
) -> str:
    """One egress line: non-QI attributes verbatim, QIs as interval or
    category-list objects, plus the cluster id and suppression marker."""
    categorical = set(anon.non_categorized_attributes)
    doc: dict[str, Any] = dict(rt.attributes)
    for attr, g in rt.generalization:
        if attr in categorical:
            ids = list(g)  # type: ignore[arg-type]
            if decode_categories:
                assert dictionary is not None
                doc[attr] = {"categories": [dictionary.decode(attr, i) for i in ids]}
            else:
                doc[attr] = {"categories": ids}
        else:
            doc[attr] = {"min": g[0], "max": g[1]}  # type: ignore[index]
    doc["_cluster"] = rt.cluster_id
    doc["_suppressed"] = rt.suppressed
    return json.dumps(doc, separators=(",", ":"))


class _Pipeline:
    """Reader / engine / writer threads sharing one report and stop flag."""

    def __init__(
        self,
        anon: AnonConfig,
        red: ReductionConfig,
        queue_capacity: int,
        decode_categories: bool,
    ):
        self.anon = anon
        self.red = red
        self.decode_categories = decode_categories
        self.dictionary = CategoryDictionary()
        self.engine = Engine(anon)
        self.report = RunReport()
        self.in_queue: queue.Queue = queue.Queue(maxsize=queue_capacity)
        self.out_queue: queue.Queue = queue.Queue(maxsize=queue_capacity)
        self.stop = threading.Event()
        self.failure: str | None = None
        self.delays_ns: list[int] = []

    def _fail(self, message: str) -> None:
        if self.failure is None:
            self.failure = message
        self.stop.set()

    def read_loop(self, fh: IO[str]) -> None:
        try:
            for line in fh:
                if self.stop.is_set():
                    break
                self.report.ingested += 1
                try:
                    msg = parse_message(line, self.report.ingested - 1, time.monotonic_ns())
                except ParseError:
                    self.report.parse_dropped += 1
                    continue
                self._put(self.in_queue, msg)
        except OSError as exc:
            self._fail(f"ingress failed: {exc}")
        finally:
            self._put(self.in_queue, _SENTINEL)

    def engine_loop(self) -> None:
        try:
            # the engine's arrival index counts messages that survive
            # reduction, so drops do not leave gaps in the delta clock
            engine_seq = 0
            while True:
                item = self._get(self.in_queue)
                if item is _SENTINEL:
                    break
                if item is None:
                    return  # stopped mid-run
                outcome = apply_pipeline(item, self.red)
                if isinstance(outcome, Drop):
                    if outcome.kind is DropKind.TYPE_MISMATCH:
                        self.report.type_dropped += 1
                    else:
                        self.report.filter_dropped += 1
                    continue
                msg = encode(outcome, self.dictionary, self.anon.non_categorized_attributes)
                msg = replace(msg, seq=engine_seq)
                engine_seq += 1
                for rt in self.engine.ingest(msg):
                    self._put(self.out_queue, rt)
            if not self.stop.is_set():
                for rt in self.engine.flush():
                    self._put(self.out_queue, rt)
        except StreamAnonError as exc:
            self._fail(str(exc))
        finally:
            self.report.type_dropped += self.engine.type_dropped
            self._put(self.out_queue, _SENTINEL)

    def write_loop(self, fh: IO[str]) -> None:
        try:
            while True:
                item = self._get(self.out_queue)
                if item is _SENTINEL or item is None:
                    break
                line = format_released(
                    item, self.anon, self.dictionary, self.decode_categories
                )
                fh.write(line + "\n")
                self.report.released += 1
                if item.suppressed:
                    self.report.suppressed += 1
                self.delays_ns.append(item.release_ns - item.arrival_ns)
            fh.flush()
        except (OSError, ValueError) as exc:
            self._fail(f"egress failed: {exc}")

    def _put(self, q: queue.Queue, item: Any) -> None:
        # bounded put that gives up once the pipeline is stopping
        while True:
            try:
                q.put(item, timeout=0.05)
                return
            except queue.Full:
                if self.stop.is_set():
                    return

    def _get(self, q: queue.Queue) -> Any:
        # returns None once the pipeline is stopping and the queue stays empty
        while True:
            try:
                return q.get(timeout=0.05)
            except queue.Empty:
                if self.stop.is_set():
                    return None


def run_pipeline(
    ingress: Endpoint,
    egress: Endpoint,
    anon: AnonConfig,
    red: ReductionConfig,
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
    decode_categories: bool = False,
) -> tuple[RunReport, CategoryDictionary]:
    """Run the full Ingress -> Reduction -> Anonymization -> Egress pipeline.

    Blocks until the ingress stream ends (the engine is then flushed) or an
    endpoint fails, in which case the report carries the error and whatever
    counts were reached.
    """
    pipeline = _Pipeline(anon, red, queue_capacity, decode_categories)
    started = time.monotonic()
    with ingress.open("ingress") as in_fh, egress.open("egress") as out_fh:
        reader = threading.Thread(target=pipeline.read_loop, args=(in_fh,), daemon=True)
        engine = threading.Thread(target=pipeline.engine_loop, daemon=True)
        writer = threading.Thread(target=pipeline.write_loop, args=(out_fh,), daemon=True)
        reader.start()
        engine.start()
        writer.start()
        reader.join()
        engine.join()
        writer.join()
    report = pipeline.report
    report.wall_seconds = time.monotonic() - started
    report.error = pipeline.failure
    if pipeline.delays_ns:
        ordered = sorted(pipeline.delays_ns)
        report.mean_delay_seconds = sum(ordered) / len(ordered) / 1e9
        report.median_delay_seconds = ordered[len(ordered) // 2] / 1e9
    return report, pipeline.dictionary
