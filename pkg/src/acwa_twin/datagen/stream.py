"""Newline-delimited JSON record stream over TCP.

One producer, any number of subscribers.  Each subscriber has a bounded
queue; a subscriber that falls behind far enough to fill it, or whose
socket errors, is disconnected without slowing the others.
"""

from __future__ import annotations

import asyncio
import logging
import time
from typing import Optional, Sequence

from .dataset import jsonl_line
from .sensors import SensorRecord

log = logging.getLogger(__name__)

QUEUE_LIMIT = 4096
_END = None


class _Subscriber:
    def __init__(self, writer: asyncio.StreamWriter):
        self.writer = writer
        self.queue: asyncio.Queue = asyncio.Queue(QUEUE_LIMIT)
        self.alive = True
        self.task: Optional[asyncio.Task] = None

    async def pump(self) -> None:
        try:
            while True:
                item = await self.queue.get()
                if item is _END:
                    break
                self.writer.write(item)
                await self.writer.drain()
        except (ConnectionError, OSError) as exc:
            log.info("subscriber dropped: %s", exc)
        finally:
            self.alive = False
            self.writer.close()
            try:
                await self.writer.wait_closed()
            except (ConnectionError, OSError):
                pass


class StreamServer:
    """Serve ``records`` to subscribers once ``subscribers`` of them have connected.

    ``pace`` scales wall-clock delay per simulated second: 1 is real time,
    0 streams as fast as possible.
    """

    def __init__(
        self,
        records: Sequence[SensorRecord],
        host: str = "127.0.0.1",
        port: int = 0,
        pace: float = 0.0,
        subscribers: int = 1,
        accept_timeout: Optional[float] = None,
    ):
        if pace < 0:
            raise ValueError("pace must be non-negative")
        self.lines = [(r.time, jsonl_line(r).encode("utf-8")) for r in records]
        self.host, self.port = host, port
        self.pace = pace
        self.expected = max(int(subscribers), 0)
        self.accept_timeout = accept_timeout
        self._subs: list[_Subscriber] = []
        self._enough = asyncio.Event()
        self._server: Optional[asyncio.base_events.Server] = None

    async def start(self) -> int:
        try:
            self._server = await asyncio.start_server(self._accept, self.host, self.port)
        except OSError as exc:
            raise OSError(f"cannot bind {self.host}:{self.port}: {exc}") from exc
        self.port = self._server.sockets[0].getsockname()[1]
        if self.expected == 0:
            self._enough.set()
        return self.port

    async def _accept(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        sub = _Subscriber(writer)
        sub.task = asyncio.ensure_future(sub.pump())
        self._subs.append(sub)
        if len(self._subs) >= self.expected:
            self._enough.set()

    def _broadcast(self, item) -> None:
        for sub in self._subs:
            if not sub.alive:
                continue
            try:
                sub.queue.put_nowait(item)
            except asyncio.QueueFull:
                log.info("subscriber too slow, disconnecting")
                sub.alive = False
                sub.writer.close()

    async def produce(self) -> int:
        if self.accept_timeout is None:
            await self._enough.wait()
        else:
            try:
                await asyncio.wait_for(self._enough.wait(), self.accept_timeout)
            except asyncio.TimeoutError:
                pass
        started = time.monotonic()
        t0 = self.lines[0][0] if self.lines else 0.0
        sent = 0
        for t, line in self.lines:
            if self.pace > 0:
                delay = started + (t - t0) * self.pace - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
            self._broadcast(line)
            sent += 1
            if sent % 256 == 0:
                await asyncio.sleep(0)
        self._broadcast(_END)
        tasks = [s.task for s in self._subs if s.task is not None]
        if tasks:
            await asyncio.gather(*tasks, return_exceptions=True)
        return sent

    async def close(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def serve(self) -> int:
        await self.start()
        try:
            return await self.produce()
        finally:
            await self.close()


def serve(records: Sequence[SensorRecord], endpoint: str, pace: float = 0.0, subscribers: int = 1) -> int:
    """Blocking wrapper: bind ``host:port``, stream once to the subscribers, return lines sent."""
    host, _, port = endpoint.rpartition(":")
    server = StreamServer(records, host or "127.0.0.1", int(port), pace, subscribers)
    return asyncio.run(server.serve())
