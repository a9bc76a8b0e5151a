"""Socket endpoint: gaze sources and layout clients feed session pipelines,
viewers receive live events and metric updates.

The engine is the server; clients identify themselves with a hello frame.
One source per session (single-writer); layout clients may coexist with it.
Viewers get a snapshot (manifest + current metrics) first, then the live
stream.  Registration and snapshot capture happen in one event-loop step so
no event can be lost or duplicated in between.

Each viewer has a bounded outgoing queue; a viewer that cannot keep up is
disconnected rather than back-pressuring ingestion, and broadcasting is a
non-blocking enqueue so the ingest path never waits on a socket.
"""

from __future__ import annotations

import asyncio
import json
import threading
import uuid
from dataclasses import dataclass

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from . import protocol
from .session import SessionConfig, SessionPipeline

VIEWER_QUEUE_LIMIT = 256
_COMPACT = {"separators": (",", ":")}


class _Viewer:
    __slots__ = ("queue", "task")

    def __init__(self, task: asyncio.Task):
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=VIEWER_QUEUE_LIMIT)
        self.task = task


class _SessionHub:
    def __init__(self, session_id: str, participant: str, config: SessionConfig, store_dir):
        self.pipeline = SessionPipeline(
            session_id, participant=participant, config=config, store_dir=store_dir
        )
        self.pipeline.listeners.append(self._on_event)
        self.viewers: set[_Viewer] = set()
        self.source_attached = False
        self.flush_task: asyncio.Task | None = None

    def _on_event(self, msg: dict) -> None:
        if not self.viewers:
            return
        payload = json.dumps(msg, **_COMPACT)
        stalled = []
        for v in self.viewers:
            try:
                v.queue.put_nowait(payload)
            except asyncio.QueueFull:
                stalled.append(v)
        for v in stalled:
            self.viewers.discard(v)
            v.task.cancel()

    def add_viewer(self, task: asyncio.Task | None = None) -> tuple[_Viewer, dict]:
        """Register a viewer and capture its snapshot atomically."""
        if task is None:
            task = asyncio.current_task()
        assert task is not None
        v = _Viewer(task)
        self.viewers.add(v)
        manifest = self.pipeline.manifests[-1] if self.pipeline.manifests else None
        metrics = [
            self.pipeline.state.word_metrics(w) for w in self.pipeline.state.touched_words()
        ]
        return v, protocol.snapshot_msg(manifest, metrics)

    def drop_viewer(self, v: _Viewer) -> None:
        self.viewers.discard(v)


class GazeServer:
    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        config: SessionConfig | None = None,
        store_dir=None,
    ):
        self.host = host
        self.port = port
        self.config = config or SessionConfig()
        self.store_dir = store_dir
        self.hubs: dict[str, _SessionHub] = {}
        self._server = None

    async def start(self) -> int:
        self._server = await serve(self._handler, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        return self.port

    async def stop(self) -> None:
        for hub in self.hubs.values():
            if hub.flush_task is not None:
                hub.flush_task.cancel()
            hub.pipeline.flush()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    def _hub(self, session_id: str, participant: str) -> _SessionHub:
        hub = self.hubs.get(session_id)
        if hub is None:
            hub = _SessionHub(session_id, participant, self.config, self.store_dir)
            interval_s = self.config.flush.interval_us / 1e6
            hub.flush_task = asyncio.create_task(self._flush_loop(hub, interval_s))
            self.hubs[session_id] = hub
        return hub

    @staticmethod
    async def _flush_loop(hub: _SessionHub, interval_s: float) -> None:
        while True:
            await asyncio.sleep(interval_s)
            hub.pipeline.flush()

    async def _handler(self, ws) -> None:
        try:
            raw = await ws.recv()
            msg = json.loads(raw)
            if msg.get("type") != "hello":
                await ws.close(1002, "expected hello")
                return
            role, session_id, participant = protocol.parse_hello(msg)
        except (protocol.ProtocolError, ValueError, TypeError):
            await ws.close(1002, "malformed hello")
            return
        except ConnectionClosed:
            return
        session_id = session_id or uuid.uuid4().hex
        hub = self._hub(session_id, participant)

        if role == "viewer":
            await self._serve_viewer(ws, hub)
            return
        if role == "source":
            if hub.source_attached:
                await ws.close(1008, "session already has a source")
                return
            hub.source_attached = True
        try:
            async for frame in ws:
                hub.pipeline.ingest_text(frame)
        except ConnectionClosed:
            pass
        finally:
            if role == "source":
                hub.source_attached = False
                hub.pipeline.flush()

    async def _serve_viewer(self, ws, hub: _SessionHub) -> None:
        viewer, snapshot = hub.add_viewer()
        # Watch the connection alongside the queue so a closed viewer is
        # reaped promptly even when no events are flowing.
        recv_task: asyncio.Task | None = None
        get_task: asyncio.Task | None = None
        try:
            await ws.send(json.dumps(snapshot, **_COMPACT))
            recv_task = asyncio.create_task(ws.recv())
            get_task = asyncio.create_task(viewer.queue.get())
            while True:
                done, _ = await asyncio.wait(
                    {recv_task, get_task}, return_when=asyncio.FIRST_COMPLETED
                )
                if recv_task in done:
                    break  # client closed (or spoke out of turn): stop serving
                await ws.send(get_task.result())
                get_task = asyncio.create_task(viewer.queue.get())
        except (ConnectionClosed, asyncio.CancelledError):
            pass
        finally:
            hub.drop_viewer(viewer)
            for task in (recv_task, get_task):
                if task is not None and not task.done():
                    task.cancel()
                elif task is not None and task.done() and not task.cancelled():
                    task.exception()  # retrieve, e.g. ConnectionClosed from recv
            try:
                await ws.close()
            except ConnectionClosed:
                pass


@dataclass
class ServerHandle:
    """A server running on a dedicated event-loop thread (tests, tooling)."""

    server: GazeServer
    thread: threading.Thread
    loop: asyncio.AbstractEventLoop
    port: int

    @property
    def uri(self) -> str:
        return f"ws://{self.server.host}:{self.port}"

    def stop(self) -> None:
        fut = asyncio.run_coroutine_threadsafe(self.server.stop(), self.loop)
        fut.result(timeout=10)
        self.loop.call_soon_threadsafe(self.loop.stop)
        self.thread.join(timeout=10)


def start_server_thread(
    config: SessionConfig | None = None,
    store_dir=None,
    host: str = "127.0.0.1",
    port: int = 0,
) -> ServerHandle:
    server = GazeServer(host=host, port=port, config=config, store_dir=store_dir)
    loop = asyncio.new_event_loop()
    started = threading.Event()

    def run() -> None:
        asyncio.set_event_loop(loop)
        loop.run_until_complete(server.start())
        started.set()
        loop.run_forever()

    thread = threading.Thread(target=run, name="gazemetrics-server", daemon=True)
    thread.start()
    if not started.wait(timeout=10):
        raise RuntimeError("server failed to start")
    return ServerHandle(server=server, thread=thread, loop=loop, port=server.port)
