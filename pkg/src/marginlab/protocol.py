"""ASCII line protocol for driving a real device, plus a loopback fake.

The host is in charge: it sends one command at a time over a byte stream
and waits for the reply.  Frames are newline-terminated ASCII:

    commands    "SETV <mv>\\n"            set supply step
                "SETF <khz>\\n"           set cluster frequency
                "RUN <seed_hex> <N> <R>\\n"  run the self-checking
                                          workload R times at size N
                "RST\\n"                  reserved: reset after lockup;
                                          semantics on real hardware are
                                          out of scope here
    responses   "OK\\n"                   command accepted
                "VAL <16 hex digits>\\n"  one workload's last value
                "ERR <code>\\n"           command rejected

seed_hex is exactly 16 hex digits so embedded parsers need no length
logic.  A RUN elicits R VAL lines, one per repetition; a device that
locks up goes silent, which the host observes as a timeout.

No serial-port driver lives here.  The hardware backend is exercised
against an in-memory loopback device that obeys the same protocol and is
driven by the simulated device model.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .backend import (
    RunRequest,
    RunResponse,
    derive_run_seed,
    make_request,
    simulated_run,
)
from .errors import BackendFailure, MalformedFrame
from .model import DeviceModelParams, OperatingPoint, SUPPLY_STEPS_MV
from .workloads import PrngSpec, workload_duration

_MAX_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SetVoltage:
    voltage_mv: int


@dataclass(frozen=True)
class SetFrequency:
    freq_khz: int


@dataclass(frozen=True)
class RunCommand:
    seed: int
    n_items: int
    repetitions: int


@dataclass(frozen=True)
class Reset:
    pass


@dataclass(frozen=True)
class OkResponse:
    pass


@dataclass(frozen=True)
class ValueResponse:
    value: int


@dataclass(frozen=True)
class ErrResponse:
    code: str


Command = SetVoltage | SetFrequency | RunCommand | Reset
Response = OkResponse | ValueResponse | ErrResponse


def encode_command(cmd: Command) -> bytes:
    if isinstance(cmd, SetVoltage):
        return f"SETV {cmd.voltage_mv}\n".encode("ascii")
    if isinstance(cmd, SetFrequency):
        return f"SETF {cmd.freq_khz}\n".encode("ascii")
    if isinstance(cmd, RunCommand):
        return f"RUN {cmd.seed:016X} {cmd.n_items} {cmd.repetitions}\n".encode("ascii")
    if isinstance(cmd, Reset):
        return b"RST\n"
    raise TypeError(f"not a command: {cmd!r}")


def encode_response(resp: Response) -> bytes:
    if isinstance(resp, OkResponse):
        return b"OK\n"
    if isinstance(resp, ValueResponse):
        return f"VAL {resp.value:016X}\n".encode("ascii")
    if isinstance(resp, ErrResponse):
        return f"ERR {resp.code}\n".encode("ascii")
    raise TypeError(f"not a response: {resp!r}")


def _split_frame(frame: bytes) -> list[tuple[str, int]]:
    """Tokens with their byte offsets; validates framing."""
    if not frame.endswith(b"\n"):
        raise MalformedFrame("frame must end with newline", len(frame))
    body = frame[:-1]
    if b"\n" in body:
        raise MalformedFrame("interior newline", body.index(b"\n"))
    try:
        text = body.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedFrame("non-ASCII byte", exc.start) from exc
    tokens: list[tuple[str, int]] = []
    offset = 0
    for raw in text.split(" "):
        if raw:
            tokens.append((raw, offset))
        offset += len(raw) + 1
    if not tokens:
        raise MalformedFrame("empty frame", 0)
    return tokens


def _parse_uint(token: str, offset: int, what: str, maximum: int) -> int:
    if not token.isdigit():
        raise MalformedFrame(f"{what} must be a decimal integer", offset)
    value = int(token)
    if value > maximum:
        raise MalformedFrame(f"{what} out of range", offset)
    return value


def _expect_arity(tokens: list[tuple[str, int]], n: int, frame_len: int) -> None:
    if len(tokens) != n:
        bad = tokens[n][1] if len(tokens) > n else frame_len - 1
        raise MalformedFrame(f"expected {n} tokens, got {len(tokens)}", bad)


def decode_command(frame: bytes) -> Command:
    tokens = _split_frame(frame)
    keyword, _ = tokens[0]
    if keyword == "SETV":
        _expect_arity(tokens, 2, len(frame))
        return SetVoltage(_parse_uint(tokens[1][0], tokens[1][1], "voltage", 10_000))
    if keyword == "SETF":
        _expect_arity(tokens, 2, len(frame))
        return SetFrequency(_parse_uint(tokens[1][0], tokens[1][1], "frequency", 10**9))
    if keyword == "RUN":
        _expect_arity(tokens, 4, len(frame))
        seed_token, seed_off = tokens[1]
        if len(seed_token) != 16 or any(c not in "0123456789abcdefABCDEF" for c in seed_token):
            raise MalformedFrame("seed must be exactly 16 hex digits", seed_off)
        n = _parse_uint(tokens[2][0], tokens[2][1], "item count", _MAX_U64)
        r = _parse_uint(tokens[3][0], tokens[3][1], "repetitions", _MAX_U64)
        return RunCommand(seed=int(seed_token, 16), n_items=n, repetitions=r)
    if keyword == "RST":
        _expect_arity(tokens, 1, len(frame))
        return Reset()
    raise MalformedFrame(f"unknown command {keyword!r}", tokens[0][1])


def decode_response(frame: bytes) -> Response:
    tokens = _split_frame(frame)
    keyword, _ = tokens[0]
    if keyword == "OK":
        _expect_arity(tokens, 1, len(frame))
        return OkResponse()
    if keyword == "VAL":
        _expect_arity(tokens, 2, len(frame))
        token, offset = tokens[1]
        if len(token) != 16 or any(c not in "0123456789abcdefABCDEF" for c in token):
            raise MalformedFrame("value must be exactly 16 hex digits", offset)
        return ValueResponse(int(token, 16))
    if keyword == "ERR":
        _expect_arity(tokens, 2, len(frame))
        code, offset = tokens[1]
        if not code.isalnum():
            raise MalformedFrame("error code must be alphanumeric", offset)
        return ErrResponse(code)
    raise MalformedFrame(f"unknown response {keyword!r}", tokens[0][1])


class FakeDevice:
    """Device-side protocol state machine backed by the simulated model.

    Mirrors the real firmware's contract: after a lockup it goes silent
    for everything except RST.
    """

    def __init__(self, params: DeviceModelParams, campaign_seed: int = 0):
        self.params = params
        self.campaign_seed = campaign_seed
        self.voltage_mv: int | None = None
        self.freq_khz: int | None = None
        self.locked_up = False

    def handle(self, frame: bytes) -> list[bytes]:
        """Responses the device emits for one command frame."""
        try:
            cmd = decode_command(frame)
        except MalformedFrame:
            return [encode_response(ErrResponse("PARSE"))]
        if self.locked_up and not isinstance(cmd, Reset):
            return []  # silent until reset
        if isinstance(cmd, Reset):
            self.locked_up = False
            return [encode_response(OkResponse())]
        if isinstance(cmd, SetVoltage):
            if cmd.voltage_mv not in SUPPLY_STEPS_MV:
                return [encode_response(ErrResponse("BADV"))]
            self.voltage_mv = cmd.voltage_mv
            return [encode_response(OkResponse())]
        if isinstance(cmd, SetFrequency):
            if cmd.freq_khz <= 0:
                return [encode_response(ErrResponse("BADF"))]
            self.freq_khz = cmd.freq_khz
            return [encode_response(OkResponse())]
        if self.voltage_mv is None or self.freq_khz is None:
            return [encode_response(ErrResponse("NOCFG"))]
        out: list[bytes] = []
        op = OperatingPoint(self.voltage_mv, self.freq_khz)
        for rep in range(cmd.repetitions):
            spec = PrngSpec(cmd.seed, cmd.n_items)
            req = make_request(self.params, op, spec)
            rng_seed = derive_run_seed(
                self.campaign_seed, op.voltage_mv, op.freq_khz, cmd.n_items, rep
            )
            resp = simulated_run(self.params, req, rng_seed)
            if resp.timed_out:
                self.locked_up = True
                break  # device hangs; remaining repetitions never answer
            out.append(encode_response(ValueResponse(resp.value)))
        return out


class LoopbackTransport:
    """In-memory byte link between the host backend and a FakeDevice."""

    def __init__(self, device: FakeDevice):
        self.device = device
        self._inbound: deque[bytes] = deque()

    def send(self, frame: bytes) -> None:
        self._inbound.extend(self.device.handle(frame))

    def recv_line(self, timeout_s: float) -> bytes | None:
        # A queue miss is the loopback analog of a wall-clock timeout.
        if self._inbound:
            return self._inbound.popleft()
        return None


class SerialHardwareBackend:
    """Host-side driver speaking the wire protocol over a transport.

    Satisfies the same Backend contract as SimulatedBackend but is
    strictly sequential.  Elapsed time uses the modeled duration because
    the loopback link has no physical clock; a real deployment would
    replace that with measured timestamps and attach a power source
    callback fed by ingest_power_trace.
    """

    def __init__(self, transport: LoopbackTransport, params: DeviceModelParams):
        self.transport = transport
        self.params = params
        self._voltage_mv: int | None = None
        self._freq_khz: int | None = None

    def _command(self, cmd: Command, timeout_s: float) -> Response | None:
        self.transport.send(encode_command(cmd))
        line = self.transport.recv_line(timeout_s)
        return None if line is None else decode_response(line)

    def _configure(self, op: OperatingPoint, timeout_s: float) -> None:
        for cached, value, cmd in (
            ("_voltage_mv", op.voltage_mv, SetVoltage(op.voltage_mv)),
            ("_freq_khz", op.freq_khz, SetFrequency(op.freq_khz)),
        ):
            if getattr(self, cached) == value:
                continue
            resp = self._command(cmd, timeout_s)
            if not isinstance(resp, OkResponse):
                raise BackendFailure(f"device rejected {cmd}: {resp}")
            setattr(self, cached, value)

    def run(self, req: RunRequest, rng_seed: int) -> RunResponse:
        # rng_seed is unused on real hardware: physics rolls the dice.
        self._configure(req.op, req.timeout_s)
        self.transport.send(
            encode_command(RunCommand(seed=req.spec.seed, n_items=req.spec.n_items, repetitions=1))
        )
        line = self.transport.recv_line(req.timeout_s)
        duration = workload_duration(req.spec, req.op, self.params.cycles_per_item)
        if line is None:
            return RunResponse(
                value=None, timed_out=True, elapsed_s=req.timeout_s, avg_power_w=0.0
            )
        resp = decode_response(line)
        if not isinstance(resp, ValueResponse):
            raise BackendFailure(f"device rejected run: {resp}")
        return RunResponse(
            value=resp.value, timed_out=False, elapsed_s=duration, avg_power_w=0.0
        )
